"""Degenerate generalized eigenvalue pencils K z = lambda M z with singular M.

Sparse LU factorization, shift-invert Arnoldi with filtering of infinite and
degenerate modes, a dense QZ oracle, and the symmetric Schur-complement
reduction used for cross-validation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

DENSE_LIMIT = 2000
FINITE_CUTOFF = 1e6
RESIDUAL_TOL = 1e-8
P_ZERO_TOL = 1e-10
_DENSE_SOLVE_LIMIT = 60
_REG_SCALE = 1e-12


class PencilError(RuntimeError):
    """Solver-level failure (non-convergence, size limits, misuse)."""


class SingularMatrixError(PencilError):
    """Structural or numerical singularity met during factorization."""

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class SingularBlockError(PencilError):
    """A block that must be invertible (e.g. C in the Schur reduction) is
    singular."""


@dataclass
class BlockPencil:
    """Assembled generalized eigenproblem with block structure.

    ``ranges`` maps block names to slices of the global vector in order,
    e.g. {'u': ..., 'p': ..., 'w': ..., 'lm': ...}.  ``primary`` names the
    block through which M acts on the eigenvector; it must not vanish for
    a pair to count as an eigensolution.  ``blocks`` optionally keeps the
    constituent matrices ('A', 'B', 'C', 'D', 'Bfull', 'Cfull') for
    validation and the Schur reduction.
    """

    K: sparse.csr_matrix
    M: sparse.csr_matrix
    ranges: dict
    primary: str = "p"
    blocks: dict = field(default_factory=dict)
    spaces: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    @property
    def size(self):
        return self.K.shape[0]

    def split(self, vec):
        return {name: vec[sl] for name, sl in self.ranges.items()}


@dataclass
class SymmetricPencil:
    """Plain symmetric pencil (K, M) with positive-definite M.

    ``kernel_basis`` optionally spans a known exact kernel of K (discrete
    gradients for the curl-curl operator); solvers use it to deflate the
    zero modes.  ``drop_near_zero`` marks spectra whose leading zero
    eigenvalues are meaningless and should be dropped downstream.
    """

    K: sparse.csr_matrix
    M: sparse.csr_matrix
    kernel_basis: sparse.csr_matrix | None = None
    drop_near_zero: bool = False
    space: object = None
    flags: dict = field(default_factory=dict)

    @property
    def size(self):
        return self.K.shape[0]


@dataclass
class EigenSolution:
    """Filtered finite eigenpairs of a block pencil.

    Eigenvalues ascend; every kept pair satisfies the residual bound
    ||K z - lambda M z|| / ((|lambda| + 1) ||z||) <= residual_tol.
    ``discarded`` records (reason, lambda) for filtered candidates.
    """

    eigenvalues: np.ndarray
    vectors: dict
    residuals: np.ndarray
    discarded: list
    meta: dict = field(default_factory=dict)

    @property
    def num_discarded(self):
        return len(self.discarded)

    def component(self, name):
        return self.vectors[name]


def validate_pencil(pencil, tol=1e-13):
    """Construction-time structure checks.

    Verifies that M is nonzero only in the (u-rows x p-columns) block, that
    D equals -B^T up to quadrature roundoff, and that negating the
    off-diagonal blocks of K leaves a symmetric matrix.
    """
    K, M = pencil.K, pencil.M
    scale = max(np.abs(K.data).max() if K.nnz else 1.0, 1.0)
    u, p = pencil.ranges["u"], pencil.ranges["p"]
    coo = M.tocoo()
    outside = ((coo.row < u.start) | (coo.row >= u.stop)
               | (coo.col < p.start) | (coo.col >= p.stop))
    if coo.nnz and np.abs(coo.data[outside]).max(initial=0.0) > 0:
        raise PencilError("M has entries outside the (u, p) block")
    if "B" in pencil.blocks and "D" in pencil.blocks:
        B, D = pencil.blocks["B"], pencil.blocks["D"]
        diff = (D + B.T).tocoo()
        dscale = max(np.abs(B.data).max() if B.nnz else 1.0, 1.0)
        if diff.nnz and np.abs(diff.data).max() > tol * dscale:
            raise PencilError("D != -B^T beyond roundoff")
    S = _negate_off_diagonal(K, list(pencil.ranges.values()))
    asym = (S - S.T).tocoo()
    if asym.nnz and np.abs(asym.data).max() > 1e-14 * scale:
        raise PencilError("off-diagonal-negated K is not symmetric")
    return pencil


def _negate_off_diagonal(K, slices):
    coo = K.tocoo()
    block_of = np.full(K.shape[0], -1, dtype=np.int64)
    for b, sl in enumerate(slices):
        block_of[sl] = b
    sign = np.where(block_of[coo.row] == block_of[coo.col], 1.0, -1.0)
    return sparse.coo_matrix((coo.data * sign, (coo.row, coo.col)),
                             shape=K.shape).tocsr()


class Factorization:
    """Sparse LU handle for K x = b solves with a singularity probe."""

    def __init__(self, K, _lu, pivot_min_ratio):
        self.shape = K.shape
        self._lu = _lu
        self.pivot_min_ratio = pivot_min_ratio

    def solve(self, b):
        return self._lu.solve(b)


def factorize(K, pivot_floor=1e-13, probe=True, cond_limit=1e12):
    """LU-factorize a square sparse matrix.

    Raises :class:`SingularMatrixError` (carrying the offending pivot
    location) on structural or numerical singularity; a one-shot inverse
    application estimates the condition number to catch factorizations
    that formally succeed on a singular matrix.
    """
    K = sparse.csc_matrix(K)
    if K.shape[0] != K.shape[1]:
        raise PencilError("matrix must be square")
    try:
        lu = spla.splu(K)
    except RuntimeError as e:
        raise SingularMatrixError(f"sparse LU failed: {e}") from e
    du = np.abs(lu.U.diagonal())
    dmax = du.max() if len(du) else 1.0
    ratio = float(du.min() / dmax) if len(du) else 1.0
    if ratio <= pivot_floor:
        raise SingularMatrixError(
            f"numerically singular: pivot ratio {ratio:.2e}",
            pivot=int(np.argmin(du)))
    handle = Factorization(K, lu, ratio)
    if probe and K.shape[0] > 0:
        rng = np.random.default_rng(12345)
        r = rng.standard_normal(K.shape[0])
        x = handle.solve(r)
        scale = np.abs(K.data).max() if K.nnz else 1.0
        cond_est = np.linalg.norm(x) / max(np.linalg.norm(r), 1e-300) * scale
        if not np.isfinite(cond_est) or cond_est > cond_limit:
            raise SingularMatrixError(
                f"numerically singular: condition estimate {cond_est:.2e}",
                pivot=int(np.argmin(du)))
    return handle


def _as_real(vec, lam):
    if np.iscomplexobj(vec):
        im = np.linalg.norm(vec.imag)
        re = np.linalg.norm(vec.real)
        if im <= 1e-8 * max(re, 1e-300):
            vec = np.ascontiguousarray(vec.real)
    lam_r = lam.real if abs(lam.imag) <= 1e-8 * (1.0 + abs(lam.real)) else lam
    return vec, lam_r


def filter_spectrum(pencil, lambdas, vectors, finite_cutoff=FINITE_CUTOFF,
                    residual_tol=RESIDUAL_TOL):
    """Keep genuine finite eigenpairs of a degenerate pencil.

    Discards (with recorded reason): eigenvalues beyond ``finite_cutoff``
    ('infinite'), pairs failing the residual bound ('residual'), vanishing
    primary components ('p_zero'), directions annihilated by M
    ('degenerate'), and residually complex pairs ('complex').
    """
    K, M = pencil.K, pencil.M
    m_scale = np.abs(M.data).max() if M.nnz else 1.0
    kept = []
    discarded = []
    for lam, z in zip(lambdas, vectors.T):
        if not np.isfinite(lam):
            discarded.append(("infinite", lam))
            continue
        z, lam = _as_real(z, lam)
        if isinstance(lam, complex):
            discarded.append(("complex", lam))
            continue
        if abs(lam) > finite_cutoff:
            discarded.append(("infinite", lam))
            continue
        nz = np.linalg.norm(z)
        zp = z[pencil.ranges[pencil.primary]]
        if nz == 0 or np.linalg.norm(zp) <= P_ZERO_TOL * nz:
            discarded.append(("p_zero", lam))
            continue
        Mz = M @ z
        if np.linalg.norm(Mz) <= P_ZERO_TOL * m_scale * nz:
            discarded.append(("degenerate", lam))
            continue
        res = np.linalg.norm(K @ z - lam * Mz) / ((abs(lam) + 1.0) * nz)
        if res > residual_tol:
            discarded.append(("residual", lam))
            continue
        kept.append((float(lam), z, float(res)))
    kept.sort(key=lambda t: t[0])
    deduped = []
    for lam, z, res in kept:
        dup = False
        for lam0, z0, _ in deduped:
            if abs(lam - lam0) > 1e-8 * (1.0 + abs(lam)):
                continue
            cos = abs(np.dot(z, z0)) / (np.linalg.norm(z) * np.linalg.norm(z0))
            if cos > 1.0 - 1e-6:
                dup = True
                break
        if dup:
            discarded.append(("duplicate", lam))
        else:
            deduped.append((lam, z, res))
    lams = np.array([t[0] for t in deduped])
    res = np.array([t[2] for t in deduped])
    if deduped:
        Z = np.column_stack([t[1] for t in deduped])
    else:
        Z = np.zeros((pencil.size, 0))
    comps = {name: Z[sl] for name, sl in pencil.ranges.items()}
    return EigenSolution(lams, comps, res, discarded)


def _factor_shifted(pencil, sigma):
    """Factor K - sigma*M with the shift/regularization fallback chain."""
    K, M = pencil.K, pencil.M
    tried = []
    if not pencil.flags.get("singular", False):
        shifts = (sigma,) if sigma == -0.1 else (sigma, -0.1)
        for s in shifts:
            try:
                return factorize(K - s * M), s, False
            except SingularMatrixError as e:
                tried.append((s, str(e)))
    # exactly singular pencil: a tiny diagonal shift deflates the common
    # nullspace (its image under M vanishes, so those directions map to
    # theta ~ 0 and never surface in the Arnoldi basis)
    A = (K - sigma * M).tocsc()
    rho = _REG_SCALE * max(np.abs(A.data).max() if A.nnz else 1.0, 1.0)
    A = A + rho * sparse.identity(A.shape[0], format="csc")
    try:
        handle = factorize(A, probe=False)
    except SingularMatrixError as e:
        raise SingularMatrixError(
            "factorization failed for all shifts: " +
            "; ".join(f"sigma={sv}: {msg}" for sv, msg in tried)) from e
    return handle, sigma, True


def shift_invert_eigs(pencil, sigma=0.0, nev=10, tol=RESIDUAL_TOL,
                      max_iter=None, seed=0, finite_cutoff=FINITE_CUTOFF,
                      arnoldi_tol=1e-10):
    """Finite eigenpairs of the pencil nearest ``sigma``.

    Implicitly restarted Arnoldi on (K - sigma M)^{-1} M; eigenvalues are
    recovered as sigma + 1/theta and passed through
    :func:`filter_spectrum`.  At least ``nev`` kept pairs are returned
    (ascending) or a :class:`PencilError` is raised.
    """
    n = pencil.size
    if n <= max(_DENSE_SOLVE_LIMIT, nev + 2):
        return _dense_eigs(pencil, nev, sigma, tol, finite_cutoff)

    handle, sig, regularized = _factor_shifted(pencil, sigma)
    M = pencil.M.tocsr()
    op = spla.LinearOperator(
        (n, n), matvec=lambda v: handle.solve(M @ v), dtype=float)
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(n)

    k = min(nev + 8, n - 2)
    if k < nev:
        return _dense_eigs(pencil, nev, sigma, tol, finite_cutoff)
    attempts = 0
    while True:
        attempts += 1
        try:
            theta, vecs = spla.eigs(
                op, k=k, which="LM", v0=v0,
                ncv=min(n, max(2 * k + 10, 30)),
                maxiter=max_iter, tol=arnoldi_tol)
        except spla.ArpackNoConvergence as e:
            raise PencilError(
                f"Arnoldi did not converge within the iteration budget; "
                f"{len(e.eigenvalues)} of {k} Ritz pairs converged") from e
        with np.errstate(divide="ignore", invalid="ignore"):
            lam = sig + 1.0 / theta
        sol = filter_spectrum(pencil, lam, vecs,
                              finite_cutoff=finite_cutoff, residual_tol=tol)
        if len(sol.eigenvalues) >= nev or attempts >= 2 or k >= n - 2:
            break
        k = min(n - 2, k + (nev - len(sol.eigenvalues)) + 10)
    if len(sol.eigenvalues) < nev:
        raise PencilError(
            f"only {len(sol.eigenvalues)} finite eigenpairs passed filtering "
            f"(requested {nev}); residuals: {sol.residuals}")
    sol.meta.update(sigma=sig, regularized=regularized, arnoldi_dim=k)
    return sol


def _common_nullspace_complement(Kd, Md, tol=1e-12):
    """Orthonormal basis of the complement of {z : Kz = 0 and Mz = 0}.

    For the pencils built here K is symmetric and M^T annihilates the same
    directions, so the pencil restricted to the complement carries exactly
    the regular and infinite spectrum.
    """
    S = np.vstack([Kd, Md])
    _, s, vt = np.linalg.svd(S, full_matrices=False)
    smax = s[0] if len(s) else 1.0
    k = int((s <= tol * smax).sum())
    if k == 0:
        return None, 0
    return vt[: len(s) - k].T, k


def _dense_eigs(pencil, nev, sigma, tol, finite_cutoff):
    if pencil.size > DENSE_LIMIT:
        raise PencilError("dense fallback refused beyond the size limit")
    Kd, Md = pencil.K.toarray(), pencil.M.toarray()
    Z, n_deg = _common_nullspace_complement(Kd, Md)
    if n_deg:
        lam, vec = scipy.linalg.eig(Z.T @ Kd @ Z, Z.T @ Md @ Z)
        vecs = Z @ vec
    else:
        lam, vecs = scipy.linalg.eig(Kd, Md)
    sol = filter_spectrum(pencil, lam, vecs,
                          finite_cutoff=finite_cutoff, residual_tol=tol)
    if len(sol.eigenvalues) < nev:
        raise PencilError(
            f"only {len(sol.eigenvalues)} finite eigenpairs passed filtering "
            f"(requested {nev})")
    sol.meta.update(sigma=sigma, regularized=False, dense=True,
                    deflated_nullspace=n_deg)
    return sol


@dataclass
class DenseSpectrum:
    """Classified full spectrum from the dense QZ oracle."""

    finite: np.ndarray
    num_infinite: int
    num_complex: int
    num_degenerate: int = 0


def dense_qz(K, M, infinite_tol=1e-12):
    """All generalized eigenvalues via dense QZ, classified finite/infinite.

    An eigenvalue counts as infinite when the M-side Schur diagonal entry
    is at most ``infinite_tol`` times the norm of M.  Directions in the
    common nullspace of K and M (a singular pencil's 0 = lambda*0 modes)
    are deflated first and reported separately.  Dense oracle only;
    refuses dimensions above ``DENSE_LIMIT``.
    """
    n = K.shape[0]
    if n > DENSE_LIMIT:
        raise PencilError(f"dense_qz limited to dimension {DENSE_LIMIT}")
    Kd = K.toarray() if sparse.issparse(K) else np.asarray(K, dtype=float)
    Md = M.toarray() if sparse.issparse(M) else np.asarray(M, dtype=float)
    Z, n_deg = _common_nullspace_complement(Kd, Md)
    if n_deg:
        Kd, Md = Z.T @ Kd @ Z, Z.T @ Md @ Z
    AA, BB, _, _ = scipy.linalg.qz(Kd, Md, output="complex")
    alpha = np.diag(AA)
    beta = np.diag(BB)
    m_norm = max(np.linalg.norm(Md, "fro"), 1e-300)
    infinite = np.abs(beta) <= infinite_tol * m_norm
    lam = alpha[~infinite] / beta[~infinite]
    real = np.abs(lam.imag) <= 1e-8 * (1.0 + np.abs(lam.real))
    return DenseSpectrum(np.sort(lam[real].real),
                         int(infinite.sum()), int((~real).sum()), n_deg)


def schur_reduce(pencil):
    """Finite spectrum via the symmetric reduction A x = (lambda+1) R x with
    R = B^T C^{-1} B (borders folded into B and C).

    Returns (eigenvalues after the -1 shift, dense symmetric R).  Dense
    validation path; requires the bordered C block to be invertible.
    """
    if pencil.size > DENSE_LIMIT:
        raise PencilError(f"schur_reduce limited to dimension {DENSE_LIMIT}")
    for name in ("A", "Bfull", "Cfull"):
        if name not in pencil.blocks:
            raise PencilError("pencil carries no Schur blocks")
    A = pencil.blocks["A"].toarray()
    B = pencil.blocks["Bfull"].toarray()
    C = pencil.blocks["Cfull"].toarray()
    lu, piv = scipy.linalg.lu_factor(C)
    du = np.abs(np.diag(lu))
    if du.min() <= 1e-12 * max(du.max(), 1e-300):
        raise SingularBlockError(
            f"C block is singular (pivot ratio {du.min() / du.max():.2e})")
    R = B.T @ scipy.linalg.lu_solve((lu, piv), B)
    asym = np.abs(R - R.T).max()
    if asym > 1e-12 * max(np.abs(R).max(), 1e-300):
        raise PencilError("Schur complement lost symmetry")
    R = 0.5 * (R + R.T)
    w, _ = scipy.linalg.eig(A, R, right=True, homogeneous_eigvals=True)
    alpha, beta = w[0], w[1]
    m_norm = max(np.linalg.norm(R, "fro"), 1e-300)
    finite = np.abs(beta) > 1e-12 * m_norm
    nu = alpha[finite] / beta[finite]
    real = np.abs(nu.imag) <= 1e-8 * (1.0 + np.abs(nu.real))
    vals = np.sort(nu[real].real) - 1.0
    return vals, R


def coercivity_check(pencil):
    """Cholesky witness that [A, -B^T; -B, C] is positive definite on the
    mean-constrained subspace (dense validation path)."""
    if "A" not in pencil.blocks or "C" not in pencil.blocks:
        raise PencilError("pencil carries no coercivity blocks")
    A = pencil.blocks["A"].toarray()
    B = pencil.blocks["B"].toarray()
    C = pencil.blocks["C"].toarray()
    S = np.block([[A, -B.T], [-B, C]])
    if S.shape[0] > DENSE_LIMIT:
        raise PencilError("coercivity check limited to the dense size")
    if "mean_row" in pencil.blocks:
        m = np.asarray(pencil.blocks["mean_row"].todense()).ravel()
        j0 = int(np.argmax(np.abs(m)))
        nq = len(m)
        N = np.zeros((nq, nq - 1))
        cols = [j for j in range(nq) if j != j0]
        for c, j in enumerate(cols):
            N[j, c] = 1.0
            N[j0, c] = -m[j] / m[j0]
        T = np.block([
            [np.eye(A.shape[0]), np.zeros((A.shape[0], nq - 1))],
            [np.zeros((nq, A.shape[0])), N]])
        S = T.T @ S @ T
    try:
        np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        return False
    return True


def deflated_pencil(sym):
    """Turn a symmetric pencil with a known kernel basis G into a bordered
    degenerate pencil whose finite spectrum is the nonzero spectrum.

    The border enforces M-orthogonality to range(G): K_b = [[K, M G],
    [G^T M, 0]], M_b = [[M, 0], [0, 0]].
    """
    if sym.kernel_basis is None:
        raise PencilError("symmetric pencil has no kernel basis to deflate")
    G = sym.kernel_basis
    if G.shape[0] != sym.size:
        raise PencilError("kernel basis row count does not match the pencil")
    W = (sym.M @ G).tocsr()
    n, m = sym.size, W.shape[1]
    Kb = sparse.bmat([[sym.K, W], [W.T, None]], format="csr")
    Mb = sparse.bmat(
        [[sym.M, sparse.csr_matrix((n, m))],
         [sparse.csr_matrix((m, n)), sparse.csr_matrix((m, m))]], format="csr")
    ranges = {"u": slice(0, n), "lm": slice(n, n + m)}
    return BlockPencil(Kb, Mb, ranges, primary="u", flags={"deflated": True})


def solve_symmetric(sym, nev=10, sigma=None, seed=0, tol=0):
    """Smallest eigenvalues of a symmetric pencil with SPD mass matrix.

    Uses generalized shift-invert Lanczos; a pencil carrying a kernel basis
    is solved through :func:`deflated_pencil` instead so the zero modes
    never enter the Krylov space.  Returns ascending eigenvalues.
    """
    if sym.kernel_basis is not None:
        defl = deflated_pencil(sym)
        sol = shift_invert_eigs(defl, sigma=0.0, nev=nev, seed=seed)
        return sol.eigenvalues
    if sigma is None:
        sigma = -0.1
    n = sym.size
    k = min(nev, n - 1)
    if n <= max(k + 2, _DENSE_SOLVE_LIMIT):
        lam = scipy.linalg.eigh(sym.K.toarray(), sym.M.toarray(),
                                eigvals_only=True)
        return np.sort(lam)[:nev]
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(n)
    lam = spla.eigsh(sym.K, k=k, M=sym.M, sigma=sigma, which="LM",
                     v0=v0, tol=tol, return_eigenvectors=False)
    return np.sort(lam)


def spectrum_csv(solution):
    """CSV export 'index,lambda,residual' of a filtered solution."""
    lines = ["index,lambda,residual"]
    for i, (lam, r) in enumerate(zip(solution.eigenvalues, solution.residuals)):
        lines.append(f"{i},{lam:.17g},{r:.3e}")
    return "\n".join(lines) + "\n"


def discard_log(solution):
    """Plain-text log of filtered candidates."""
    lines = [f"discarded {solution.num_discarded} candidate modes"]
    for reason, lam in solution.discarded:
        lines.append(f"  {reason}: lambda = {lam}")
    return "\n".join(lines) + "\n"
