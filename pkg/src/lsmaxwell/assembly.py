"""Global finite element spaces and sparse assembly of the bilinear forms.

Supported families: scalar Lagrange ('p1', 'p2'), vector Lagrange
('vector_p1', 'vector_p2') and lowest-order edge elements ('ned0').
Essential constraints are collected as dof sets and imposed by symmetric
row/column elimination, never by penalty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sparse

from . import elements
from .elements import REF_EDGES
from .mesh import Mesh

_CHUNK = 16384
_AXIS_TOL = 1e-9

FORMS = (
    "mass_scalar", "stiffness_laplace", "eps_mass", "mu_inv_rot_rot",
    "eps_inv_curl_curl", "curl_to_vector", "rot_pairing", "grad_pairing_3d",
    "mu_mean_row",
)


class AssemblyError(ValueError):
    """Incompatible spaces, unknown form or missing boundary tag."""


@dataclass(frozen=True)
class CoefficientField:
    """Piecewise-constant material coefficients keyed by cell tag."""

    eps: dict = field(default_factory=lambda: {0: 1.0})
    mu: dict = field(default_factory=lambda: {0: 1.0})

    def __post_init__(self):
        for name, d in (("eps", self.eps), ("mu", self.mu)):
            for tag, v in d.items():
                if not (0 < v < math.inf):
                    raise AssemblyError(f"{name}[{tag}] = {v} is not in (0, inf)")

    @classmethod
    def unit(cls):
        return cls()

    def _per_cell(self, table, mesh):
        try:
            return np.array([table[int(t)] for t in mesh.cell_tags])
        except KeyError as e:
            raise AssemblyError(f"no coefficient for cell tag {e}") from None

    def eps_on(self, mesh):
        return self._per_cell(self.eps, mesh)

    def mu_on(self, mesh):
        return self._per_cell(self.mu, mesh)


@dataclass
class FESpace:
    """A finite element space with its dof map and essential-constraint set.

    ``cell_dofs`` maps each cell to global dofs; ``cell_signs`` carries the
    edge orientation signs (+1 for nodal dofs).  ``constrained`` is the
    sorted set of dofs fixed to zero by the essential condition.
    """

    mesh: Mesh
    family: str
    num_dofs: int
    cell_dofs: np.ndarray
    cell_signs: np.ndarray
    constrained: np.ndarray
    constraint: tuple | None
    edges: np.ndarray | None = None
    cell_edges: np.ndarray | None = None

    @property
    def kind(self):
        if self.family == "ned0":
            return "edge"
        return "vector" if self.family.startswith("vector_") else "scalar"

    @property
    def degree(self):
        if self.family == "ned0":
            return 0
        return int(self.family[-1])

    def free_dofs(self):
        return np.setdiff1d(np.arange(self.num_dofs), self.constrained)


def _edge_structure(mesh):
    nl = mesh.cells.shape[1]
    loc = REF_EDGES[mesh.dim]
    pairs = np.concatenate(
        [np.sort(mesh.cells[:, [i, j]], axis=1) for (i, j) in loc], axis=0)
    edges, inv = np.unique(pairs, axis=0, return_inverse=True)
    cell_edges = inv.reshape(len(loc), mesh.num_cells).T.copy()
    signs = np.concatenate(
        [np.where(mesh.cells[:, i] < mesh.cells[:, j], 1.0, -1.0) for (i, j) in loc])
    cell_signs = signs.reshape(len(loc), mesh.num_cells).T.copy()
    return edges, cell_edges, cell_signs


def _edge_lookup(edges, nv):
    keys = edges[:, 0].astype(np.int64) * nv + edges[:, 1]
    return keys


def _find_edges(keys, pairs, nv):
    want = np.sort(pairs, axis=1)
    k = want[:, 0].astype(np.int64) * nv + want[:, 1]
    idx = np.searchsorted(keys, k)
    if (idx >= len(keys)).any() or (keys[np.minimum(idx, len(keys) - 1)] != k).any():
        raise AssemblyError("facet edge not found in mesh edge set")
    return idx


def _facet_axis(mesh, facet):
    """Axis a facet is orthogonal to (its varying axes for the tangent)."""
    pts = mesh.vertices[facet]
    span = pts.max(axis=0) - pts.min(axis=0)
    scale = max(span.max(), 1.0)
    flat = span < _AXIS_TOL * scale
    if mesh.dim == 2:
        if flat[1] and not flat[0]:
            return 1  # horizontal facet, normal along y
        if flat[0] and not flat[1]:
            return 0
        raise AssemblyError("tangential constraint supports axis-aligned facets only")
    n_flat = np.flatnonzero(flat)
    if len(n_flat) != 1:
        raise AssemblyError("tangential constraint supports axis-aligned facets only")
    return int(n_flat[0])


def build_space(mesh, family, constraint=None):
    """Build a finite element space on ``mesh``.

    ``constraint`` is None, ('tangential_zero', tags) for vector families,
    or ('scalar_zero', tags) for scalar families; tags must exist on the
    mesh boundary.
    """
    dim = mesh.dim
    nv = mesh.num_vertices
    edges = cell_edges = None
    if family in ("p2", "vector_p2", "ned0"):
        edges, cell_edges, edge_signs = _edge_structure(mesh)

    if family == "ned0":
        num_dofs = len(edges)
        cell_dofs = cell_edges
        cell_signs = edge_signs
    elif family in ("p1", "p2"):
        if family == "p1":
            num_dofs = nv
            cell_dofs = mesh.cells
        else:
            num_dofs = nv + len(edges)
            cell_dofs = np.hstack([mesh.cells, nv + cell_edges])
        cell_signs = np.ones_like(cell_dofs, dtype=float)
    elif family in ("vector_p1", "vector_p2"):
        base = "p" + family[-1]
        scalar = build_space(mesh, base)
        num_dofs = dim * scalar.num_dofs
        nl = scalar.cell_dofs.shape[1]
        cell_dofs = np.empty((mesh.num_cells, nl * dim), dtype=np.int64)
        for n in range(nl):
            for c in range(dim):
                cell_dofs[:, n * dim + c] = dim * scalar.cell_dofs[:, n] + c
        cell_signs = np.ones_like(cell_dofs, dtype=float)
    else:
        raise AssemblyError(f"unknown family {family!r}")

    constrained = _constrained_dofs(mesh, family, constraint, edges, nv)
    space = FESpace(mesh, family, int(num_dofs), np.ascontiguousarray(cell_dofs),
                    cell_signs, constrained, constraint, edges, cell_edges)
    return space


def _constrained_dofs(mesh, family, constraint, edges, nv):
    if constraint is None:
        return np.zeros(0, dtype=np.int64)
    mode, tags = constraint
    tags = tuple(tags) if not isinstance(tags, str) else (tags,)
    present = set(np.unique(mesh.facet_tags))
    for t in tags:
        if t not in present:
            raise AssemblyError(f"boundary tag {t!r} not present on mesh")
    facets = mesh.facets_with_tags(tags)
    dim = mesh.dim
    dofs = set()

    edge_keys = _edge_lookup(edges, nv) if edges is not None else None

    if mode == "scalar_zero":
        if family not in ("p1", "p2"):
            raise AssemblyError("scalar_zero requires a scalar family")
        dofs.update(int(v) for v in np.unique(facets))
        if family == "p2":
            if dim == 2:
                eids = _find_edges(edge_keys, facets, nv)
            else:
                sub = np.vstack([facets[:, [0, 1]], facets[:, [0, 2]], facets[:, [1, 2]]])
                eids = _find_edges(edge_keys, sub, nv)
            dofs.update(int(nv + e) for e in np.unique(eids))
    elif mode == "tangential_zero":
        if family == "ned0":
            if dim == 2:
                eids = _find_edges(edge_keys, facets, nv)
            else:
                sub = np.vstack([facets[:, [0, 1]], facets[:, [0, 2]], facets[:, [1, 2]]])
                eids = _find_edges(edge_keys, sub, nv)
            dofs.update(int(e) for e in np.unique(eids))
        elif family in ("vector_p1", "vector_p2"):
            for facet in facets:
                normal_axis = _facet_axis(mesh, facet)
                comps = [c for c in range(dim) if c != normal_axis]
                for v in facet:
                    for c in comps:
                        dofs.add(dim * int(v) + c)
                if family == "vector_p2":
                    if dim == 2:
                        eids = _find_edges(edge_keys, facet[None, :], nv)
                    else:
                        sub = np.array([[facet[0], facet[1]], [facet[0], facet[2]],
                                        [facet[1], facet[2]]])
                        eids = _find_edges(edge_keys, sub, nv)
                    for e in eids:
                        for c in comps:
                            dofs.add(dim * int(nv + e) + c)
        else:
            raise AssemblyError("tangential_zero requires a vector or edge family")
    else:
        raise AssemblyError(f"unknown constraint mode {mode!r}")
    return np.array(sorted(dofs), dtype=np.int64)


def _geometry(mesh, cells_slice):
    p = mesh.vertices[mesh.cells[cells_slice]]
    J = np.swapaxes(p[:, 1:, :] - p[:, :1, :], 1, 2)  # (nc, dim, dim)
    detJ = np.linalg.det(J)
    Jinv = np.linalg.inv(J)
    JinvT = np.swapaxes(Jinv, 1, 2)
    return J, detJ, JinvT


class _Tab:
    """Physical-space tabulation of one space on one cell chunk."""

    def __init__(self, space, quad, cells_slice, J, detJ, JinvT):
        mesh = space.mesh
        dim = mesh.dim
        pts = quad.cartesian
        self.kind = space.kind
        self.dofs = space.cell_dofs[cells_slice]
        self.signs = space.cell_signs[cells_slice]
        if space.kind == "scalar":
            vals, grads = elements.eval_lagrange(space.degree, dim, pts)
            self.val = np.broadcast_to(vals[None, :, :], (len(detJ),) + vals.shape)
            self.grad = np.einsum("cij,qnj->cqni", JinvT, grads)
        elif space.kind == "vector":
            k = space.degree
            vals, grads = elements.eval_lagrange(k, dim, pts)
            nq, nl = vals.shape
            vec = np.zeros((nq, nl * dim, dim))
            for n in range(nl):
                for c in range(dim):
                    vec[:, n * dim + c, c] = vals[:, n]
            self.val = np.broadcast_to(vec[None], (len(detJ),) + vec.shape)
            gphys = np.einsum("cij,qnj->cqni", JinvT, grads)
            if dim == 2:
                rot = np.zeros((len(detJ), nq, nl * dim))
                for n in range(nl):
                    rot[:, :, n * dim + 0] = -gphys[:, :, n, 1]
                    rot[:, :, n * dim + 1] = +gphys[:, :, n, 0]
                self.rot = rot
            else:
                curl = np.zeros((len(detJ), nq, nl * dim, dim))
                eye = np.eye(3)
                for n in range(nl):
                    for c in range(dim):
                        curl[:, :, n * dim + c, :] = np.cross(gphys[:, :, n, :], eye[c])
                self.rot = curl
        else:  # edge
            if dim == 2:
                vals, rots = elements.eval_nedelec2d(pts)
                self.val = np.einsum("cij,qnj->cqni", JinvT, vals) * self.signs[:, None, :, None]
                self.rot = (rots[None, :, :] / detJ[:, None, None]) * self.signs[:, None, :]
            else:
                vals, curls = elements.eval_nedelec3d(pts)
                self.val = np.einsum("cij,qnj->cqni", JinvT, vals) * self.signs[:, None, :, None]
                cphys = np.einsum("cij,nj->cni", J, curls[0]) / detJ[:, None, None]
                self.rot = cphys[:, None, :, :] * self.signs[:, None, :, None]
                self.rot = np.broadcast_to(self.rot, self.val.shape)


def _curl_of_scalar(tab):
    """2D vector curl of a scalar basis: (d/dy, -d/dx)."""
    g = tab.grad
    out = np.empty_like(g)
    out[..., 0] = g[..., 1]
    out[..., 1] = -g[..., 0]
    return out


def _pair(w, coef, detJ, T, U):
    scale = coef * detJ
    if T.ndim == 4:
        return np.einsum("q,c,cqnd,cqmd->cnm", w, scale, T, U, optimize=True)
    return np.einsum("q,c,cqn,cqm->cnm", w, scale, T, U, optimize=True)


# which coefficient each form integrates against (None: plain Lebesgue)
_FORM_COEFF = {
    "mass_scalar": None, "stiffness_laplace": None,
    "eps_mass": "eps", "mu_inv_rot_rot": "inv_mu",
    "eps_inv_curl_curl": "inv_eps", "curl_to_vector": "neg",
    "rot_pairing": None, "grad_pairing_3d": "mu",
}


def _coefficient_values(form, coeff, mesh):
    need = _FORM_COEFF[form]
    if need is None:
        return np.ones(mesh.num_cells)
    if need == "neg":
        return -np.ones(mesh.num_cells)
    if need == "eps":
        return coeff.eps_on(mesh)
    if need == "inv_eps":
        return 1.0 / coeff.eps_on(mesh)
    if need == "mu":
        return coeff.mu_on(mesh)
    return 1.0 / coeff.mu_on(mesh)


def _form_integrand(form, test_tab, trial_tab):
    if form == "mass_scalar":
        return test_tab.val, trial_tab.val
    if form == "stiffness_laplace":
        return test_tab.grad, trial_tab.grad
    if form == "eps_mass":
        return test_tab.val, trial_tab.val
    if form == "mu_inv_rot_rot":
        return test_tab.rot, trial_tab.rot
    if form == "eps_inv_curl_curl":
        if test_tab.kind == "scalar":
            return test_tab.grad, trial_tab.grad
        return test_tab.rot, trial_tab.rot
    if form == "curl_to_vector":
        if test_tab.kind == "scalar":
            return _curl_of_scalar(test_tab), trial_tab.val
        return test_tab.rot, trial_tab.val
    if form == "rot_pairing":
        return test_tab.rot, trial_tab.val
    if form == "grad_pairing_3d":
        return test_tab.val, trial_tab.grad
    raise AssemblyError(f"unknown form {form!r}")


_FORM_KINDS = {
    "mass_scalar": ("scalar", "scalar"),
    "stiffness_laplace": ("scalar", "scalar"),
    "eps_mass": (("vector", "edge"), ("vector", "edge")),
    "mu_inv_rot_rot": (("vector", "edge"), ("vector", "edge")),
    "eps_inv_curl_curl": (("scalar", "edge", "vector"), ("scalar", "edge", "vector")),
    "curl_to_vector": (("scalar", "edge", "vector"), ("vector", "edge")),
    "rot_pairing": (("vector", "edge"), ("scalar", "edge", "vector")),
    "grad_pairing_3d": ("edge", "scalar"),
}


def assemble(form, test_space, trial_space, coeff=None, quad_degree=4):
    """Assemble a global sparse matrix for one of the supported bilinear
    forms.

    Parameters
    ----------
    form : str
        One of ``FORMS``.
    test_space, trial_space : FESpace
        Spaces on the same mesh; the result has shape
        (test dofs, trial dofs).  ``mu_mean_row`` ignores ``test_space``
        and returns a single-row matrix.
    coeff : CoefficientField, optional
        Material coefficients; defaults to unit values.
    """
    coeff = coeff or CoefficientField.unit()
    mesh = trial_space.mesh
    if form == "mu_mean_row":
        return _assemble_mean_row(trial_space, coeff, quad_degree)
    if test_space.mesh is not trial_space.mesh:
        raise AssemblyError("test and trial spaces live on different meshes")
    want = _FORM_KINDS.get(form)
    if want is None:
        raise AssemblyError(f"unknown form {form!r}")
    for got, req in ((test_space.kind, want[0]), (trial_space.kind, want[1])):
        allowed = (req,) if isinstance(req, str) else req
        if got not in allowed:
            raise AssemblyError(f"form {form!r} incompatible with {got} space")

    quad = elements.quadrature(mesh.dim, quad_degree)
    coef_all = _coefficient_values(form, coeff, mesh)
    w = quad.weights

    rows, cols, data = [], [], []
    for start in range(0, mesh.num_cells, _CHUNK):
        sl = slice(start, min(start + _CHUNK, mesh.num_cells))
        J, detJ, JinvT = _geometry(mesh, sl)
        tt = _Tab(test_space, quad, sl, J, detJ, JinvT)
        tu = tt if trial_space is test_space else _Tab(trial_space, quad, sl, J, detJ, JinvT)
        T, U = _form_integrand(form, tt, tu)
        E = _pair(w, coef_all[sl], detJ, T, U)
        nt, nu = E.shape[1], E.shape[2]
        rows.append(np.repeat(tt.dofs, nu, axis=1).ravel())
        cols.append(np.tile(tu.dofs, (1, nt)).ravel())
        data.append(E.ravel())
    mat = sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(test_space.num_dofs, trial_space.num_dofs)).tocsr()
    mat.sum_duplicates()
    mat.eliminate_zeros()
    return mat


def _assemble_mean_row(space, coeff, quad_degree):
    if space.kind != "scalar":
        raise AssemblyError("mu_mean_row requires a scalar space")
    mesh = space.mesh
    quad = elements.quadrature(mesh.dim, quad_degree)
    muc = coeff.mu_on(mesh)
    w = quad.weights
    vals, _ = elements.eval_lagrange(space.degree, mesh.dim, quad.cartesian)
    out = np.zeros(space.num_dofs)
    for start in range(0, mesh.num_cells, _CHUNK):
        sl = slice(start, min(start + _CHUNK, mesh.num_cells))
        _, detJ, _ = _geometry(mesh, sl)
        contrib = np.einsum("q,c,qn->cn", w, muc[sl] * detJ, vals)
        np.add.at(out, space.cell_dofs[sl], contrib)
    row = sparse.csr_matrix(out[None, :])
    row.eliminate_zeros()
    return row


def eliminate_constraints(matrix, test_space, trial_space):
    """Remove constrained rows and columns (homogeneous essential BCs).

    Returns (reduced matrix, free test dofs, free trial dofs); the dof
    arrays translate reduced indices back to the full numbering.  A fully
    constrained space yields an empty (degenerate) block.
    """
    tf = test_space.free_dofs()
    uf = trial_space.free_dofs()
    if matrix.shape != (test_space.num_dofs, trial_space.num_dofs):
        raise AssemblyError("matrix shape does not match the spaces")
    red = matrix.tocsr()[tf][:, uf]
    return red, tf, uf


def expand_vector(values, free, size):
    """Scatter reduced dof values back into the full numbering with zeros on
    constrained dofs."""
    out = np.zeros((size,) + values.shape[1:], dtype=values.dtype)
    out[free] = values
    return out


def discrete_gradient(edge_space, scalar_space):
    """Edge-element interpolation of nodal gradients: G[e, v] with +1 at the
    higher-index endpoint of edge e and -1 at the lower one."""
    if edge_space.family != "ned0" or scalar_space.family != "p1":
        raise AssemblyError("discrete_gradient expects (ned0, p1)")
    edges = edge_space.edges
    ne = len(edges)
    rows = np.repeat(np.arange(ne), 2)
    cols = edges.ravel()
    vals = np.tile([-1.0, 1.0], ne)
    return sparse.csr_matrix((vals, (rows, cols)),
                             shape=(ne, scalar_space.num_dofs))


def write_matrix_text(mat):
    """Coordinate text export: 'nrows ncols nnz' header then 'i j value'."""
    coo = mat.tocoo()
    lines = [f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}"]
    order = np.lexsort((coo.col, coo.row))
    for i, j, v in zip(coo.row[order], coo.col[order], coo.data[order]):
        lines.append(f"{i} {j} {v:.17g}")
    return "\n".join(lines) + "\n"
