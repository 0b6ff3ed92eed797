"""Configuration-driven convergence studies.

Runs a formulation across a mesh sequence, compares eigenvalues against a
reference catalog or against a second formulation on the same meshes,
computes rates under mesh refinement, and renders CSV/markdown reports.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import mesh as meshmod
from .formulations import FormulationSpec, build_pencil
from .pencil import (BlockPencil, PencilError, SymmetricPencil,
                     shift_invert_eigs, solve_symmetric)

NEAR_ZERO_DROP = 1e-8

# reference eigenvalues of the L-shaped and cracked-square benchmarks
LSHAPE_REFERENCE = (1.47562, 3.53403, 9.86960, 9.86960, 11.38948)
SLIT_REFERENCE = (1.03407, 2.46740, 4.04693, 9.86960, 9.86960,
                  10.84485, 12.26490, 12.33701, 19.73921, 21.24411)


class StudyError(ValueError):
    """Invalid study configuration."""


def reference_spectrum(domain, count):
    """Ascending reference eigenvalues (with multiplicity) for a domain.

    'square': m^2 + n^2 over m, n >= 0 with m + n > 0.
    'cube': m^2 + n^2 + k^2 with at least two positive indices; triples with
    all three positive count twice.
    'lshape', 'slit': tabulated benchmark values.
    """
    if domain == "square":
        vals = []
        r = int(math.isqrt(4 * count)) + 2
        for m2 in range(r + 1):
            for n2 in range(r + 1):
                if m2 + n2 > 0:
                    vals.append(m2 * m2 + n2 * n2)
        return np.sort(np.array(vals, dtype=float))[:count]
    if domain == "cube":
        vals = []
        r = int(math.isqrt(4 * count)) + 2
        for m2 in range(r + 1):
            for n2 in range(r + 1):
                for k2 in range(r + 1):
                    pos = (m2 > 0) + (n2 > 0) + (k2 > 0)
                    if pos < 2:
                        continue
                    lam = m2 * m2 + n2 * n2 + k2 * k2
                    vals += [lam, lam] if pos == 3 else [lam]
        return np.sort(np.array(vals, dtype=float))[:count]
    if domain == "lshape":
        if count > len(LSHAPE_REFERENCE):
            raise StudyError("only 5 reference values known for the L-shape")
        return np.array(LSHAPE_REFERENCE[:count])
    if domain == "slit":
        if count > len(SLIT_REFERENCE):
            raise StudyError("only 10 reference values known for the slit domain")
        return np.array(SLIT_REFERENCE[:count])
    raise StudyError(f"unknown reference domain {domain!r}")


def compute_rates(errors, ns=None):
    """Convergence rates r_k = log(e_{k-1}/e_k) / log(n_k/n_{k-1}).

    The first entry is None (no previous mesh); a vanishing error on either
    side yields None for that entry.  For a halved mesh sequence this is
    the usual log2 of the error ratio, attached to the finer mesh.
    """
    errors = [float(e) for e in errors]
    if len(errors) < 2:
        return [None] * len(errors)
    rates = [None]
    for k in range(1, len(errors)):
        e0, e1 = errors[k - 1], errors[k]
        if e0 == e1:
            rates.append(0.0)
            continue
        if e0 <= 0 or e1 <= 0:
            rates.append(None)
            continue
        factor = math.log(ns[k] / ns[k - 1]) if ns is not None else math.log(2.0)
        rates.append(math.log(e0 / e1) / factor)
    return rates


@dataclass(frozen=True)
class StudyConfig:
    """One convergence study: a domain, a strictly increasing mesh
    parameter list, a formulation (optionally a second one for pairwise
    comparison) and either a reference catalog id or 'pairwise'."""

    domain: str
    ns: tuple
    spec: FormulationSpec
    reference: str
    spec_b: FormulationSpec | None = None
    nev: int = 10
    diagonal: str = "right"
    side: float = math.pi
    perturb_amplitude: float = 0.0
    perturb_seed: int = 1
    material_box: tuple | None = None
    material_tag: int = 1

    def __post_init__(self):
        ns = tuple(self.ns)
        if len(ns) == 0 or any(b <= a for a, b in zip(ns, ns[1:])):
            raise StudyError("mesh parameter list must be strictly increasing")
        if self.nev < 1:
            raise StudyError("nev must be >= 1")
        if self.reference == "pairwise" and self.spec_b is None:
            raise StudyError("pairwise mode needs a second formulation")
        object.__setattr__(self, "ns", ns)


@dataclass
class StudyReport:
    """Per-mesh eigenvalues, references, errors, rates and wall times."""

    config: StudyConfig
    ns: list
    eigenvalues: list          # one ascending array per mesh
    reference: np.ndarray | None
    eigenvalues_b: list | None
    errors: list               # one array per mesh
    rates: list                # rates[mode][mesh], None where undefined
    wall_times: list


def build_domain_mesh(config, n):
    if config.domain == "square":
        m = meshmod.build_structured_square(n, config.side, config.diagonal)
    elif config.domain == "lshape":
        m = meshmod.build_lshape(n, config.diagonal)
    elif config.domain == "slit":
        m = meshmod.build_slit(n, config.diagonal)
    elif config.domain == "cube":
        m = meshmod.build_structured_cube(n, config.side)
    else:
        raise StudyError(f"unknown domain {config.domain!r}")
    if config.perturb_amplitude > 0:
        m = meshmod.perturb_interior(m, config.perturb_amplitude, config.perturb_seed)
    if config.material_box is not None:
        m = meshmod.tag_subdomain(m, config.material_box, config.material_tag)
    return m


def solve_spectrum(mesh, spec, nev, seed=0):
    """Solve one formulation on one mesh; returns the ``nev`` smallest
    physical eigenvalues, ascending.

    Block pencils go through shift-invert Arnoldi with filtering; symmetric
    pencils through shift-invert Lanczos (or the deflated route when a
    kernel basis is attached), followed by the near-zero drop when the
    formulation produces meaningless zero modes.
    """
    pencil = build_pencil(mesh, spec)
    if isinstance(pencil, BlockPencil):
        sol = shift_invert_eigs(pencil, sigma=0.0, nev=nev, seed=seed)
        return sol.eigenvalues[:nev], sol
    assert isinstance(pencil, SymmetricPencil)
    pad = 3 if pencil.drop_near_zero else 0
    lam = solve_symmetric(pencil, nev=nev + pad, seed=seed)
    if pencil.drop_near_zero and len(lam):
        lam = lam[np.abs(lam) > NEAR_ZERO_DROP * max(np.abs(lam).max(), 1.0)]
    if len(lam) < nev:
        raise PencilError(f"only {len(lam)} eigenvalues after the near-zero drop")
    return lam[:nev], None


def run_study(config):
    """Run the configured study over its mesh sequence."""
    nev = config.nev
    eigs, eigs_b, times = [], [], []
    for n in config.ns:
        t0 = time.perf_counter()
        m = build_domain_mesh(config, n)
        try:
            lam, _ = solve_spectrum(m, config.spec, nev)
            if config.reference == "pairwise":
                lam_b, _ = solve_spectrum(m, config.spec_b, nev)
                eigs_b.append(lam_b)
        except PencilError as e:
            raise PencilError(f"solver failed at n={n}: {e}") from e
        eigs.append(lam)
        times.append(time.perf_counter() - t0)
    if config.reference == "pairwise":
        ref = None
        errors = [np.abs(a - b) for a, b in zip(eigs, eigs_b)]
    else:
        ref = reference_spectrum(config.reference, nev)
        errors = [np.abs(lam - ref) for lam in eigs]
        eigs_b = None
    rates = []
    for mode in range(nev):
        per_mode = [errors[k][mode] for k in range(len(config.ns))]
        rates.append(compute_rates(per_mode, ns=config.ns))
    return StudyReport(config, list(config.ns), eigs, ref, eigs_b,
                       errors, rates, times)


def render_report(report, fmt="csv"):
    """Render a study report as 'csv' (columns mode,n,lambda,ref,error,rate)
    or 'markdown' (one row per mode, one computed column per mesh)."""
    if fmt == "csv":
        return _render_csv(report)
    if fmt == "markdown":
        return _render_markdown(report)
    raise StudyError(f"unknown report format {fmt!r}")


def _fmt_rate(r):
    return "" if r is None else f"{r:.17g}"


def _render_csv(report):
    lines = ["mode,n,lambda,ref,error,rate"]
    nev = report.config.nev
    for mode in range(nev):
        for k, n in enumerate(report.ns):
            lam = report.eigenvalues[k][mode]
            if report.reference is not None:
                ref = report.reference[mode]
            else:
                ref = report.eigenvalues_b[k][mode]
            err = report.errors[k][mode]
            rate = report.rates[mode][k]
            lines.append(f"{mode + 1},{n},{lam:.17g},{ref:.17g},"
                         f"{err:.17g},{_fmt_rate(rate)}")
    return "\n".join(lines) + "\n"


def _cell(lam, rate):
    return f"{lam:.5f}" if rate is None else f"{lam:.5f} ({rate:.2f})"


def _render_markdown(report):
    nev = report.config.nev
    pairwise = report.reference is None
    head = ["Exact"] if not pairwise else ["Rank"]
    head += [f"n={n}" for n in report.ns]
    lines = ["| " + " | ".join(head) + " |",
             "|" + "---|" * len(head)]
    for mode in range(nev):
        first = (f"{report.reference[mode]:.5f}" if not pairwise else str(mode + 1))
        row = [first]
        for k in range(len(report.ns)):
            row.append(_cell(report.eigenvalues[k][mode], report.rates[mode][k]))
        lines.append("| " + " | ".join(row) + " |")
    if pairwise:
        lines.append("")
        lines.append("| Difference | " + " | ".join(f"n={n}" for n in report.ns) + " |")
        lines.append("|" + "---|" * (len(report.ns) + 1))
        for mode in range(nev):
            row = [str(mode + 1)]
            for k in range(len(report.ns)):
                row.append(_cell(report.errors[k][mode], report.rates[mode][k]))
            lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def parse_report_csv(text):
    """Parse the CSV produced by :func:`render_report` back into arrays."""
    rows = text.strip().splitlines()
    out = []
    for r in rows[1:]:
        mode, n, lam, ref, err, rate = r.split(",")
        out.append((int(mode), int(n), float(lam), float(ref), float(err),
                    None if rate == "" else float(rate)))
    return out
