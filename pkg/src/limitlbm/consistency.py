"""Limit-consistency harness: LBE residuals, order fits and convergence studies.

The exact kinetic solution of the h-scaled BGK equation has no closed form.
Its stand-in on the grid is the first-order Chapman-Enskog population of an
analytic Navier-Stokes flow, which is accurate one order beyond the claimed
consistency order, so the measured residual slope belongs to the LBE
operator itself.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .equilibrium import equilibrium_lattice_units
from .errors import DegenerateDensityError, DomainError, InstabilityError
from .grid import Grid, PopulationField, _check_dims, init_from_macro, make_grid, node_coordinates, stream_velocity
from .lattice import Stencil, get_stencil
from .manufactured import AnalyticFlow, ce_populations, material_derivative_terms, shear_wave, taylor_green_2d, uniform_flow
from .moments import deviatoric, lattice_moments, macroscopic_moments, stress_tensor
from .orders import EXACT, eoc, eoc_or_exact, slope_or_exact
from .scaling import ScalingParams, make_scaling
from .solver import Observer, run_until, step_count

__all__ = [
    "Case", "make_case", "ConsistencyReport", "LimsupResult", "lbe_residual", "eoc",
    "limsup_probe", "convergence_study", "stress_study", "distribution_moment_errors",
    "write_report", "read_report", "write_limsup", "read_limsup", "EXACT",
]

CASE_NAMES = ("taylor_green_2d", "shear_wave_3d", "uniform")
DEFAULT_STENCIL = {"taylor_green_2d": "d2q9", "shear_wave_3d": "d3q19", "uniform": "d2q9"}
CASE_DIMENSION = {"taylor_green_2d": 2, "shear_wave_3d": 3}
REPORT_HEADER = ["case", "N", "h", "norm", "value", "eoc_vs_prev"]
LIMSUP_HEADER = ["case", "k", "h", "limsup_estimate", "verdict"]
UNSTABLE = "unstable"
DOWNCAST_NOTE = ("kinetic reference sampled as first-order Chapman-Enskog populations of the "
                 "analytic flow; accurate one order beyond the consistency order being measured")
NA = "NA"


@dataclass(frozen=True)
class Case:
    """A benchmark flow on a periodic box of side ``L``.

    ``U`` is the characteristic velocity (Taylor-Green) or amplitude (shear
    wave); the uniform case is the fluid at rest and ignores it.
    """

    name: str
    stencil_name: str
    L: float = 1.0
    U: float = 0.8

    @property
    def stencil(self) -> Stencil:
        return get_stencil(self.stencil_name)

    @property
    def d(self) -> int:
        return self.stencil.d

    def flow(self, nu: float) -> AnalyticFlow:
        if self.name == "taylor_green_2d":
            return taylor_green_2d(self.U, self.L, nu)
        if self.name == "shear_wave_3d":
            return shear_wave(self.U, 2.0 * math.pi / self.L, nu, d=3)
        return uniform_flow(self.d, nu, L=self.L)

    def grid(self, N: int) -> Grid:
        return make_grid(self.d, N, self.L)


def default_velocity(N_coarse: int, L: float, mach: float = 0.05) -> float:
    """Velocity scale giving lattice Mach number ``U h = mach`` at the coarsest grid."""
    return mach * N_coarse / L


def make_case(name: str, stencil: str | None = None, L: float = 1.0, U: float | None = None,
              N_coarse: int | None = None) -> Case:
    if name not in CASE_NAMES:
        raise DomainError(f"unknown case {name!r}; expected one of {CASE_NAMES}")
    stencil = stencil or DEFAULT_STENCIL[name]
    d = get_stencil(stencil).d
    if name in CASE_DIMENSION and CASE_DIMENSION[name] != d:
        raise DomainError(f"case {name} needs a {CASE_DIMENSION[name]}-d stencil, got {stencil}")
    if U is None:
        U = default_velocity(N_coarse, L) if N_coarse else 0.05
    return Case(name, stencil, float(L), float(U))


@dataclass
class ConsistencyReport:
    case: str
    resolutions: list[tuple[int, float]]
    errors: list[dict[str, float]]
    eoc: dict[str, list[float | str]] = field(default_factory=dict)
    limsup_estimates: list[float] = field(default_factory=list)
    diagnostics: list[dict[str, float]] = field(default_factory=list)
    status: list[str] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    norm_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        hs = [h for _, h in self.resolutions]
        if any(b >= a for a, b in zip(hs, hs[1:])):
            raise DomainError("resolutions must be strictly decreasing in h")
        if not self.status:
            self.status = ["ok"] * len(self.resolutions)
        if not self.eoc:
            self.eoc = compute_eocs(self)

    @property
    def hs(self) -> list[float]:
        return [h for _, h in self.resolutions]

    @property
    def norms(self) -> list[str]:
        names: list[str] = list(self.norm_names)
        for errs in self.errors:
            names.extend(k for k in errs if k not in names)
        return names

    def series(self, norm: str) -> list[float]:
        return [errs.get(norm, math.nan) for errs in self.errors]

    def finest_eoc(self, norm: str) -> float | str:
        return self.eoc[norm][-1]

    @property
    def stable(self) -> bool:
        return all(s == "ok" for s in self.status)


def compute_eocs(report: ConsistencyReport) -> dict[str, list[float | str]]:
    """Pairwise orders per norm; pairs touching an unstable run yield ``NA``."""
    out: dict[str, list[float | str]] = {}
    hs = report.hs
    for norm in report.norms:
        vals = report.series(norm)
        orders: list[float | str] = []
        for j in range(len(hs) - 1):
            if report.status[j] != "ok" or report.status[j + 1] != "ok":
                orders.append(NA)
            else:
                orders.extend(eoc_or_exact(vals[j:j + 2], hs[j:j + 2]))
        out[norm] = orders
    return out


# ---------------------------------------------------------------------------
# residual of the lattice Boltzmann operator


def lbe_residual(f_now: PopulationField, f_next: PopulationField, s: Stencil,
                 sc: ScalingParams) -> np.ndarray:
    """``f_i(t+h^2, x+e_i h) - f_i(t, x) + omega (f_i(t, x) - M_eq_i(t, x))`` per node."""
    if f_now.grid != f_next.grid:
        raise DomainError("residual needs both fields on the same grid")
    _check_dims(f_now, s)
    n, u_lat = lattice_moments(f_now.data, s)
    eq = equilibrium_lattice_units(n, u_lat, s)
    out = np.empty_like(f_now.data)
    for i in range(s.q):
        ahead = stream_velocity(f_next.data[i], -s.e[i])
        out[i] = ahead - f_now.data[i] + sc.omega * (f_now.data[i] - eq[i])
    return out


def _grid_for_h(case: Case, h: float) -> Grid:
    N = case.L / h
    if abs(N - round(N)) > 1e-9 * N:
        raise DomainError(f"h={h} does not divide the box length {case.L}")
    return case.grid(int(round(N)))


@dataclass(frozen=True)
class LimsupResult:
    case: str
    k: float
    hs: tuple[float, ...]
    estimates: tuple[float, ...]
    verdict: str
    sup_residuals: tuple[float, ...] = ()

    @property
    def slope(self) -> float | str:
        return slope_or_exact(self.hs, self.sup_residuals)


def boundedness_verdict(estimates: Sequence[float], slack: float = 0.2) -> str:
    """``bounded`` if the estimates from the second one onward never grow by more than ``slack``."""
    tail = list(estimates[1:])
    ok = all(b <= (1.0 + slack) * a for a, b in zip(tail, tail[1:]))
    return "bounded" if ok else "unbounded"


def residual_sup(case: Case, nu: float, h: float, t: float = 0.0) -> float:
    grid = _grid_for_h(case, h)
    s = case.stencil
    sc = make_scaling(nu, grid.dx)
    flow = case.flow(nu)
    f_now = ce_populations(flow, t, grid, s, sc, with_pressure=True)
    f_next = ce_populations(flow, t + grid.dt, grid, s, sc, with_pressure=True)
    return float(np.max(np.abs(lbe_residual(f_now, f_next, s, sc))))


def limsup_probe(case: Case, k: float, h_list: Sequence[float], nu: float = 0.02,
                 t: float = 0.0, slack: float = 0.2) -> LimsupResult:
    """Estimate ``sup_x |B_h(a^h)| / h^k`` along a decreasing ``h`` sequence."""
    hs = tuple(float(h) for h in h_list)
    if len(hs) < 3 or any(b >= a for a, b in zip(hs, hs[1:])):
        raise DomainError("h_list needs at least three strictly decreasing entries")
    sups = tuple(residual_sup(case, nu, h, t) for h in hs)
    est = tuple(r / h**k for r, h in zip(sups, hs))
    return LimsupResult(case.name, k, hs, est, boundedness_verdict(est, slack), sups)


# ---------------------------------------------------------------------------
# simulation studies


def _velocity_errors(u, u_exact, grid: Grid) -> dict[str, float]:
    diff2 = np.sum((u - u_exact) ** 2, axis=0)
    return {
        "L2": math.sqrt(grid.dx**grid.d * math.fsum(diff2.ravel())),
        "sup": math.sqrt(float(np.max(diff2))),
    }


def _mode_amplitude_observer(case: Case, grid: Grid, s: Stencil, sc: ScalingParams):
    x = node_coordinates(grid)
    mode = np.sin(2.0 * math.pi / case.L * x[0])
    norm = math.fsum((mode * mode).ravel())

    def amplitude(step, t, f):
        _, u = macroscopic_moments(f.data, s, sc)
        return math.fsum((u[1] * mode).ravel()) / norm

    return amplitude


def effective_viscosity(times: Sequence[float], amplitudes: Sequence[float], k: float,
                        skip_fraction: float = 0.1) -> float:
    """Fit ``A(t) = A0 exp(-nu_eff k^2 t)`` on samples after the initial layer."""
    t = np.asarray(times, dtype=float)
    a = np.asarray(amplitudes, dtype=float)
    keep = t >= skip_fraction * t[-1]
    if keep.sum() < 2 or np.any(a[keep] <= 0):
        raise DomainError("not enough positive amplitude samples to fit a decay rate")
    slope = np.polyfit(t[keep], np.log(a[keep]), 1)[0]
    return float(-slope / k**2)


def convergence_study(case: Case, N_list: Sequence[int], nu: float, t_end: float,
                      init: str = "equilibrium", workers: int = 1,
                      samples: int = 20) -> ConsistencyReport:
    """Run each resolution to ``t_end`` and compare velocities with the analytic flow.

    Shear-wave cases additionally fit the decay of the wave amplitude and
    report ``nu_rel = |nu_eff - nu| / nu``.  A resolution whose field blows
    up or loses positive density is marked unstable and skipped.
    """
    N_list = list(N_list)
    if not N_list or any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise DomainError("N_list must be non-empty and strictly ascending")
    s = case.stencil
    resolutions, errors, status, steps = [], [], [], []
    for N in N_list:
        grid = case.grid(N)
        sc = make_scaling(nu, grid.dx)
        flow = case.flow(nu)
        f = init_from_macro(grid, s, sc, flow, 0.0, init)
        observers = []
        if case.name == "shear_wave_3d":
            nsteps = max(1, step_count(t_end, grid.dt))
            observers.append(Observer(max(1, nsteps // samples),
                                      _mode_amplitude_observer(case, grid, s, sc), "amplitude"))
        resolutions.append((N, grid.dx))
        try:
            f, log = run_until(f, s, sc, t_end, observers, workers=workers)
        except (InstabilityError, DegenerateDensityError):
            errors.append({})
            status.append(UNSTABLE)
            steps.append(None)
            continue
        nsteps = step_count(t_end, grid.dt)
        t_reached = nsteps * grid.dt
        _, u = macroscopic_moments(f.data, s, sc)
        errs = _velocity_errors(u, flow.u(t_reached, node_coordinates(grid)), grid)
        if observers and nsteps > 0:
            nu_eff = effective_viscosity([r.t for r in log], [r.value for r in log], flow.k)
            errs["nu_rel"] = abs(nu_eff - nu) / nu
        errors.append(errs)
        status.append("ok")
        steps.append(nsteps)
    meta = {
        "study": "convergence", "case": case.name, "stencil": s.name, "nu": nu, "U": case.U,
        "L": case.L, "t_end": t_end, "init": init, "steps": steps,
        "reference": "analytic velocity at the final step time",
        "downcast": DOWNCAST_NOTE,
    }
    norms = ["L2", "sup"] + (["nu_rel"] if case.name == "shear_wave_3d" else [])
    return ConsistencyReport(case.name, resolutions, errors, status=status, metadata=meta,
                             norm_names=norms)


def midpoint_populations(f: np.ndarray, s: Stencil, sc: ScalingParams) -> np.ndarray:
    """Populations half a step later along the characteristics: ``f - (omega/2)(f - M_eq)``.

    The LBE is a midpoint rule for the discrete-velocity BGK equation; its
    moments at this half-step state carry the viscosity ``nu`` itself rather
    than ``nu + 1/6``.
    """
    n, u_lat = lattice_moments(f, s)
    eq = equilibrium_lattice_units(n, u_lat, s)
    return f - 0.5 * sc.omega * (f - eq)


def stress_errors(f: np.ndarray, s: Stencil, sc: ScalingParams, rho, D) -> dict[str, float]:
    P = deviatoric(stress_tensor(midpoint_populations(f, s, sc), s, sc))
    target = -2.0 * sc.nu * rho * D
    scale = float(np.max(np.abs(target)))
    err = float(np.max(np.abs(P - target)))
    rel = err / scale if scale > 0 else err
    d = s.d
    dmax = float(np.max(np.abs(D)))
    agree, total = 0, 0
    for a in range(d):
        for b in range(a, d):
            mask = np.abs(D[a, b]) > 0.1 * dmax if dmax > 0 else np.zeros(D[a, b].shape, bool)
            total += int(mask.sum())
            agree += int(np.sum(np.sign(P[a, b][mask]) == np.sign(target[a, b][mask])))
    return {"stress_rel_sup": rel, "sign_agreement": agree / total if total else 1.0,
            "sign_nodes": float(total)}


def stress_study(case: Case, N_list: Sequence[int], nu: float, t_snapshot: float,
                 init: str = "equilibrium", workers: int = 1) -> ConsistencyReport:
    """Compare the measured deviatoric stress with ``-2 nu rho D`` at ``t_snapshot``.

    The sign census covers every tensor component on nodes where ``|D_ab|``
    exceeds a tenth of the largest strain entry.
    """
    N_list = list(N_list)
    if not N_list or any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise DomainError("N_list must be non-empty and strictly ascending")
    s = case.stencil
    resolutions, errors, diags, status = [], [], [], []
    for N in N_list:
        grid = case.grid(N)
        sc = make_scaling(nu, grid.dx)
        flow = case.flow(nu)
        f = init_from_macro(grid, s, sc, flow, 0.0, init)
        resolutions.append((N, grid.dx))
        try:
            f, _ = run_until(f, s, sc, t_snapshot, workers=workers)
        except (InstabilityError, DegenerateDensityError):
            errors.append({})
            diags.append({})
            status.append(UNSTABLE)
            continue
        t_reached = step_count(t_snapshot, grid.dt) * grid.dt
        x = node_coordinates(grid)
        res = stress_errors(f.data, s, sc, flow.rho(t_reached, x), flow.strain(t_reached, x))
        errors.append({"stress_rel_sup": res["stress_rel_sup"]})
        diags.append({"sign_agreement": res["sign_agreement"], "sign_nodes": res["sign_nodes"]})
        status.append("ok")
    meta = {
        "study": "stress", "case": case.name, "stencil": s.name, "nu": nu, "U": case.U,
        "L": case.L, "t_snapshot": t_snapshot, "init": init,
        "stress_state": "midpoint populations f - (omega/2)(f - M_eq)",
    }
    return ConsistencyReport(case.name, resolutions, errors, diagnostics=diags,
                             status=status, metadata=meta, norm_names=["stress_rel_sup"])


def distribution_moment_errors(flow: AnalyticFlow, t: float, x, s: Stencil, nu: float,
                               h_list: Sequence[float]) -> dict[str, dict]:
    """Density errors of weighted velocity sums at a single point ``x``.

    ``equilibrium_sum``: ``|n - sum_i w_i M(v_i)| / n``; ``ce_sum`` uses the
    first-order Chapman-Enskog distribution ``M (1 - 3 nu h^2 (...))`` instead.
    """
    x = np.asarray(x, dtype=float).reshape(flow.d, 1)
    e = s.e.astype(float)
    out = {"equilibrium_sum": [], "ce_sum": []}
    for h in h_list:
        sc = make_scaling(nu, h)
        n = float(flow.rho(t, x)[0])
        hu = h * flow.u(t, x)[:, 0]
        weighted = s.t * n * np.exp(3.0 * (e @ hu) - 1.5 * (hu @ hu))
        terms = material_derivative_terms(flow, t, x, s.velocities(h), sc)
        ce = weighted * (1.0 - 3.0 * nu * h * h * terms.bracket()[:, 0])
        out["equilibrium_sum"].append(abs(n - math.fsum(weighted)) / n)
        out["ce_sum"].append(abs(n - math.fsum(ce)) / n)
    return {k: {"errors": v, "slope": slope_or_exact(h_list, v)} for k, v in out.items()}


# ---------------------------------------------------------------------------
# serialization


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    return f"{value:.17g}"


def _parse(text: str):
    if text in (NA, EXACT, UNSTABLE):
        return text
    return float(text)


def write_report(report: ConsistencyReport, path) -> Path:
    """CSV ``case,N,h,norm,value,eoc_vs_prev``, one row per (resolution, norm).

    Error norms come first in the order they were recorded, then
    diagnostics (whose ``eoc_vs_prev`` is always ``NA``).  Metadata goes to a
    ``.meta.json`` sidecar.
    """
    path = Path(path)
    norms = report.norms
    diag_names: list[str] = []
    for dg in report.diagnostics:
        diag_names.extend(k for k in dg if k not in diag_names)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(REPORT_HEADER)
            for j, (N, h) in enumerate(report.resolutions):
                unstable = report.status[j] != "ok"
                for norm in norms:
                    value = UNSTABLE if unstable else report.errors[j][norm]
                    prev = NA if j == 0 else report.eoc[norm][j - 1]
                    writer.writerow([report.case, N, _fmt(h), norm, _fmt(value), _fmt(prev)])
                for name in diag_names:
                    value = UNSTABLE if unstable else report.diagnostics[j][name]
                    writer.writerow([report.case, N, _fmt(h), name, _fmt(value), NA])
        if report.metadata:
            meta = dict(report.metadata, status=report.status, diagnostics=diag_names)
            _meta_path(path).write_text(json.dumps(meta, sort_keys=True, indent=1) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path


def _meta_path(path: Path) -> Path:
    return path.with_suffix(".meta.json")


def read_report(path) -> ConsistencyReport:
    path = Path(path)
    meta = {}
    if _meta_path(path).exists():
        meta = json.loads(_meta_path(path).read_text())
    diag_names = set(meta.pop("diagnostics", []))
    status_meta = meta.pop("status", None)
    rows: dict[int, dict] = {}
    eocs: dict[str, list] = {}
    case = None
    first_N = None
    norm_names: list[str] = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != REPORT_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        for row in reader:
            case = row["case"]
            N = int(row["N"])
            first_N = N if first_N is None else first_N
            entry = rows.setdefault(N, {"h": float(row["h"]), "errors": {}, "diag": {},
                                        "status": "ok"})
            value = _parse(row["value"])
            if value == UNSTABLE:
                entry["status"] = UNSTABLE
            elif row["norm"] in diag_names:
                entry["diag"][row["norm"]] = value
            else:
                entry["errors"][row["norm"]] = value
            if row["norm"] not in diag_names and row["norm"] not in norm_names:
                norm_names.append(row["norm"])
            if row["norm"] not in diag_names and N != first_N:
                eocs.setdefault(row["norm"], []).append(_parse(row["eoc_vs_prev"]))
    Ns = sorted(rows)
    report = ConsistencyReport(
        case or "",
        [(N, rows[N]["h"]) for N in Ns],
        [rows[N]["errors"] for N in Ns],
        eoc=eocs,
        diagnostics=[rows[N]["diag"] for N in Ns] if diag_names else [],
        status=status_meta or [rows[N]["status"] for N in Ns],
        metadata=meta,
        norm_names=norm_names,
    )
    return report


def write_limsup(results: Sequence[LimsupResult], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LIMSUP_HEADER)
        for res in results:
            for h, est in zip(res.hs, res.estimates):
                writer.writerow([res.case, _fmt(float(res.k)), _fmt(h), _fmt(est), res.verdict])
    return path


def read_limsup(path) -> list[LimsupResult]:
    grouped: dict[tuple[str, float], dict] = {}
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != LIMSUP_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        for row in reader:
            key = (row["case"], float(row["k"]))
            g = grouped.setdefault(key, {"hs": [], "est": [], "verdict": row["verdict"]})
            g["hs"].append(float(row["h"]))
            g["est"].append(float(row["limsup_estimate"]))
    return [LimsupResult(c, k, tuple(g["hs"]), tuple(g["est"]), g["verdict"])
            for (c, k), g in grouped.items()]
