"""Command line: ``limitlbm run <config>`` and ``limitlbm check-stencil <name>``.

Configs are plain ``key = value`` lines.  ``#`` starts a comment and
``[section]`` headers may group keys for readability; every key lives in one
flat namespace.

When ``t_end`` is omitted it defaults to a fraction of the viscous time
``T = L^2 / (4 pi^2 nu)`` of the lowest Fourier mode: 0.2 T for convergence
runs, T for the shear wave (one e-folding), 0.05 T for stress snapshots.

Exit codes: 0 all checks passed, 1 a threshold failed, 2 bad configuration,
3 every resolution blew up.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .consistency import (
    CASE_DIMENSION, CASE_NAMES, DEFAULT_STENCIL, EXACT, UNSTABLE, ConsistencyReport,
    convergence_study, limsup_probe, make_case, stress_study, write_limsup, write_report,
)
from .errors import ConfigError, DomainError
from .grid import INIT_MODES
from .lattice import STENCILS, get_stencil, verify_quadrature

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3
STUDIES = ("convergence", "stress", "limsup", "single_run")
WORKERS_ENV = "LIMITLBM_WORKERS"


@dataclass
class RunConfig:
    case: str
    N_list: list[int]
    nu: float
    output_dir: Path
    t_end: float | None = None
    stencil: str = ""
    U: float | None = None
    L: float = 1.0
    init: str = "equilibrium"
    study: str = "convergence"
    limsup_order: float = 2.0
    limsup_slack: float = 0.2
    worker_count: int = 1
    eoc_min: float = 1.7
    eoc_max: float = 2.3
    sign_min: float = 0.95
    lines: dict[str, int] = field(default_factory=dict, repr=False)


REQUIRED = ("case", "N_list", "nu", "output_dir")
POSITIVE_FLOATS = ("nu", "t_end", "U", "L", "limsup_order", "limsup_slack")
FLOATS = POSITIVE_FLOATS + ("eoc_min", "eoc_max", "sign_min")
KEYS = REQUIRED + ("t_end", "limsup_slack", "stencil", "U", "L", "init", "study", "limsup_order", "worker_count",
                   "eoc_min", "eoc_max", "sign_min")


def _float(text: str, key: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {text!r}", line, key) from None
    if not math.isfinite(value):
        raise ConfigError(f"{key} must be finite", line, key)
    if key in POSITIVE_FLOATS and value <= 0:
        raise ConfigError(f"{key} must be positive, got {value}", line, key)
    return value


def _int(text: str, key: str, line: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {text!r}", line, key) from None


def parse_config(text: str, base_dir: Path | None = None) -> RunConfig:
    raw: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line or (line.startswith("[") and line.endswith("]")):
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno, key)
        if key in raw:
            raise ConfigError(f"duplicate key {key!r}", lineno, key)
        raw[key] = (value, lineno)
    for key in REQUIRED:
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}", None, key)

    values: dict = {}
    for key, (text_value, lineno) in raw.items():
        if key in FLOATS:
            values[key] = _float(text_value, key, lineno)
        elif key == "worker_count":
            values[key] = _int(text_value, key, lineno)
            if values[key] < 1:
                raise ConfigError("worker_count must be at least 1", lineno, key)
        elif key == "N_list":
            Ns = [_int(tok.strip(), key, lineno) for tok in text_value.split(",") if tok.strip()]
            if not Ns or any(N < 4 for N in Ns):
                raise ConfigError("N_list needs integers >= 4", lineno, key)
            if any(b <= a for a, b in zip(Ns, Ns[1:])):
                raise ConfigError("N_list must be strictly ascending", lineno, key)
            values[key] = Ns
        elif key == "output_dir":
            out = Path(text_value)
            values[key] = out if out.is_absolute() or base_dir is None else base_dir / out
        else:
            values[key] = text_value

    line_of = {key: lineno for key, (_, lineno) in raw.items()}
    case = values["case"]
    if case not in CASE_NAMES:
        raise ConfigError(f"case must be one of {CASE_NAMES}", line_of["case"], "case")
    stencil = values.setdefault("stencil", DEFAULT_STENCIL[case])
    if stencil not in STENCILS:
        raise ConfigError(f"stencil must be one of {tuple(STENCILS)}", line_of["stencil"], "stencil")
    if case in CASE_DIMENSION and get_stencil(stencil).d != CASE_DIMENSION[case]:
        where = line_of.get("stencil", line_of["case"])
        raise ConfigError(f"case {case} is {CASE_DIMENSION[case]}-d but stencil {stencil} "
                          f"is {get_stencil(stencil).d}-d", where, "stencil")
    if values.get("init", "equilibrium") not in INIT_MODES:
        raise ConfigError(f"init must be one of {INIT_MODES}", line_of["init"], "init")
    if values.get("study", "convergence") not in STUDIES:
        raise ConfigError(f"study must be one of {STUDIES}", line_of["study"], "study")
    if values.get("study") == "limsup" and len(values["N_list"]) < 3:
        raise ConfigError("a limsup study needs at least three resolutions",
                          line_of["N_list"], "N_list")
    cfg = RunConfig(**values, lines=line_of)
    if cfg.t_end is None:
        cfg.t_end = default_t_end(cfg.case, cfg.study, cfg.nu, cfg.L)
    return cfg


def default_t_end(case: str, study: str, nu: float, L: float) -> float:
    T = L * L / (4.0 * math.pi**2 * nu)
    if study == "stress":
        return 0.05 * T
    return T if case == "shear_wave_3d" else 0.2 * T


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text, path.parent)


def _workers(cfg: RunConfig) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env is None:
        return cfg.worker_count
    try:
        value = int(env)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    if value < 1:
        raise ConfigError(f"{WORKERS_ENV} must be at least 1")
    return value


def _in_band(order, lo: float, hi: float) -> bool:
    return order == EXACT or (isinstance(order, float) and lo <= order <= hi)


def _fmt_order(order) -> str:
    return order if isinstance(order, str) else f"{order:.4f}"


def _finest_order(orders):
    usable = [o for o in orders if o != "NA"]
    return usable[-1] if usable else "NA"


def _check_convergence(rep: ConsistencyReport, cfg: RunConfig) -> list[tuple[str, bool]]:
    checks = []
    for norm in ("L2", "nu_rel"):
        if norm in rep.eoc:
            order = _finest_order(rep.eoc[norm])
            checks.append((f"eoc[{norm}] = {_fmt_order(order)} in [{cfg.eoc_min}, {cfg.eoc_max}]",
                           _in_band(order, cfg.eoc_min, cfg.eoc_max)))
    return checks


def _check_stress(rep: ConsistencyReport, cfg: RunConfig) -> list[tuple[str, bool]]:
    ok = [j for j, st in enumerate(rep.status) if st == "ok"]
    errs = [rep.errors[j]["stress_rel_sup"] for j in ok]
    decreasing = all(b < a for a, b in zip(errs, errs[1:])) or all(e == 0 for e in errs)
    signs = [rep.diagnostics[j]["sign_agreement"] for j in ok]
    return [
        ("stress error strictly decreasing", decreasing),
        (f"sign agreement min {min(signs):.4f} >= {cfg.sign_min}", min(signs) >= cfg.sign_min),
    ]


def run_experiment(cfg: RunConfig, out=None) -> int:
    """Run the configured study, write its reports and return an exit code.

    Unstable resolutions are recorded in the report and only become fatal
    (exit 3) when no resolution survives.
    """
    try:
        workers = _workers(cfg)
        case = make_case(cfg.case, cfg.stencil, cfg.L, cfg.U, cfg.N_list[0])
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"config error: cannot create {cfg.output_dir}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    checks: list[tuple[str, bool]] = []
    all_unstable = False

    if cfg.study == "limsup":
        hs = [cfg.L / N for N in cfg.N_list]
        ks = (cfg.limsup_order, cfg.limsup_order + 1)
        probes = [limsup_probe(case, k, hs, cfg.nu, slack=cfg.limsup_slack) for k in ks]
        write_limsup(probes, cfg.output_dir / "limsup.csv")
        checks.append((f"limsup k={cfg.limsup_order:g} {probes[0].verdict}",
                       probes[0].verdict == "bounded"))
    else:
        if cfg.study == "stress":
            rep = stress_study(case, cfg.N_list, cfg.nu, cfg.t_end, cfg.init, workers)
        else:
            rep = convergence_study(case, cfg.N_list, cfg.nu, cfg.t_end, cfg.init, workers)
        write_report(rep, cfg.output_dir / "report.csv")
        stable = rep.status.count("ok")
        all_unstable = stable == 0
        if rep.status.count(UNSTABLE):
            checks.append((f"{stable} of {len(rep.status)} resolutions stable", stable > 0))
        if cfg.study == "convergence" and not all_unstable:
            checks += _check_convergence(rep, cfg)
        elif cfg.study == "stress" and not all_unstable:
            checks += _check_stress(rep, cfg)

    out = out or sys.stdout
    lines = [f"{'PASS' if ok else 'FAIL'} {label}" for label, ok in checks]
    (cfg.output_dir / "summary.txt").write_text("\n".join(lines) + "\n")
    for line in lines:
        print(line, file=out)
    failed = [label for label, ok in checks if not ok]
    if failed:
        print(f"first failed threshold: {failed[0]}", file=sys.stderr)
    if all_unstable:
        return EXIT_BLOWUP
    return EXIT_FAIL if failed else EXIT_OK


def check_stencil(name: str, out=None) -> int:
    try:
        s = get_stencil(name)
    except DomainError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    report = verify_quadrature(s)
    for line in report.lines():
        print(line, file=out or sys.stdout)
    return EXIT_OK if report.passed() else EXIT_FAIL


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="limitlbm", description="Lattice Boltzmann limit-consistency checks")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a study described by a config file")
    run.add_argument("config")
    chk = sub.add_parser("check-stencil", help="verify Gaussian moment matching up to order 4")
    chk.add_argument("stencil")
    args = parser.parse_args(argv)

    if args.command == "check-stencil":
        return check_stencil(args.stencil)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run_experiment(cfg)


if __name__ == "__main__":
    sys.exit(main())
