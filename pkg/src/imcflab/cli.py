"""Command-line surface: reproducible pipelines over the library modules.

Every subcommand reads an optional sectioned key-value config file, lets
flags override file values, echoes the merged effective configuration into
``manifest.json`` next to its artifacts (with a SHA-256 of the config and
the package versions), and writes numbers with 17 significant digits so two
runs of the same config produce byte-identical CSV/JSON artifacts (wall
time in the manifest excepted).

Exit codes: 0 ok, 2 config error, 3 solver failure, 4 verification failure.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import (FMT, RadialGrid, GeometryError, flat_profile,
                       profile_from_schwarzschild, UniformCubic)
from .energy import EnergyError, dec_residual
from .flow import FlowError, run_classical_flow, monotone_quantities
from .elliptic import (EllipticError, EllipticProblem, solve_regularized,
                       barrier_check, epsilon_schedule)
from .weak import WeakFlowError, extract_level_sets, weak_h_check, growth_ledger
from .mass import MassError, adm_mass, penrose_verdict
from .scenarios import (ScenarioError, make_scenario, build_example,
                        flow_gauge, find_horizon)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_VERIFY = 4

SOLVER_ERRORS = (GeometryError, EnergyError, FlowError, EllipticError,
                 WeakFlowError, MassError, ScenarioError)


class ConfigError(ValueError):
    pass


class MissingArtifacts(ValueError):
    pass


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

_DEFAULTS = {
    "scenario": {"kind": "flat", "m": 1.0, "delta": 1e-2, "n": 8001,
                 "s_max": 40.0, "box_extent": 40.0},
    "solver": {"epsilon": 1e-3, "L": 8.0, "s_inner": 2.0,
               "homotopy_steps": 8, "r_ref": float("nan"),
               "newton_tol": 1e-10},
    "flow": {"s0": "1.0", "t_end": 5.0, "dt": 1e-3, "time_samples": 16},
    "output": {"directory": "out"},
}

_TYPES = {
    ("scenario", "kind"): str, ("scenario", "m"): float,
    ("scenario", "delta"): float, ("scenario", "n"): int,
    ("scenario", "s_max"): float, ("scenario", "box_extent"): float,
    ("solver", "epsilon"): float, ("solver", "L"): float,
    ("solver", "s_inner"): float, ("solver", "homotopy_steps"): int,
    ("solver", "r_ref"): float, ("solver", "newton_tol"): float,
    ("flow", "s0"): str, ("flow", "t_end"): float, ("flow", "dt"): float,
    ("flow", "time_samples"): int,
    ("output", "directory"): str,
}


@dataclass
class RunConfig:
    """Merged effective configuration of one subcommand invocation."""

    sections: dict = field(default_factory=lambda: {
        name: dict(vals) for name, vals in _DEFAULTS.items()})

    def get(self, section: str, key: str):
        return self.sections[section][key]

    def set(self, section: str, key: str, raw):
        caster = _TYPES.get((section, key))
        if caster is None:
            raise ConfigError(f"unknown config field [{section}] {key}")
        try:
            self.sections[section][key] = caster(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for [{section}] {key}: {raw!r} "
                              f"({exc})") from exc

    def validate(self):
        eps = self.get("solver", "epsilon")
        L = self.get("solver", "L")
        for name in ("epsilon", "newton_tol"):
            if not self.get("solver", name) > 0:
                raise ConfigError(f"[solver] {name} must be positive")
        for name in ("t_end", "dt"):
            if not self.get("flow", name) > 0:
                raise ConfigError(f"[flow] {name} must be positive")
        cap = epsilon_schedule(L)
        if eps > cap:
            raise ConfigError(f"[solver] epsilon={eps} exceeds the "
                              f"solvability schedule eps(L)={cap:.3e}")

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, float) and not np.isfinite(v):
                return None
            return v
        return {name: {k: clean(v) for k, v in vals.items()}
                for name, vals in sorted(self.sections.items())}

    def sha256(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        parser = configparser.ConfigParser()
        parser.optionxform = str        # keep key case: L is not l
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"config parse error in {path}: {exc}") from exc
        config = cls()
        for section in parser.sections():
            if section not in config.sections:
                raise ConfigError(f"unknown config section [{section}]")
            for key, raw in parser.items(section):
                config.set(section, key, raw)
        return config


def _load_config(args) -> RunConfig:
    config = (RunConfig.from_file(args.config) if getattr(args, "config", None)
              else RunConfig())
    overrides = {
        ("scenario", "kind"): "scenario", ("scenario", "m"): "m",
        ("scenario", "delta"): "delta", ("scenario", "n"): "n",
        ("scenario", "s_max"): "s_max",
        ("solver", "epsilon"): "epsilon", ("solver", "L"): "L",
        ("solver", "s_inner"): "s_inner",
        ("flow", "s0"): "s0", ("flow", "t_end"): "t_end",
        ("flow", "dt"): "dt",
        ("output", "directory"): "out",
    }
    for (section, key), flag in overrides.items():
        value = getattr(args, flag.replace("-", "_"), None)
        if value is not None:
            config.set(section, key, value)
    config.validate()
    return config


def _write(outdir: Path, name: str, text: str):
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / name).write_text(text)


def _manifest(outdir: Path, config: RunConfig, t0: float):
    import scipy
    from importlib.metadata import version as pkg_version

    try:
        own = pkg_version("imcflab")
    except Exception:                                  # pragma: no cover
        own = "unknown"
    doc = {
        "config": config.to_dict(),
        "config_sha256": config.sha256(),
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "imcflab": own,
        },
        "wall_time_s": time.perf_counter() - t0,
    }
    _write(outdir, "manifest.json", json.dumps(doc, sort_keys=True, indent=1))


def _scenario_triple(config: RunConfig):
    kind = config.get("scenario", "kind")
    m = config.get("scenario", "m")
    n = config.get("scenario", "n")
    s_max = config.get("scenario", "s_max")
    if kind == "example":
        return build_example(m, config.get("scenario", "delta"),
                             RadialGrid(-s_max, s_max, n))
    params = {}
    if kind in ("schwarzschild", "doubled_schwarzschild"):
        params = {"m": m, "s_max": s_max, "n": n}
    elif kind == "isotropic":
        params = {"m": m, "box_extent": config.get("scenario", "box_extent")}
    return make_scenario(kind, **params)


def _resolve_s0(spec: str, metric) -> float:
    from scipy.optimize import brentq

    if spec.startswith("at-r="):
        target = float(spec[len("at-r="):])
        grid = metric.grid
        lo = max(grid.s_min, 0.0) if grid.contains(0.0) else grid.s_min
        return float(brentq(lambda s: float(metric.r_at(s)) - target,
                            lo, grid.s_max))
    return float(spec)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_run_classical(args) -> int:
    t0 = time.perf_counter()
    config = _load_config(args)
    outdir = Path(config.get("output", "directory"))
    triple = _scenario_triple(config)
    gauge = flow_gauge(triple)
    s0 = _resolve_s0(config.get("flow", "s0"), gauge.metric)
    trace = run_classical_flow(gauge, s0=s0,
                               t_end=config.get("flow", "t_end"),
                               dt=config.get("flow", "dt"))
    mono = monotone_quantities(trace)
    summary = {
        "min_A_step": float(np.min(np.diff(mono["A_series"]))),
        "min_B_step": float(np.min(np.diff(mono["B_series"]))),
        "min_m_h_step": float(np.min(np.diff(mono["m_h_series"]))),
        "A_derivative_max_gap": mono["A_derivative_check"]["max_gap"],
        "B_derivative_max_gap": mono["B_derivative_check"]["max_gap"],
        "final_m_h": float(mono["m_h_series"][-1]),
    }
    _write(outdir, "flow.csv", trace.to_csv())
    _write(outdir, "monotone.json", json.dumps(summary, sort_keys=True))
    if triple.dec is not None:
        _write(outdir, "dec.json", triple.dec.to_json())
    _manifest(outdir, config, t0)
    print(f"flow: {len(trace)} samples, final m_h = {FMT % trace.m_h[-1]}")
    return EXIT_OK


def _elliptic_problem(config: RunConfig):
    kind = config.get("scenario", "kind")
    n = config.get("scenario", "n")
    s_max = config.get("scenario", "s_max")
    kwargs = {}
    if kind == "flat":
        metric = flat_profile(1.0, s_max, n)
    elif kind == "schwarzschild":
        metric = profile_from_schwarzschild(config.get("scenario", "m"), s_max,
                                            RadialGrid(-s_max, s_max, n))
        kwargs["r_ref"] = float(metric.r_at(config.get("solver", "s_inner")))
    else:
        raise ConfigError(f"solve-elliptic supports flat or schwarzschild "
                          f"scenarios, not {kind!r}")
    r_ref = config.get("solver", "r_ref")
    if np.isfinite(r_ref):
        kwargs["r_ref"] = r_ref
    return metric, EllipticProblem(
        metric=metric,
        epsilon=config.get("solver", "epsilon"),
        L=config.get("solver", "L"),
        s_inner=config.get("solver", "s_inner"),
        homotopy_steps=config.get("solver", "homotopy_steps"),
        **kwargs)


def _cmd_solve_elliptic(args) -> int:
    t0 = time.perf_counter()
    config = _load_config(args)
    outdir = Path(config.get("output", "directory"))
    _, problem = _elliptic_problem(config)
    solution = solve_regularized(problem)
    audit = barrier_check(solution, problem)
    _write(outdir, "solution.csv", solution.to_csv())
    _write(outdir, "solution.json", solution.header_json())
    _write(outdir, "barrier.json", json.dumps(audit, sort_keys=True))
    _manifest(outdir, config, t0)
    print(f"elliptic: residual {solution.residual_norm:.3e}, "
          f"barrier {'ok' if audit['passed'] else 'VIOLATED'}")
    return EXIT_OK if audit["passed"] else EXIT_VERIFY


def _cmd_run_weak(args) -> int:
    t0 = time.perf_counter()
    config = _load_config(args)
    outdir = Path(config.get("output", "directory"))
    metric, problem = _elliptic_problem(config)
    solution = solve_regularized(problem)
    times = np.linspace(0.05, problem.L - 2.5,
                        config.get("flow", "time_samples"))
    family = extract_level_sets(solution, metric, times)
    zero = UniformCubic(metric.grid.nodes, np.zeros(metric.grid.n))
    audit = weak_h_check(family, zero)
    ledger = growth_ledger(family, zero)
    _write(outdir, "solution.csv", solution.to_csv())
    _write(outdir, "ledger.csv", ledger.to_csv())
    _write(outdir, "weak.json", json.dumps({
        "max_gap": audit["max_gap"],
        "max_relative_gap": audit["max_relative_gap"],
        "untrapped": audit["untrapped"],
        "ledger_all_passed": ledger.all_passed,
    }, sort_keys=True))
    _manifest(outdir, config, t0)
    print(f"weak: max identity gap {audit['max_gap']:.3e}, "
          f"ledger {'ok' if ledger.all_passed else 'VIOLATED'}")
    return EXIT_OK if ledger.all_passed else EXIT_VERIFY


def _cmd_build_example(args) -> int:
    t0 = time.perf_counter()
    config = _load_config(args)
    outdir = Path(config.get("output", "directory"))
    s_max = config.get("scenario", "s_max")
    triple = build_example(config.get("scenario", "m"),
                           config.get("scenario", "delta"),
                           RadialGrid(-s_max, s_max,
                                      config.get("scenario", "n")))
    _write(outdir, "triple.csv", triple.to_csv())
    _write(outdir, "dec.json", triple.dec.to_json())
    _write(outdir, "provenance.json", triple.provenance_json())
    _manifest(outdir, config, t0)
    print(f"example: DEC min residual {triple.dec.min_residual:.3e} "
          f"({'ok' if triple.dec.passed else 'VIOLATED'})")
    return EXIT_OK if triple.dec.passed else EXIT_VERIFY


def _cmd_find_horizon(args) -> int:
    t0 = time.perf_counter()
    config = _load_config(args)
    outdir = Path(config.get("output", "directory"))
    triple = _scenario_triple(config)
    horizon = find_horizon(triple)
    gauge = flow_gauge(triple)
    tail = gauge.metric.grid.s_max
    adm = adm_mass(gauge.metric,
                   np.linspace(0.6 * tail, 0.95 * tail, 8)).adm_extrapolated
    report = penrose_verdict(horizon["area"], adm)
    _write(outdir, "horizon.json", json.dumps(horizon, sort_keys=True))
    _write(outdir, "mass.json", report.to_json())
    _manifest(outdir, config, t0)
    print(f"horizon: s* = {FMT % horizon['s_star']} ({horizon['kind']}), "
          f"penrose margin {report.penrose_margin:.6g} ({report.verdict})")
    return EXIT_OK


def _expect_fail_fixture(name: str) -> tuple[bool, str]:
    """Run one adversarial fixture; returns (failed_as_expected, summary)."""
    from . import verify as v

    if name == "dec-flat-h":
        metric, weight = v._negative_dec_triple()
        dec = dec_residual(metric, weight)
        return (not dec.passed,
                f"dec min residual {dec.min_residual:.3e}")
    if name == "barrier-noise":
        _, sol, prob = v._flat_elliptic_error(4096, 1e-3)
        audit = barrier_check(v._noise_injected_solution(sol), prob)
        return (not audit["passed"],
                f"barrier violations {audit['violations']}")
    raise ConfigError(f"unknown --expect-fail fixture {name!r}; "
                      "choose dec-flat-h or barrier-noise")


def _cmd_verify(args) -> int:
    from . import verify as v

    if args.expect_fail:
        failed, summary = _expect_fail_fixture(args.expect_fail)
        if failed:
            print(f"expected failure reproduced ({args.expect_fail}): {summary}")
            return EXIT_VERIFY
        print(f"fixture {args.expect_fail} unexpectedly passed: {summary}")
        return EXIT_OK

    numbers = None
    if args.criteria:
        try:
            numbers = sorted({int(tok) for tok in args.criteria.split(",")})
        except ValueError as exc:
            raise ConfigError(f"bad --criteria list {args.criteria!r}") from exc
        unknown = [k for k in numbers if k not in v.CRITERIA]
        if unknown:
            raise ConfigError(f"unknown criteria {unknown}")
    results = v.run_acceptance(numbers)
    for res in results:
        print(res.line())
    if args.out:
        doc = [{"number": r.number, "name": r.name, "passed": r.passed,
                "runtime_s": r.runtime, "details": r.details,
                "error": r.error} for r in results]
        _write(Path(args.out), "verify.json",
               json.dumps(doc, sort_keys=True, default=str))
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def write_report(artifacts: dict) -> tuple[dict, str]:
    """Merge per-subcommand JSON artifacts into one consolidated report.

    ``artifacts`` maps artifact names (dec, monotone, weak, horizon, mass,
    verify, ...) to parsed JSON documents; raises MissingArtifacts when
    empty.  Returns the merged document and a human-readable summary.
    """
    if not artifacts:
        raise MissingArtifacts("no artifacts to report on")
    doc = {"artifacts": dict(sorted(artifacts.items()))}
    lines = ["run report", "=========="]
    if "dec" in artifacts:
        dec = artifacts["dec"]
        lines.append(f"energy condition: min residual {dec['min_residual']:.3e}"
                     f" ({'ok' if dec['passed'] else 'VIOLATED'})")
    if "monotone" in artifacts:
        mono = artifacts["monotone"]
        lines.append(f"flow monotonicity: {mono}")
    if "weak" in artifacts:
        weak = artifacts["weak"]
        lines.append(f"weak identities: max gap {weak['max_gap']:.3e}, "
                     f"ledger {'ok' if weak['ledger_all_passed'] else 'VIOLATED'}")
    if "horizon" in artifacts:
        hz = artifacts["horizon"]
        lines.append(f"horizon: s* = {hz['s_star']:.6g} ({hz['kind']})")
    if "mass" in artifacts:
        mass = artifacts["mass"]
        if mass.get("horizon_area") is None:
            lines.append("penrose: no horizon; "
                         f"PMT margin = adm = {mass['adm']:.6g} >= 0")
        else:
            lines.append(f"penrose: margin {mass['penrose_margin']:.6g} "
                         f"({mass['verdict']})")
    if "verify" in artifacts:
        ok = sum(1 for r in artifacts["verify"] if r["passed"])
        lines.append(f"acceptance: {ok}/{len(artifacts['verify'])} criteria pass")
    summary = "\n".join(lines) + "\n"
    return doc, summary


def _cmd_report(args) -> int:
    indir = Path(args.artifacts)
    artifacts = {}
    if indir.is_dir():
        for path in sorted(indir.glob("*.json")):
            if path.name == "manifest.json":
                continue
            artifacts[path.stem] = json.loads(path.read_text())
    doc, summary = write_report(artifacts)
    _write(indir, "report.json", json.dumps(doc, sort_keys=True, indent=1))
    print(summary, end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="imcflab",
        description="weighted inverse mean curvature flow laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, flags):
        p.add_argument("--config", help="sectioned key-value config file")
        p.add_argument("--out", help="output directory")
        if "scenario" in flags:
            p.add_argument("--scenario", help="flat | schwarzschild | "
                           "doubled_schwarzschild | isotropic | example")
            p.add_argument("--m", type=float, help="mass parameter")
            p.add_argument("--delta", type=float, help="weight amplitude")
            p.add_argument("--n", type=int, help="radial nodes")
            p.add_argument("--s-max", type=float, help="grid half-extent")
        if "solver" in flags:
            p.add_argument("--epsilon", type=float, help="regularization")
            p.add_argument("--L", type=float, help="outer boundary value + 2")
            p.add_argument("--s-inner", type=float, help="initial region radius")
        if "flow" in flags:
            p.add_argument("--s0", help="start coordinate or at-r=<radius>")
            p.add_argument("--t-end", type=float)
            p.add_argument("--dt", type=float)

    p = sub.add_parser("run-classical", help="integrate the classical flow")
    common(p, {"scenario", "flow"})
    p.set_defaults(func=_cmd_run_classical)

    p = sub.add_parser("solve-elliptic", help="regularized level-set solve")
    common(p, {"scenario", "solver"})
    p.set_defaults(func=_cmd_solve_elliptic)

    p = sub.add_parser("run-weak", help="level-set family and growth ledger")
    common(p, {"scenario", "solver"})
    p.set_defaults(func=_cmd_run_weak)

    p = sub.add_parser("build-example", help="construct the perturbed example")
    common(p, {"scenario"})
    p.set_defaults(func=_cmd_build_example)

    p = sub.add_parser("find-horizon", help="outermost generalized horizon")
    common(p, {"scenario"})
    p.set_defaults(func=_cmd_find_horizon)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--criteria", help="comma-separated criterion numbers")
    p.add_argument("--expect-fail",
                   help="adversarial fixture: dec-flat-h | barrier-noise")
    p.add_argument("--out", help="directory for verify.json")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("report", help="consolidate artifacts into a report")
    p.add_argument("--artifacts", required=True, help="artifact directory")
    p.set_defaults(func=_cmd_report)
    return parser


def run_command(argv) -> int:
    """Parse and execute one subcommand; returns the exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, MissingArtifacts) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SOLVER_ERRORS as exc:
        print(f"solver failure [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def main():                                            # pragma: no cover
    sys.exit(run_command(sys.argv[1:]))
