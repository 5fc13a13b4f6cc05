"""Command-line driver: density, ratios, charsum and census pipelines.

Every run writes a JSON summary (with config hash and package version) and
CSV tables into the output directory.  Exit status is 0 when every budget
assertion passes, 1 when one fails and 2 on invalid input.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .arith import FamilySpec, count_divisible, enumerate_family, family_count_asymptotic
from .charsum import CharSumGrid, envelope_scan, write_grid_csv
from .curve import WeierstrassCurve, build_hecke_table, reference_curve
from .density_nt import QuadSettings, coverage_bound, nt_density_total
from .errors import TwistDensityError
from .ratios import nt_vs_ratios
from .special import TruncationPolicy
from .testfn import KINDS, make_test_function

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2

# |Ratios - NT| must stay below this multiple of X^{-(1 - sigma)/2}.
RATIOS_ENVELOPE_C = 1.0
CANCELLATION_TOL = 1e-10
CHARSUM_MAX_EXPONENT = 1.3
CENSUS_SQRT_C = 5.0
CENSUS_PRIMES = (3, 7, 13)


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    curve: list = field(default_factory=lambda: list(reference_curve().coefficients))
    conductor: int = 11
    omega: int = 1
    X: list = field(default_factory=lambda: [10_000])
    sigma: float = 0.5
    test_function: str = "fejer"
    prime_limit: int = 10_000
    power_limit: int = 30
    tail_eps: float = 1e-9
    output_dir: str = "twistdensity-out"
    jobs: int = 0  # 0 means all available cores
    charsum_N: list = field(default_factory=lambda: [100, 1000])
    charsum_M: list = field(default_factory=lambda: [3, 11, 15])
    charsum_X: list = field(default_factory=lambda: [1000, 10_000])
    charsum_selector: str = "square"
    census_M: list = field(default_factory=lambda: [11, 37])
    census_X: list = field(default_factory=lambda: [10_000, 100_000, 1_000_000])

    def validate(self) -> "RunConfig":
        if len(self.curve) != 5:
            raise ConfigError("curve needs five integers a1,a2,a3,a4,a6")
        if not 0 < self.sigma < 1:
            raise ConfigError(f"sigma = {self.sigma} must lie in (0, 1)")
        if not self.X or any(int(x) < 10 for x in self.X):
            raise ConfigError("every X must be at least 10")
        if self.test_function not in KINDS:
            raise ConfigError(f"test_function must be one of {KINDS}")
        if self.prime_limit < 2 or self.power_limit < 1:
            raise ConfigError("prime_limit and power_limit must be positive")
        if not self.tail_eps > 0:
            raise ConfigError("tail_eps must be positive")
        if self.jobs < 0:
            raise ConfigError("jobs must be nonnegative")
        self.curve_model()
        return self

    def curve_model(self) -> WeierstrassCurve:
        return WeierstrassCurve(*(int(a) for a in self.curve), M=int(self.conductor), omega=int(self.omega))

    def hash(self) -> str:
        # The output location and pool size do not change results.
        payload = {k: v for k, v in asdict(self).items() if k not in ("output_dir", "jobs")}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()

    @property
    def workers(self) -> int:
        return self.jobs or os.cpu_count() or 1


def _int_list(text: str) -> list:
    try:
        return [int(float(v)) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from exc


def load_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    known = {f.name for f in fields(RunConfig)}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("X", "curve", "charsum_N", "charsum_M", "charsum_X", "census_M", "census_X"):
            if key in data and not isinstance(data[key], list):
                data[key] = _int_list(data[key])
        cfg = replace(cfg, **data)
    overrides = {
        "X": _int_list(args.X) if args.X else None,
        "sigma": args.sigma,
        "curve": _int_list(args.curve) if args.curve else None,
        "conductor": args.conductor,
        "omega": args.omega,
        "prime_limit": args.prime_limit,
        "power_limit": args.power_limit,
        "tail_eps": args.tail_eps,
        "output_dir": args.out,
        "jobs": args.jobs,
        "test_function": getattr(args, "test_function", None),
    }
    for name in ("N", "M", "selector"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[f"charsum_{name}"] = value if name == "selector" else _int_list(value)
    if getattr(args, "census_M", None):
        overrides["census_M"] = _int_list(args.census_M)
    cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    try:
        return cfg.validate()
    except TypeError as exc:
        raise ConfigError(f"malformed config value: {exc}") from exc


# ----------------------------------------------------------------------------
# output helpers
# ----------------------------------------------------------------------------


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return [_plain(obj.real), _plain(obj.imag)]
    return obj


def _write_json(cfg: RunConfig, name: str, body: dict) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = {"command": name, "version": __version__, "config_hash": cfg.hash(), "config": asdict(cfg)}
    doc["config"].pop("output_dir")
    doc["config"].pop("jobs")
    doc.update(body)
    path = out / f"{name}.json"
    path.write_text(json.dumps(_plain(doc), indent=2, sort_keys=True) + "\n")
    return path


def _write_csv(cfg: RunConfig, filename: str, header: list, rows: list) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / filename
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def _map(cfg: RunConfig, fn, items: list) -> list:
    """Ordered map, in a process pool when more than one worker is allowed."""
    if cfg.workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(cfg.workers, len(items))) as pool:
        return list(pool.map(fn, items))


def _report(checks: dict) -> int:
    for name, ok in checks.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return EXIT_OK if all(checks.values()) else EXIT_FAIL


# ----------------------------------------------------------------------------
# pipelines
# ----------------------------------------------------------------------------


def _setup(cfg: RunConfig, X: int):
    curve = cfg.curve_model()
    f = make_test_function(cfg.test_function, cfg.sigma)
    family = enumerate_family(FamilySpec(int(X), curve.M, omega=curve.omega))
    limit = max(cfg.prime_limit, int(coverage_bound(family.L, f.sigma)) + 1)
    table = build_hecke_table(curve, limit)
    policy = TruncationPolicy(prime_limit=cfg.prime_limit, power_limit=cfg.power_limit)
    return f, family, table, policy, QuadSettings(tail_eps=cfg.tail_eps)


def _density_one(job):
    cfg, X = job
    f, family, table, policy, q = _setup(cfg, X)
    return nt_density_total(family, table, f, policy, q).as_dict()


def cmd_density(cfg: RunConfig) -> int:
    results = _map(cfg, _density_one, [(cfg, X) for X in cfg.X])
    rows, checks = [], {}
    for X, b in zip(cfg.X, results):
        disc = b["total_direct"] - b["total_closed"]
        rows.append([X, b["diagnostics"]["X_star"], b["total_closed"], b["total_direct"], disc, b["envelope"], abs(disc) / b["envelope"]])
        e2 = b["diagnostics"]
        checks[f"X={X}: |direct - closed| within envelope"] = bool(abs(disc) <= b["envelope"])
        checks[f"X={X}: s_even_2 closed vs direct within envelope"] = bool(abs(b["s_even_2"] - e2["s_even_2_direct"]) <= e2["s_even_2_envelope"])
    _write_csv(cfg, "density_sweep.csv", ["X", "X_star", "total_closed", "total_direct", "discrepancy", "envelope", "envelope_ratio"], rows)
    _write_json(cfg, "density", {"runs": {str(X): b for X, b in zip(cfg.X, results)}, "checks": checks})
    return _report(checks)


def _ratios_one(job):
    cfg, X = job
    f, family, table, policy, q = _setup(cfg, X)
    report, nt, rat = nt_vs_ratios(family, table, f, policy, q)
    return report, nt.as_dict(), rat.as_dict()


def cmd_ratios(cfg: RunConfig) -> int:
    results = _map(cfg, _ratios_one, [(cfg, X) for X in cfg.X])
    runs, checks, sweep = {}, {}, []
    Path(cfg.output_dir).mkdir(parents=True, exist_ok=True)
    for X, (report, nt, rat) in zip(cfg.X, results):
        report.write_csv(Path(cfg.output_dir) / f"comparison_X{X}.csv")
        runs[str(X)] = {
            "nt": nt,
            "ratios": rat,
            "oscillatory": {"value": rat["ae_oscillatory"], "error": rat["oscillatory_error"], "g0_half": rat["g0_half"]},
            "comparison": {k: v for k, v in asdict(report).items() if k != "rows"},
        }
        sweep.append([X, report.nt_total, report.ratios_total, report.discrepancy, report.predicted, report.cancellation_residual, report.envelope_ratio])
        checks[f"X={X}: Ratios - NT equals oscillatory - g(0)/2"] = bool(report.cancellation_residual <= CANCELLATION_TOL)
        checks[f"X={X}: |Ratios - NT| within envelope"] = bool(report.envelope_ratio <= RATIOS_ENVELOPE_C)
    _write_csv(cfg, "ratios_sweep.csv", ["X", "nt_total", "ratios_total", "discrepancy", "predicted", "cancellation_residual", "envelope_ratio"], sweep)
    _write_json(cfg, "ratios", {"runs": runs, "checks": checks})
    return _report(checks)


def cmd_charsum(cfg: RunConfig) -> int:
    grid = CharSumGrid(cfg.charsum_N, cfg.charsum_M, cfg.charsum_X, cfg.charsum_selector)
    report = envelope_scan(grid)
    Path(cfg.output_dir).mkdir(parents=True, exist_ok=True)
    write_grid_csv(report, Path(cfg.output_dir) / "charsum.csv")
    checks = {
        "S <= S1 + S2 on every cell": report.inequality_holds,
        "every envelope ratio <= C from the smallest cell": report.bounded,
        f"X-exponent of S <= {CHARSUM_MAX_EXPONENT}": report.max_exponent <= CHARSUM_MAX_EXPONENT,
    }
    body = {
        "C": report.C,
        "max_exponent": report.max_exponent,
        "exponents": {f"N={N},M={M}": e for (N, M), e in report.exponents.items()},
        "records": [asdict(r) for r in report.records],
        "checks": checks,
    }
    _write_json(cfg, "charsum", body)
    return _report(checks)


def _census_one(job):
    M, X = job
    fam = enumerate_family(FamilySpec(X, M))
    asym = family_count_asymptotic(X, M)
    row = {"M": M, "X": X, "count": fam.cardinality, "asymptotic": asym, "normalized_error": (fam.cardinality - asym) / math.sqrt(X)}
    for p in CENSUS_PRIMES + (M,):
        row[f"divisible_by_{p}"] = count_divisible(fam, p)
    return row


def cmd_census(cfg: RunConfig) -> int:
    jobs = [(int(M), int(X)) for M in cfg.census_M for X in cfg.census_X]
    for M, _ in jobs:
        FamilySpec(10, M)  # validates the conductor
    rows = _map(cfg, _census_one, jobs)
    checks = {}
    for r in rows:
        M, X, n = r["M"], r["X"], r["count"]
        bound = CENSUS_SQRT_C * math.sqrt(X)
        checks[f"M={M} X={X}: count within 5 sqrt(X)"] = abs(n - r["asymptotic"]) <= bound
        for p in CENSUS_PRIMES:
            checks[f"M={M} X={X}: multiples of {p} within 5 sqrt(X)"] = abs(r[f"divisible_by_{p}"] - n / (p + 1)) <= bound
        checks[f"M={M} X={X}: no multiples of M"] = r[f"divisible_by_{M}"] == 0
    header = ["M", "X", "count", "asymptotic", "normalized_error"] + [f"divisible_by_{p}" for p in CENSUS_PRIMES] + ["divisible_by_M"]
    _write_csv(cfg, "census.csv", header, [[r[h] if h != "divisible_by_M" else r[f"divisible_by_{r['M']}"] for h in header] for r in rows])
    _write_json(cfg, "census", {"rows": rows, "checks": checks})
    return _report(checks)


COMMANDS = {"density": cmd_density, "ratios": cmd_ratios, "charsum": cmd_charsum, "census": cmd_census}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config; flags override its keys")
    common.add_argument("--X", help="X or comma-separated X grid")
    common.add_argument("--sigma", type=float, help="support of g_hat, in (0, 1)")
    common.add_argument("--test-function", dest="test_function", choices=KINDS)
    common.add_argument("--curve", metavar="a1,a2,a3,a4,a6")
    common.add_argument("--conductor", type=int)
    common.add_argument("--omega", type=int, choices=(-1, 1))
    common.add_argument("--prime-limit", dest="prime_limit", type=int)
    common.add_argument("--power-limit", dest="power_limit", type=int)
    common.add_argument("--tail-eps", dest="tail_eps", type=float)
    common.add_argument("--out", metavar="DIR")
    common.add_argument("--jobs", type=int, metavar="N", help="worker processes (default: all cores)")

    parser = argparse.ArgumentParser(prog="twistdensity", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("density", parents=[common], help="closed-form vs direct one-level density")
    sub.add_parser("ratios", parents=[common], help="Ratios prediction compared with the density")
    cs = sub.add_parser("charsum", parents=[common], help="restricted character-sum grid scan")
    cs.add_argument("--N", help="comma-separated N grid")
    cs.add_argument("--M", help="comma-separated squarefree M grid")
    cs.add_argument("--selector", choices=("square", "nonsquare"))
    ce = sub.add_parser("census", parents=[common], help="family counts against their asymptotics")
    ce.add_argument("--census-M", dest="census_M", help="comma-separated prime conductors")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        if args.command == "charsum" and args.X:
            cfg = replace(cfg, charsum_X=cfg.X)
        if args.command == "census" and args.X:
            cfg = replace(cfg, census_X=cfg.X)
        return COMMANDS[args.command](cfg)
    except (ConfigError, TwistDensityError) as exc:
        print(f"twistdensity: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
