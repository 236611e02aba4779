"""Command-line front end: solve / sensitivity / sweep / verify.

Configuration comes from flags, optionally seeded by a flat JSON config file
whose keys mirror the flag names; explicit flags win.  All file output uses
fixed 17-digit scientific notation (CSV / plot data) or shortest round-trip
floats (JSON), so identical configs produce byte-identical artifacts.

Exit codes: 0 success, 1 numerical/convergence failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EigenshiftError, UsageError
from .ground_state import (
    Domain,
    ground_state_metadata,
    solve_ground_state,
    write_ground_state_csv,
    write_ground_state_json,
)
from .potentials import (
    PotentialSpec,
    canonical_string,
    classify_convexity,
    parse_potential,
)
from .sensitivity import (
    compute_sensitivity,
    sensitivity_metadata,
    write_sensitivity_json,
    write_u_dot_csv,
)
from .sweep import (
    check_theorem,
    sweep,
    write_plot_columns,
    write_sweep_csv,
    write_verdict_json,
)
from .tolerances import DEFAULT_TOLS, Tolerances
from .verify import run_battery

MODES = ("solve", "sensitivity", "sweep", "verify")
FORMATS = ("csv", "json", "plot")
_TOL_FLAGS = ("res", "norm", "match", "orth", "trunc", "sign", "margin")

_CONFIG_KEYS = {
    "potential", "a", "t", "t-range", "N", "h-t", "out-dir", "format",
    "threads", "n-t",
} | {f"tol-{k}" for k in _TOL_FLAGS}


@dataclass
class RunConfig:
    mode: str
    potential: str = ""
    spec: PotentialSpec = None
    a: float = None
    t: float = None
    t_range: tuple = None          # (t_min, t_max, count)
    N: int = 2001
    n_t: int = 31
    h_t: float = None
    tols: Tolerances = DEFAULT_TOLS
    out_dir: Path = field(default_factory=Path)
    formats: tuple = ("csv", "json")
    threads: int = 1


def _parse_extended_real(text: str, flag: str) -> float:
    token = text.strip().lower()
    if token in ("-inf", "-infinity"):
        return float("-inf")
    try:
        value = float(token)
    except ValueError:
        raise UsageError(f"{flag}: expected a real number or -inf, got {text!r}") from None
    if math.isnan(value) or value == float("inf"):
        raise UsageError(f"{flag}: {text!r} is not a finite value or -inf")
    return value


def _parse_t_range(text: str) -> tuple:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"--t-range: expected min:max:count, got {text!r}")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"--t-range: malformed component in {text!r}") from None
    if not lo < hi:
        raise UsageError(f"--t-range: need t_min < t_max, got {text!r}")
    if count < 5:
        raise UsageError(f"--t-range: need at least 5 samples, got {count}")
    return lo, hi, count


def _parse_formats(text: str) -> tuple:
    items = tuple(s.strip() for s in text.split(",") if s.strip())
    for item in items:
        if item not in FORMATS:
            raise UsageError(f"--format: unknown format {item!r} (choose from {','.join(FORMATS)})")
    if not items:
        raise UsageError("--format: empty format list")
    return items


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eigenshift",
        description="Dirichlet ground states on (a,t) and the energy curve "
                    "over the moving right endpoint",
    )
    sub = parser.add_subparsers(dest="mode")
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--config", default=None, help="flat JSON config file; flags override")
        p.add_argument("--potential", default=None,
                       help="family:key=value,... e.g. quadratic:c2=1")
        p.add_argument("--a", default=None, help="left endpoint (number or -inf)")
        p.add_argument("--N", default=None, help="interior grid nodes")
        p.add_argument("--out-dir", default=None)
        p.add_argument("--format", default=None, help="comma list of csv,json,plot")
        p.add_argument("--threads", default=None)
        for k in _TOL_FLAGS:
            p.add_argument(f"--tol-{k}", default=None)
        if mode in ("solve", "sensitivity"):
            p.add_argument("--t", default=None, help="right endpoint")
        if mode == "sensitivity":
            p.add_argument("--h-t", default=None, help="FD step for the oracle")
        if mode == "sweep":
            p.add_argument("--t-range", default=None, help="min:max:count")
        if mode == "verify":
            p.add_argument("--n-t", default=None, help="sweep samples per battery entry")
    return parser


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config file must hold a flat JSON object")
    for key in data:
        if key not in _CONFIG_KEYS:
            raise UsageError(f"unknown config key {key!r}")
    return data


def _merged(flag_value, config: dict, key: str):
    if flag_value is not None:
        return flag_value
    return config.get(key)


_VALUE_FLAGS = {
    "--config", "--potential", "--a", "--t", "--t-range", "--N", "--h-t",
    "--out-dir", "--format", "--threads", "--n-t",
} | {f"--tol-{k}" for k in _TOL_FLAGS}


def _join_values(argv: list) -> list:
    """Merge ``--flag value`` into ``--flag=value`` so values may start with '-'."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def parse_config(argv: list) -> RunConfig:
    """Parse CLI arguments (and an optional config file) into a RunConfig.

    Flags override config-file keys; unknown keys and malformed values raise
    UsageError naming the offending token.
    """
    parser = _build_parser()
    try:
        ns = parser.parse_args(_join_values(argv))
    except SystemExit as exc:
        # argparse already printed a message; normalize to UsageError for
        # unknown flags, but let --help exit cleanly
        if exc.code == 0:
            raise
        raise UsageError("malformed command line") from None
    if ns.mode is None:
        raise UsageError(f"missing mode (choose from {', '.join(MODES)})")

    config = _load_config_file(ns.config) if ns.config else {}
    cfg = RunConfig(mode=ns.mode)

    pot = _merged(ns.potential, config, "potential")
    if pot is not None:
        cfg.spec = parse_potential(str(pot))
        cfg.potential = canonical_string(cfg.spec)

    a = _merged(ns.a, config, "a")
    if a is not None:
        if isinstance(a, (int, float)):
            cfg.a = float(a)
            if math.isnan(cfg.a) or cfg.a == float("inf"):
                raise UsageError(f"--a: expected a finite value or -inf, got {a!r}")
        else:
            cfg.a = _parse_extended_real(str(a), "--a")

    t = _merged(getattr(ns, "t", None), config, "t")
    if t is not None:
        try:
            cfg.t = float(t)
        except (TypeError, ValueError):
            raise UsageError(f"--t: expected a real number, got {t!r}") from None

    t_range = _merged(getattr(ns, "t_range", None), config, "t-range")
    if t_range is not None:
        cfg.t_range = _parse_t_range(str(t_range))

    n = _merged(ns.N, config, "N")
    if n is not None:
        try:
            cfg.N = int(n)
        except (TypeError, ValueError):
            raise UsageError(f"--N: expected an integer, got {n!r}") from None
        if cfg.N < 16:
            raise UsageError(f"--N: need at least 16 interior nodes, got {cfg.N}")

    n_t = _merged(getattr(ns, "n_t", None), config, "n-t")
    if n_t is not None:
        try:
            cfg.n_t = int(n_t)
        except (TypeError, ValueError):
            raise UsageError(f"--n-t: expected an integer, got {n_t!r}") from None
        if cfg.n_t < 5:
            raise UsageError("--n-t: need at least 5 sweep samples")

    h_t = _merged(getattr(ns, "h_t", None), config, "h-t")
    if h_t is not None:
        try:
            cfg.h_t = float(h_t)
        except (TypeError, ValueError):
            raise UsageError(f"--h-t: expected a real number, got {h_t!r}") from None
        if cfg.h_t <= 0:
            raise UsageError("--h-t: the FD step must be positive")

    overrides = {}
    for k in _TOL_FLAGS:
        raw = _merged(getattr(ns, f"tol_{k}"), config, f"tol-{k}")
        if raw is not None:
            try:
                overrides[k] = float(raw)
            except (TypeError, ValueError):
                raise UsageError(f"--tol-{k}: expected a real number, got {raw!r}") from None
    if overrides:
        cfg.tols = DEFAULT_TOLS.override(**overrides)

    out_dir = _merged(ns.out_dir, config, "out-dir")
    if out_dir is None:
        out_dir = os.environ.get("EIGENSHIFT_OUT_DIR", ".")
    cfg.out_dir = Path(out_dir)

    fmt = _merged(ns.format, config, "format")
    if fmt is not None:
        cfg.formats = _parse_formats(str(fmt))

    threads = _merged(ns.threads, config, "threads")
    if threads is not None:
        try:
            cfg.threads = int(threads)
        except (TypeError, ValueError):
            raise UsageError(f"--threads: expected an integer, got {threads!r}") from None
        if cfg.threads < 1:
            raise UsageError("--threads: need at least 1")

    _validate_mode_fields(cfg)
    return cfg


def _validate_mode_fields(cfg: RunConfig) -> None:
    if cfg.mode in ("solve", "sensitivity", "sweep"):
        if cfg.spec is None:
            raise UsageError(f"{cfg.mode}: --potential is required")
        if cfg.a is None:
            raise UsageError(f"{cfg.mode}: --a is required")
    if cfg.mode in ("solve", "sensitivity"):
        if cfg.t is None:
            raise UsageError(f"{cfg.mode}: --t is required")
        if not cfg.a < cfg.t:
            raise UsageError(f"{cfg.mode}: need a < t, got a={cfg.a}, t={cfg.t}")
    if cfg.mode == "sweep":
        if cfg.t_range is None:
            raise UsageError("sweep: --t-range is required")
        if not cfg.a < cfg.t_range[0]:
            raise UsageError(f"sweep: need a < t_min, got a={cfg.a}, t_min={cfg.t_range[0]}")


def _run_solve(cfg: RunConfig) -> int:
    gs = solve_ground_state(cfg.spec, Domain(cfg.a, cfg.t), cfg.N, tols=cfg.tols)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    if "csv" in cfg.formats:
        write_ground_state_csv(gs, cfg.out_dir / "ground_state.csv")
    if "json" in cfg.formats:
        write_ground_state_json(gs, cfg.out_dir / "ground_state.json")
    if "plot" in cfg.formats:
        write_plot_columns(cfg.out_dir / "u_vs_x.dat", gs.grid.x, gs.u)
    meta = ground_state_metadata(gs)
    print(f"lambda = {meta['lambda']!r}")
    print(f"flux_a = {meta['flux_a']!r}, flux_t = {meta['flux_t']!r}")
    print(f"residual = {meta['residual']:.3e}, a_eff = {meta['a_eff']!r}")
    return 0


def _run_sensitivity(cfg: RunConfig) -> int:
    gs = solve_ground_state(cfg.spec, Domain(cfg.a, cfg.t), cfg.N, tols=cfg.tols)
    sens = compute_sensitivity(gs, cfg.spec, tols=cfg.tols, h_t=cfg.h_t)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    if "json" in cfg.formats:
        write_sensitivity_json(sens, cfg.out_dir / "sensitivity.json")
    if "csv" in cfg.formats:
        write_u_dot_csv(sens, gs.grid, cfg.out_dir / "u_dot.csv")
    if "plot" in cfg.formats:
        write_plot_columns(cfg.out_dir / "u_dot_vs_x.dat", gs.grid.x, sens.u_dot)
    for key, val in sensitivity_metadata(sens).items():
        print(f"{key} = {val!r}")
    return 0


def _run_sweep(cfg: RunConfig) -> int:
    lo, hi, count = cfg.t_range
    result = sweep(cfg.spec, cfg.a, lo, hi, count, cfg.N, tols=cfg.tols)
    cls = classify_convexity(cfg.spec, (min(-5.0, lo - 2.0), max(5.0, hi + 1.0)), 201)
    verdict = check_theorem(result, cls)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    if "csv" in cfg.formats:
        write_sweep_csv(result, cfg.out_dir / "sweep.csv")
    if "json" in cfg.formats:
        write_verdict_json(result, cfg.out_dir / "verdict.json", verdict)
    if "plot" in cfg.formats:
        write_plot_columns(cfg.out_dir / "lambda_vs_t.dat", result.ts, result.lambdas)
        write_plot_columns(cfg.out_dir / "lambda_dot_vs_t.dat", result.ts, result.lambda_dots)
        write_plot_columns(cfg.out_dir / "second_diff_vs_t.dat",
                           result.ts[1:-1], result.second_diffs)
    print(f"swept {count} endpoints in [{lo}, {hi}] (V class: {cls.value})")
    for key, val in verdict.as_dict().items():
        print(f"{key} = {val}")
    return 0


def _run_verify(cfg: RunConfig) -> int:
    report = run_battery(N=cfg.N, n_t=cfg.n_t, tols=cfg.tols, threads=cfg.threads)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    text = report.render()
    (cfg.out_dir / "verify_report.txt").write_text(text)
    if "json" in cfg.formats:
        with open(cfg.out_dir / "verify.json", "w") as fh:
            json.dump(report.to_json(), fh, indent=2)
            fh.write("\n")
    print(text, end="")
    return 0 if report.ok else 1


_RUNNERS = {
    "solve": _run_solve,
    "sensitivity": _run_sensitivity,
    "sweep": _run_sweep,
    "verify": _run_verify,
}


def main(argv: list = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return _RUNNERS[cfg.mode](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except EigenshiftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
