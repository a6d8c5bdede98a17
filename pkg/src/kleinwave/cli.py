"""Command-line front end: ``kleinwave {solve,example,basis,validate}``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 validation failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import traceback
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .basis import DEFAULT_BASIS_CAP, SampledFunction, build_basis, default_grid_n
from .cauchy import (
    STRATEGIES,
    CauchyProblem,
    evaluate_on_triangle,
    solve,
)
from .errors import CapacityError, ConfigError, InputError, KleinwaveError, NumericError
from .problems import EXAMPLES, SPECTRAL, exact_solution, example, expression
from .spps import nonvanishing_solution
from .validate import format_table, ladder_errors, run_validation

log = logging.getLogger("kleinwave")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VALIDATION = 0, 1, 2, 3
DEFAULT_PRECISION = 17


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class Config:
    b: float
    q: dict
    g: dict
    h: dict
    strategy: str = "remez"
    n: int = 12
    n_h: int | None = None
    grid_N: int = field(default_factory=default_grid_n)
    mesh_step: float | None = None
    kernel_M: int = 256
    f_slope: complex = 0.0
    exact: str | None = None
    name: str = "solution"
    precision: int = DEFAULT_PRECISION
    cap: int = DEFAULT_BASIS_CAP


_FIELDS = {"b", "q", "g", "h", "strategy", "n", "n_h", "grid_N", "mesh_step", "kernel_M",
           "f_slope", "exact", "name", "precision", "cap"}


def _complex(value, where: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        return complex(value[0], value[1])
    raise ConfigError(f"{where}: expected a number or [re, im], got {value!r}")


def _int(raw: dict, key: str, default, lo: int = 0):
    value = raw.get(key, default)
    if value is None:
        return None
    if not isinstance(value, int) or isinstance(value, bool) or value < lo:
        raise ConfigError(f"field {key!r}: expected an integer >= {lo}, got {value!r}")
    return value


def parse_config(raw: dict) -> Config:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - _FIELDS
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
    for key in ("b", "q", "g", "h"):
        if key not in raw:
            raise ConfigError(f"missing required field {key!r}")
    b = raw["b"]
    if not isinstance(b, (int, float)) or isinstance(b, bool) or not b > 0 or not np.isfinite(b):
        raise ConfigError(f"field 'b': expected a positive number, got {b!r}")
    for key in ("q", "g", "h"):
        if not isinstance(raw[key], dict) or "kind" not in raw[key]:
            raise ConfigError(f"field {key!r}: expected an object with a 'kind'")
    strategy = raw.get("strategy", "remez")
    if strategy not in STRATEGIES:
        raise ConfigError(f"field 'strategy': expected one of {', '.join(STRATEGIES)}, got {strategy!r}")
    grid_N = _int(raw, "grid_N", default_grid_n(), lo=8)
    if grid_N % 2:
        raise ConfigError(f"field 'grid_N': must be even so x = 0 is a node, got {grid_N}")
    mesh_step = raw.get("mesh_step")
    if mesh_step is not None and (not isinstance(mesh_step, (int, float)) or not mesh_step > 0):
        raise ConfigError(f"field 'mesh_step': expected a positive number, got {mesh_step!r}")
    kernel_M = _int(raw, "kernel_M", 256, lo=4)
    if kernel_M % 2:
        raise ConfigError(f"field 'kernel_M': must be even, got {kernel_M}")
    exact = raw.get("exact")
    if exact is not None:
        exact_solution(exact)
    name = raw.get("name", "solution")
    if not isinstance(name, str) or not name or any(c in name for c in "/\\"):
        raise ConfigError(f"field 'name': expected a plain file prefix, got {name!r}")
    precision = _int(raw, "precision", DEFAULT_PRECISION, lo=1)
    return Config(b=float(b), q=raw["q"], g=raw["g"], h=raw["h"], strategy=strategy,
                  n=_int(raw, "n", 12), n_h=_int(raw, "n_h", None), grid_N=grid_N,
                  mesh_step=None if mesh_step is None else float(mesh_step), kernel_M=kernel_M,
                  f_slope=_complex(raw.get("f_slope", 0.0), "field 'f_slope'"), exact=exact,
                  name=name, precision=precision, cap=_int(raw, "cap", DEFAULT_BASIS_CAP, lo=1))


def load_config(path: str | os.PathLike) -> Config:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(raw)


def sampled(entry: dict, key: str, cfg: Config) -> SampledFunction:
    kind = entry.get("kind")
    if kind == "constant":
        if "value" not in entry:
            raise ConfigError(f"field {key!r}: constant needs 'value'")
        return SampledFunction.constant(_complex(entry["value"], f"field '{key}.value'"), cfg.b, cfg.grid_N)
    if kind == "table":
        values = entry.get("values")
        if not isinstance(values, list):
            raise ConfigError(f"field '{key}.values': expected a list of numbers")
        if len(values) != cfg.grid_N + 1:
            raise ConfigError(f"field '{key}.values': expected {cfg.grid_N + 1} entries "
                              f"(grid_N + 1), got {len(values)}")
        arr = np.array([_complex(v, f"field '{key}.values[{i}]'") for i, v in enumerate(values)])
        try:
            return SampledFunction(cfg.b, arr)
        except InputError as exc:
            raise ConfigError(f"field '{key}.values': {exc}") from None
    if kind in ("expression", "expression-id"):
        ident = entry.get("id")
        if not isinstance(ident, str):
            raise ConfigError(f"field '{key}.id': expected an expression id")
        return SampledFunction.from_callable(expression(ident), cfg.b, cfg.grid_N)
    raise ConfigError(f"field '{key}.kind': expected constant, table or expression-id, got {kind!r}")


def _spectral(entry: dict, key: str):
    if "spectral" in entry:
        vals = entry["spectral"]
        if not isinstance(vals, list) or len(vals) != 3:
            raise ConfigError(f"field '{key}.spectral': expected [lambda, v0, v0p]")
        return tuple(_complex(v, f"field '{key}.spectral'") for v in vals)
    if entry.get("kind") in ("expression", "expression-id"):
        return SPECTRAL.get(entry.get("id"))
    return None


def build_problem(cfg: Config) -> CauchyProblem:
    return CauchyProblem(
        q=sampled(cfg.q, "q", cfg), g=sampled(cfg.g, "g", cfg), h_data=sampled(cfg.h, "h", cfg),
        f_slope=cfg.f_slope, g_spectral=_spectral(cfg.g, "g"), h_spectral=_spectral(cfg.h, "h"),
        exact=exact_solution(cfg.exact) if cfg.exact else None, name=cfg.name)


def example_config(name: str, strategy: str, n: int | None = None) -> Config:
    ex = example(name)
    if strategy not in ex.orders:
        raise ConfigError(f"strategy {strategy!r} is not available for {name} "
                          f"(choose from {', '.join(ex.orders)})")
    n_g, n_h = ex.orders[strategy]
    if n is not None:
        n_g, n_h = n, max(n - 1, 0)
    slope = ex.f_slope
    return Config(b=ex.b, q={"kind": "expression-id", "id": ex.q}, g={"kind": "expression-id", "id": ex.g},
                  h={"kind": "expression-id", "id": ex.h}, strategy=strategy, n=n_g, n_h=n_h,
                  f_slope=complex(slope), exact=ex.exact, name=name, kernel_M=ex.kernel_M)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _fmt(value: float, precision: int) -> str:
    text = f"{float(value):.{precision}g}"
    return "0" if text in ("-0", "0") else text


def write_csv(path: Path, header: list[str], columns: list[np.ndarray], precision: int) -> None:
    cols = [np.asarray(c, dtype=float) for c in columns]
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(_fmt(v, precision) for v in row) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag] if obj.imag else obj.real
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def write_json(path: Path, payload: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_solve(cfg: Config, out: Path, extra_taylor: tuple[int, int] | None = None) -> dict:
    """Solve, evaluate on the triangle and write the three output files."""
    out.mkdir(parents=True, exist_ok=True)
    problem = build_problem(cfg)
    sol = solve(problem, cfg.strategy, cfg.n, cfg.n_h, cap=cfg.cap)
    mesh = evaluate_on_triangle(sol, cfg.mesh_step)
    prec = cfg.precision
    header = ["x", "t", "re_u", "im_u"]
    cols = [mesh.x, mesh.t, mesh.values.real, mesh.values.imag]
    summary = {"name": cfg.name, "strategy": cfg.strategy, "n_g": sol.info["n_g"], "n_h": sol.info["n_h"],
               "b": cfg.b, "grid_N": cfg.grid_N, "mesh_step": mesh.step, "version": __version__,
               "certificate": sol.certificate.as_dict(), "approximation": {"g": sol.info["g"],
                                                                          "h": sol.info["h"]}}
    if problem.exact is not None:
        ex = np.asarray(problem.exact(mesh.x, mesh.t), dtype=complex)
        err = np.abs(mesh.values - ex)
        header += ["re_exact", "im_exact", "abs_err"]
        cols += [ex.real, ex.imag, err]
        summary["observed_max_error"] = float(err.max())
        summary["certificate_holds"] = bool(err.max() <= sol.certificate.total)
    write_csv(out / f"{cfg.name}_solution.csv", header, cols, prec)
    x = problem.g.nodes
    write_csv(out / f"{cfg.name}_data_errors.csv", ["x", "abs_err_g", "abs_err_h"],
              [x, np.abs(problem.g.values - sol.g_poly.grid_values()),
               np.abs(problem.h_data.values - sol.h_poly.grid_values())], prec)
    write_json(out / f"{cfg.name}_certificate.json", summary)
    if problem.exact is not None:
        rows = [(cfg.strategy, sol)]
        if extra_taylor is not None and cfg.strategy != "taylor":
            rows.append(("taylor", solve(problem, "taylor", *extra_taylor, cap=cfg.cap)))
        with open(out / f"{cfg.name}_comparison.csv", "w", newline="\n") as fh:
            fh.write("strategy,n_g,n_h,eps1,eps2,max_abs_err,certificate\n")
            for label, s in rows:
                m = mesh if s is sol else evaluate_on_triangle(s, cfg.mesh_step)
                e = float(np.max(np.abs(m.values - problem.exact(m.x, m.t))))
                c = s.certificate
                fh.write(",".join([label, str(s.info["n_g"]), str(s.info["n_h"])]
                                  + [_fmt(v, prec) for v in (c.eps1, c.eps2, e, c.total)]) + "\n")
    return summary


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    summary = run_solve(cfg, Path(args.out))
    _report(summary)
    return EXIT_OK


def cmd_example(args) -> int:
    cfg = example_config(args.name, args.strategy, args.n)
    ex = EXAMPLES[args.name]
    taylor = ex.orders.get("taylor")
    summary = run_solve(cfg, Path(args.out), extra_taylor=taylor)
    _report(summary)
    return EXIT_OK


def cmd_basis(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out)
    q = sampled(cfg.q, "q", cfg)
    f, h_used = nonvanishing_solution(q, cfg.f_slope)
    basis = build_basis(f, cfg.n, h=h_used, cap=cfg.cap)
    out.mkdir(parents=True, exist_ok=True)
    header = ["x"]
    cols = [basis.grid]
    for k in range(cfg.n + 1):
        header += [f"re_phi_{k}", f"im_phi_{k}"]
        cols += [basis.phi[k].values.real, basis.phi[k].values.imag]
    write_csv(out / f"{cfg.name}_basis.csv", header, cols, cfg.precision)
    e1, e2 = ladder_errors(basis, cfg.n)
    report = {"n": cfg.n, "h": complex(basis.h), "min_abs_f": float(np.min(np.abs(basis.f.values))),
              "ladder_d1_rel_error": e1, "ladder_d2_rel_error": e2, "version": __version__}
    write_json(out / f"{cfg.name}_basis_report.json", report)
    print(f"basis order {cfg.n}: min|f| = {report['min_abs_f']:.3e}, "
          f"ladder residuals d1 {e1:.2e}, d2 {e2:.2e}")
    return EXIT_OK


def cmd_validate(args) -> int:
    checks = run_validation(quick=args.quick)
    print(format_table(checks))
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_VALIDATION if failed else EXIT_OK


def _report(summary: dict) -> None:
    cert = summary["certificate"]
    line = (f"{summary['name']}: strategy={summary['strategy']} n_g={summary['n_g']} n_h={summary['n_h']} "
            f"eps1={cert['eps1']:.3e} eps2={cert['eps2']:.3e} certificate={cert['total']:.3e}")
    if "observed_max_error" in summary:
        line += f" observed={summary['observed_max_error']:.3e}"
    print(line)


def _failing_module(exc: BaseException) -> str:
    """Deepest kleinwave module in the traceback (falls back to the error's tag)."""
    name = getattr(exc, "module", "kleinwave")
    pkg = os.path.dirname(os.path.abspath(__file__))
    for frame, _ in traceback.walk_tb(exc.__traceback__):
        fname = os.path.abspath(frame.f_code.co_filename)
        if os.path.dirname(fname) == pkg:
            name = os.path.splitext(os.path.basename(fname))[0]
    return name


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kleinwave", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"kleinwave {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve the Cauchy problem described by a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("example", help="run a built-in example")
    p.add_argument("name", choices=sorted(EXAMPLES))
    p.add_argument("--strategy", choices=STRATEGIES, default="remez")
    p.add_argument("--n", type=int, default=None, help="order for g (h uses n - 1)")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_example)

    p = sub.add_parser("basis", help="tabulate phi_k for the potential of a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_basis)

    p = sub.add_parser("validate", help="run the transmutation self-checks")
    p.add_argument("--quick", action="store_true")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; usage errors are configuration errors here.
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InputError, CapacityError) as exc:
        print(f"kleinwave: configuration error in {_failing_module(exc)}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, KleinwaveError, FloatingPointError) as exc:
        print(f"kleinwave: numerical error in {_failing_module(exc)}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
