"""Command-line harness: solve / compare / sweep over JSON run configs.

Exit codes: 0 on convergence, 1 on usage or config errors, 2 on numerical
non-convergence (output files are still written in that case). All outputs
are deterministic; wall-clock fields are the only run-to-run variation.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .driver import SetSolveConfig, SetSolveResult, SolveStatus, solve
from .indexset import settrace_line
from .krylov import GmresConfig
from .newton import ForcingConfig, NewtonConfig
from .problems import make_problem
from .setrules import RuleConfig, RuleKind

__all__ = ["main", "cmd_solve", "cmd_compare", "cmd_sweep", "RunConfig"]

_METHODS = ("newton", "set", "set_variant")

# Reference counts for the 100-interior-node spike benchmark, printed in
# compare reports for manual inspection (never asserted: they depend on
# forcing and line-search sub-parameters).
REFERENCE_SPIKE_100 = {
    "newton_nonlinear_iters": 7,
    "newton_linear_total": 34,
    "set_global_iters": 2,
    "set_inner_steps": [6, 3],
    "set_linear_total": 33,
    "first_local_set": [49, 52],
    "second_local_set": [45, 56],
}

HISTORY_HEADER = "iter,phase,set_size,residual_norm,global_residual_norm,eta,linear_iters,lambda"
SETTRACE_HEADER = "iter,set_size,min_abs_index,max_abs_index,members"
SWEEP_HEADER = "size,method,status,nonlinear_iters,linear_iters,reduced_work,wall_time_ms,set_sizes"


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    """One deterministic run, deserialized from JSON."""

    problem: str = "spike1d"
    n: int = 100
    method: str = "newton"
    rule: str = "residual_mean"
    alpha: float = 0.01
    min_set_size: int = 0
    tau_abs: float = 1e-8
    tau_rel: float = 1e-8
    max_newton_iters: int = 20
    eta0: float = 0.9
    eta_max: float = 0.9
    gmres_restart: int = 30
    gmres_max_iters: int = 200
    global_budget: int = 1
    inner_max_iters: int = 20
    max_outer_cycles: int = 20
    initial_constant: float = 0.0
    output_dir: str = "out"
    sizes: list[int] = field(default_factory=list)
    methods: list[str] = field(default_factory=lambda: ["newton", "set"])
    compare_methods: list[str] = field(default_factory=lambda: ["newton", "set"])

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    def validate(self):
        if self.problem not in ("spike1d", "demo2d"):
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.n < 2:
            raise ConfigError(f"n must be >= 2, got {self.n}")
        if self.method not in _METHODS:
            raise ConfigError(f"unknown method {self.method!r} (expected one of {_METHODS})")
        try:
            RuleKind(self.rule)
        except ValueError:
            raise ConfigError(f"unknown rule {self.rule!r}") from None
        for m in list(self.methods) + list(self.compare_methods):
            if m not in _METHODS:
                raise ConfigError(f"unknown method {m!r} in method list")

    def newton_config(self) -> NewtonConfig:
        return NewtonConfig(
            tau_abs=self.tau_abs,
            tau_rel=self.tau_rel,
            max_iters=self.max_newton_iters,
            forcing=ForcingConfig(eta0=self.eta0, eta_max=self.eta_max),
            gmres=GmresConfig(restart=self.gmres_restart, max_total_iters=self.gmres_max_iters),
        )

    def set_config(self) -> SetSolveConfig:
        return SetSolveConfig(
            rule=RuleConfig(
                kind=RuleKind(self.rule), alpha=self.alpha, min_set_size=self.min_set_size
            ),
            global_budget=self.global_budget,
            inner_max_iters=self.inner_max_iters,
            newton=self.newton_config(),
            max_outer_cycles=self.max_outer_cycles,
        )


def _load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        cfg = RunConfig.from_dict(raw)
        cfg.set_config()  # surface range errors (alpha, tolerances, ...) now
        return cfg
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _run(cfg: RunConfig, method: str) -> tuple[SetSolveResult, np.ndarray | None]:
    problem = make_problem(cfg.problem, cfg.n)
    x0 = np.full(problem.n, cfg.initial_constant)
    result = solve(problem, x0, method, cfg.set_config())
    return result, problem.exact_nodal()


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if not np.isfinite(value):
        return ""
    return repr(value)


def _atomic_write(path: str, text: str):
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _history_csv(result: SetSolveResult) -> str:
    lines = [HISTORY_HEADER]
    for rec in result.history:
        lines.append(
            ",".join(
                [
                    str(rec.k),
                    rec.phase,
                    str(rec.set_size),
                    _fmt(rec.residual_norm),
                    _fmt(rec.global_residual_norm),
                    _fmt(rec.eta),
                    str(rec.linear_iters),
                    _fmt(rec.lam),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def _settrace_csv(result: SetSolveResult) -> str:
    lines = [SETTRACE_HEADER]
    for iteration, iset in result.formed_sets:
        lines.append(settrace_line(iset, iteration))
    return "\n".join(lines) + "\n"


def _summary(result: SetSolveResult, exact: np.ndarray | None) -> dict:
    max_err = None
    if exact is not None:
        max_err = float(np.max(np.abs(result.x_final - exact)))
    return {
        "status": result.status.value,
        "outer_cycles": result.outer_cycles,
        "total_nonlinear_iters": result.total_nonlinear_iters,
        "total_linear_iters": result.total_linear_iters,
        "final_global_norm": result.final_global_norm,
        "max_error_vs_exact": max_err,
        "wall_time_ms": result.wall_time * 1e3,
        "set_size_trace": result.set_size_trace,
    }


def _out_dir(cfg: RunConfig, out_override: str | None) -> str:
    out = out_override or os.environ.get("SETNEWTON_OUT") or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    return out


def _json_dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def cmd_solve(config_path: str, out_override: str | None = None) -> int:
    cfg = _load_config(config_path)
    result, exact = _run(cfg, cfg.method)
    out = _out_dir(cfg, out_override)
    _atomic_write(os.path.join(out, "history.csv"), _history_csv(result))
    _atomic_write(os.path.join(out, "settrace.csv"), _settrace_csv(result))
    _atomic_write(os.path.join(out, "summary.json"), _json_dump(_summary(result, exact)))
    print(
        f"{cfg.method} on {cfg.problem} n={cfg.n}: {result.status.value}, "
        f"{result.total_nonlinear_iters} nonlinear / {result.total_linear_iters} linear iters"
    )
    return 0 if result.status == SolveStatus.CONVERGED else 2


def _residual_series(result: SetSolveResult) -> list[float]:
    """Residual norm per nonlinear iteration, starting from the initial norm."""
    series = []
    for rec in result.history:
        if rec.k == 0 and series:
            continue  # sub-solve entry records are not iterations
        series.append(rec.residual_norm)
    return series


def cmd_compare(config_path: str, out_override: str | None = None) -> int:
    cfg = _load_config(config_path)
    methods = list(cfg.compare_methods)
    if len(methods) != 2:
        raise ConfigError(f"compare needs exactly two methods, got {methods}")
    names = list(methods)
    if names[0] == names[1]:
        names[1] = names[1] + "_2"

    runs: list[SetSolveResult] = []
    exact = None
    for method in methods:
        result, exact = _run(cfg, method)
        runs.append(result)

    series = [_residual_series(r) for r in runs]
    depth = max(len(s) for s in series)
    lines = ["iteration," + ",".join(f"{nm}_residual_norm" for nm in names)]
    for i in range(depth):
        cells = [_fmt(s[i]) if i < len(s) else "" for s in series]
        lines.append(f"{i}," + ",".join(cells))

    report = {
        names[0]: _summary(runs[0], exact),
        names[1]: _summary(runs[1], exact),
        "work": {
            f"{nm}_reduced_work": run.reduced_work for nm, run in zip(names, runs)
        },
    }
    if cfg.problem == "spike1d" and cfg.n == 100:
        report["reference"] = REFERENCE_SPIKE_100

    out = _out_dir(cfg, out_override)
    _atomic_write(os.path.join(out, "compare.csv"), "\n".join(lines) + "\n")
    _atomic_write(os.path.join(out, "compare.json"), _json_dump(report))
    for nm, run in zip(names, runs):
        print(
            f"{nm}: {run.status.value}, outer={run.outer_cycles}, "
            f"nonlinear={run.total_nonlinear_iters}, linear={run.total_linear_iters}, "
            f"reduced_work={run.reduced_work}"
        )
    ok = all(r.status == SolveStatus.CONVERGED for r in runs)
    return 0 if ok else 2


def cmd_sweep(config_path: str, out_override: str | None = None) -> int:
    cfg = _load_config(config_path)
    if not cfg.sizes:
        raise ConfigError("sweep needs a nonempty 'sizes' list")

    rows = []
    any_failed = False
    for size in cfg.sizes:
        for method in cfg.methods:
            run_cfg = RunConfig(**{**cfg.__dict__, "n": int(size), "method": method})
            try:
                result, _ = _run(run_cfg, method)
            except Exception as exc:  # record the failure, keep sweeping
                any_failed = True
                rows.append(f"{size},{method},error:{type(exc).__name__},,,,,")
                continue
            if result.status != SolveStatus.CONVERGED:
                any_failed = True
            sizes_str = ";".join(str(s) for s in result.set_size_trace)
            rows.append(
                ",".join(
                    [
                        str(size),
                        method,
                        result.status.value,
                        str(result.total_nonlinear_iters),
                        str(result.total_linear_iters),
                        str(result.reduced_work),
                        _fmt(result.wall_time * 1e3),
                        sizes_str,
                    ]
                )
            )
            print(rows[-1])

    out = _out_dir(cfg, out_override)
    _atomic_write(os.path.join(out, "sweep.csv"), "\n".join([SWEEP_HEADER] + rows) + "\n")
    return 2 if any_failed else 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    parser = argparse.ArgumentParser(
        prog="setnewton",
        description="Matrix-free Newton-GMRES with runtime active-set reduction",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "run one configuration and write history/summary/settrace"),
        ("compare", "run two methods on the same problem and write compare files"),
        ("sweep", "run a grid-size sweep and write sweep.csv"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to JSON run config")
        p.add_argument("--out", default=None, help="output directory (overrides config)")

    args = parser.parse_args(argv)
    handler = {"solve": cmd_solve, "compare": cmd_compare, "sweep": cmd_sweep}[args.command]
    try:
        return handler(args.config, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
