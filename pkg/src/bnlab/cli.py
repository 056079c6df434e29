"""Command-line front end: single runs, mu-sweeps, and self-check suites.

Outputs are deterministic: fixed-order sequential reductions, floats written
with shortest round-trip repr, JSON keys sorted.  Repeating a run with the
same configuration reproduces the CSV/JSON artifacts byte for byte.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .chgvar import (default_guard, det_formula, fd_jacobian, jacobian_det,
                     phi_forward, phi_inverse)
from .diagnostics import (DEFAULT_SOBOLEV_ORDER, DampingBudget,
                          conservation_report, damping_budget_update,
                          discrete_hk_norm)
from .errors import ConfigError
from .limitlab import (SweepPlan, build_scenario, project_to_limit_vars,
                       run_comparison)
from .quasilinear import RelaxParams, assemble_kapila, assemble_system, build_symmetrizer
from .solver1d import (KapilaState, integrate, make_kapila_grid,
                       relaxation_substep)
from .thermo import (GasConstants, build_initial_data, default_gas,
                     mixture_entropy_density, mixture_view)

SCHEMA_VERSION = 1

_MODES = ("bn", "kapila", "sweep", "check")
_FORMATS = ("csv", "json")


@dataclass(frozen=True)
class RunConfig:
    """Merged run configuration.

    ``cfl`` left unset defaults to 0.4 for single runs and to the
    relaxation-resolving SweepPlan default for sweeps.
    """

    mode: str = "bn"
    scenario: str = "standard"
    cells: int = 512
    cfl: float | None = None
    t_end: float = 0.1
    eps: float = 1e-2
    mu: float = 1e-3
    mu_list: tuple | None = None
    norm_orders: tuple = (0, 1, 2)
    out: str = "out"
    format: str = "csv"
    figures: bool = True
    seed: int = 20240801

    def validate(self) -> "RunConfig":
        if self.mode not in _MODES:
            raise ConfigError(f"mode must be one of {_MODES}, got {self.mode!r}")
        cfg = self
        if cfg.cfl is None:
            cfg = replace(cfg, cfl=SweepPlan.cfl if cfg.mode == "sweep" else 0.4)
        if cfg.format not in _FORMATS:
            raise ConfigError(f"format must be one of {_FORMATS}, got {cfg.format!r}")
        if cfg.mode == "sweep" and not cfg.mu_list:
            raise ConfigError("sweep mode requires a mu list (--mu, repeatable)")
        if cfg.mode in ("bn",) and cfg.mu is None:
            raise ConfigError("bn mode requires a single mu")
        if cfg.cells < 8:
            raise ConfigError("cells must be >= 8")
        if not (0.0 < cfg.cfl <= 1.0):
            raise ConfigError("cfl must lie in (0, 1]")
        if cfg.t_end <= 0.0:
            raise ConfigError("t-end must be positive")
        return cfg


_KEY_PARSERS = {
    "mode": str,
    "scenario": str,
    "cells": int,
    "cfl": float,
    "t_end": float,
    "eps": float,
    "mu": float,
    "mu_list": lambda s: tuple(float(v) for v in str(s).split(",") if v.strip()),
    "norm_orders": lambda s: tuple(int(v) for v in str(s).split(",") if v.strip()),
    "out": str,
    "format": str,
    "figures": lambda s: {"true": True, "false": False,
                          "1": True, "0": False}[str(s).strip().lower()],
    "seed": int,
}


def parse_config(file_path: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Merge defaults < config file < flags; unknown keys are rejected."""
    values: dict = {}
    if file_path is not None:
        for lineno, raw in enumerate(Path(file_path).read_text().splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{file_path}:{lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            key = key.strip().replace("-", "_")
            if key not in _KEY_PARSERS:
                raise ConfigError(f"{file_path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = _KEY_PARSERS[key](val.strip())
            except (ValueError, KeyError) as exc:
                raise ConfigError(f"{file_path}:{lineno}: bad value for {key!r}: "
                                  f"{val.strip()!r}") from exc
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in _KEY_PARSERS:
            raise ConfigError(f"unknown option {key!r}")
        values[key] = val
    return RunConfig(**values).validate()


#  deterministic writers -------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header: list, rows: list) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2,
                               default=_json_default) + "\n")


#  run mode ---------------------------------------------------------------------


_TS_HEADER = ["step", "t", "dt", "max_wave_speed", "newton_iters",
              "mass_plus", "mass_minus", "momentum", "total_energy", "entropy",
              "dp_budget", "dtheta_budget", "dp_l1", "dtheta_l1"]


def _timeseries_row(step, grid, rep, budget, g):
    totals = conservation_report(grid, g)
    return [step, grid.t, rep.dt_taken, rep.max_wave_speed, rep.source_newton_iters,
            totals[0], totals[1], totals[2], totals[3], totals[4],
            budget.dp_budget, budget.dtheta_budget, budget.dp_l1, budget.dtheta_l1]


def run_single(config: RunConfig, g: GasConstants, out_dir: Path) -> dict:
    """bn or kapila time-series run; returns the JSON payload."""
    params = RelaxParams(eps=config.eps, mu=config.mu)
    bn_grid, _ = build_scenario(config.scenario, config.cells, g)
    if config.mode == "kapila":
        w, rho, y, u = project_to_limit_vars(bn_grid.state, g)
        grid = make_kapila_grid(KapilaState(w=np.asarray(w), rho=np.asarray(rho),
                                            y=np.asarray(y), u=np.asarray(u, dtype=float)),
                                bn_grid.domain_length)
    else:
        grid = bn_grid

    state = {"budget": DampingBudget(), "step": 0}
    rows = [[0, grid.t, 0.0, 0.0, 0] + list(conservation_report(grid, g))
            + [0.0, 0.0, 0.0, 0.0]]

    def on_step(gr, rep):
        state["step"] += 1
        if gr.mode == "bn":
            state["budget"] = damping_budget_update(state["budget"], gr, rep.dt_taken,
                                                    params, g)
        rows.append(_timeseries_row(state["step"], gr, rep, state["budget"], g))

    final, _ = integrate(grid, config.t_end, g, params=params, cfl=config.cfl,
                         on_step=on_step)

    if config.format == "csv":
        write_csv(out_dir / "timeseries.csv", _TS_HEADER, rows)

    norms = {}
    if final.mode == "bn":
        m = mixture_view(final.state, g)
        for k in config.norm_orders:
            norms[str(k)] = {
                "delta_p": discrete_hk_norm(np.asarray(m.delta_p), final.dx, k).value,
                "delta_theta": discrete_hk_norm(np.asarray(m.delta_theta),
                                                final.dx, k).value,
                "u": discrete_hk_norm(np.asarray(final.state.u), final.dx, k).value,
            }
    else:
        for k in config.norm_orders:
            norms[str(k)] = {
                "u": discrete_hk_norm(final.state.u, final.dx, k).value,
                "w": discrete_hk_norm(final.state.w, final.dx, k).value,
            }

    first, last = rows[0], rows[-1]
    drift = {name: abs(last[i] - first[i]) / max(abs(first[i]), 1.0)
             for i, name in ((5, "mass_plus"), (6, "mass_minus"),
                             (7, "momentum"), (8, "total_energy"))}
    payload = {
        "schema_version": SCHEMA_VERSION,
        "mode": config.mode,
        "scenario": config.scenario,
        "cells": config.cells,
        "cfl": config.cfl,
        "t_end": config.t_end,
        "eps": config.eps,
        "mu": config.mu,
        "n_steps": state["step"],
        "conserved_drift": drift,
        "final_norms": norms,
        "final_budgets": {
            "dp_budget": state["budget"].dp_budget,
            "dtheta_budget": state["budget"].dtheta_budget,
            "dp_l1": state["budget"].dp_l1,
            "dtheta_l1": state["budget"].dtheta_l1,
        },
        "failures": [],
    }
    if config.format == "json":
        payload["timeseries"] = {"header": _TS_HEADER, "rows": rows}
    write_json(out_dir / "run.json", payload)

    if config.figures:
        from .report import render_timeseries_figure
        dicts = [dict(zip(_TS_HEADER, row)) for row in rows]
        render_timeseries_figure(dicts, out_dir / "timeseries.png")
    return payload


#  sweep mode ---------------------------------------------------------------------


def run_sweep(config: RunConfig, g: GasConstants, out_dir: Path) -> dict:
    plan = SweepPlan(mu_values=tuple(config.mu_list), eps=config.eps,
                     scenario=config.scenario, n_cells=config.cells,
                     cfl=config.cfl, t_end=config.t_end,
                     norm_orders=tuple(config.norm_orders))
    report = run_comparison(plan, g)
    payload = {"schema_version": SCHEMA_VERSION, **report.to_dict()}
    write_json(out_dir / "rates.json", payload)

    if config.format == "csv":
        rows = []
        for order, fit in sorted(report.fits.items()):
            for p in fit.points:
                rows.append([p.mu, report.eps, order,
                             p.error if p.failure is None else "nan",
                             p.flagged])
        write_csv(out_dir / "rates.csv",
                  ["mu", "eps", "norm_order", "error", "flagged"], rows)

    if config.figures:
        from .report import render_rate_figure
        render_rate_figure(report.to_dict(), out_dir / "rates.png")
    return payload


#  check mode ---------------------------------------------------------------------


def _random_states(rng, n, g):
    for _ in range(n):
        yield build_initial_data(rng.uniform(0.3, 0.7), rng.uniform(0.85, 1.15),
                                 rng.uniform(0.85, 1.15), rng.uniform(-0.5, 0.5),
                                 rng.uniform(-0.15, 0.15), rng.uniform(-0.15, 0.15), g)


def _suite_chart_roundtrip(g, seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for v in _random_states(rng, 1000, g):
        back = phi_inverse(phi_forward(v, g), g)
        worst = max(worst, max(
            abs(back.alpha_plus - v.alpha_plus), abs(back.rho_plus - v.rho_plus),
            abs(back.rho_minus - v.rho_minus), abs(back.theta_plus - v.theta_plus),
            abs(back.theta_minus - v.theta_minus), abs(back.u - v.u)))
    return worst <= 1e-10, {"worst_coordinate_error": worst, "tolerance": 1e-10}


def _suite_determinant(g, seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for v in _random_states(rng, 100, g):
        closed = jacobian_det(v, g)
        fd = float(np.linalg.det(fd_jacobian(v, g)))
        worst = max(worst, abs(fd - closed) / abs(closed))
    zeros_ok = (det_formula(1.4, 1.4, 1.0, 1.0, 0.5, 1.0, 1.0, 0.5, 3.75, 0.3, 1.0) == 0.0
                and det_formula(1.4, 1.2, 1.0, 1.0, 0.0, 1.0, 1.0, 0.5, 3.75, 0.3, 1.0) == 0.0
                and det_formula(1.4, 1.2, 1.0, 1.0, 1.0, 1.0, 1.0, 0.5, 3.75, 0.3, 1.0) == 0.0)
    return (worst < 1e-5 and zeros_ok), {"worst_relative_error": worst,
                                         "tolerance": 1e-5, "exact_zero_limits": zeros_ok}


def _suite_symmetry(g, seed):
    rng = np.random.default_rng(seed)
    params = RelaxParams()
    worst_sym, min_diag, worst_block = 0.0, np.inf, 0.0
    for i, v in enumerate(_random_states(rng, 1000, g)):
        n = phi_forward(v, g)
        sym = build_symmetrizer(n, g)
        h = assemble_system(n, params, g).h
        sh = sym.as_matrix() @ h
        worst_sym = max(worst_sym, float(np.linalg.norm(sh - sh.T, "fro")))
        min_diag = min(min_diag, float(np.min(sym.diag_entries)))
        if i % 100 == 0:
            eq = replace(n, u1=0.0, u2=0.0)
            block = assemble_system(eq, params, g).h[2:, 2:]
            lim = assemble_kapila(eq.w, eq.rho, eq.y_plus, eq.u, g).h
            worst_block = max(worst_block, float(np.max(np.abs(block - lim))))
    ok = worst_sym < 1e-12 and min_diag > 0.0 and worst_block < 1e-12
    return ok, {"worst_frobenius_asymmetry": worst_sym, "min_symmetrizer_entry": min_diag,
                "worst_limit_block_mismatch": worst_block, "tolerance": 1e-12}


def _suite_source_conservation(g, seed):
    rng = np.random.default_rng(seed)
    params = RelaxParams()
    worst_cons, worst_gap = 0.0, 0.0
    for v in _random_states(rng, 100, g):
        dt = 10.0 ** rng.uniform(-6, 3)
        m0 = mixture_view(v, g)
        out, _ = relaxation_substep(v, dt, params, g)
        m1 = mixture_view(out, g)
        for before, after in (
                (v.alpha_plus * v.rho_plus, out.alpha_plus * out.rho_plus),
                (v.alpha_minus * v.rho_minus, out.alpha_minus * out.rho_minus),
                (m0.rho * v.u, m1.rho * out.u),
                (m0.rho * m0.e_avg, m1.rho * m1.e_avg)):
            worst_cons = max(worst_cons, abs(after - before) / abs(before)
                             if before != 0 else abs(after))
        gap = mixture_entropy_density(v, g) - mixture_entropy_density(out, g)
        worst_gap = max(worst_gap, gap)    # entropy must not decrease
    ok = worst_cons <= 1e-12 and worst_gap <= 1e-13
    return ok, {"worst_conservation_error": worst_cons,
                "worst_entropy_decrease": worst_gap, "tolerance": 1e-12}


def _suite_entropy_monotonicity(g, seed):
    grid, _ = build_scenario("standard", 128, g)
    params = RelaxParams(eps=1e-2, mu=1e-3)
    track = {"last": conservation_report(grid, g), "viol": 0.0, "drift": 0.0}
    e0 = track["last"][3]

    def on_step(gr, rep):
        totals = conservation_report(gr, g)
        track["viol"] = max(track["viol"], totals[4] - track["last"][4])
        track["drift"] = max(track["drift"], abs(totals[3] - e0) / abs(e0))
        track["last"] = totals

    integrate(grid, 0.05, g, params=params, cfl=0.4, on_step=on_step)
    tol = 10.0 * grid.dx
    ok = track["viol"] <= tol
    return ok, {"max_entropy_increment": track["viol"], "tolerance": tol,
                "max_energy_drift": track["drift"]}


_SUITES = {
    "chart_roundtrip": _suite_chart_roundtrip,
    "determinant": _suite_determinant,
    "symmetry": _suite_symmetry,
    "source_conservation": _suite_source_conservation,
    "entropy_monotonicity": _suite_entropy_monotonicity,
}


def run_check(config: RunConfig, g: GasConstants, out_dir: Path) -> dict:
    suites = {}
    all_ok = True
    for name, fn in _SUITES.items():
        try:
            ok, details = fn(g, config.seed)
        except Exception as exc:                      # noqa: BLE001 - recorded
            ok, details = False, {"error": f"{type(exc).__name__}: {exc}"}
        suites[name] = {"passed": ok, "details": details}
        all_ok &= ok
        print(f"[{'PASS' if ok else 'FAIL'}] {name}")
    payload = {"schema_version": SCHEMA_VERSION, "suites": suites,
               "all_passed": all_ok}
    write_json(out_dir / "check.json", payload)
    return payload


#  entry point ---------------------------------------------------------------------


def _add_common(p):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--scenario")
    p.add_argument("--cells", type=int)
    p.add_argument("--cfl", type=float)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--norm-orders", dest="norm_orders",
                   type=_KEY_PARSERS["norm_orders"])
    p.add_argument("--out")
    p.add_argument("--format", choices=_FORMATS)
    p.add_argument("--seed", type=int)
    p.add_argument("--no-figures", dest="figures", action="store_const", const=False)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bnlab",
        description="Two-phase relaxation laboratory: runs, sweeps, checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single time-series run")
    p_run.add_argument("--mode", choices=("bn", "kapila"))
    p_run.add_argument("--mu", type=float)
    _add_common(p_run)

    p_sweep = sub.add_parser("sweep", help="mu-sweep against the limit system")
    p_sweep.add_argument("--mu", type=float, action="append",
                         help="repeatable: one value per flag")
    _add_common(p_sweep)

    p_check = sub.add_parser("check", help="property self-check suites")
    _add_common(p_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items()
                 if k not in ("command", "config") and v is not None}
    if args.command == "sweep":
        overrides["mu_list"] = tuple(overrides.pop("mu", ()) or ()) or None
        overrides["mode"] = "sweep"
        overrides.setdefault("norm_orders", (0, 1))
    elif args.command == "check":
        overrides["mode"] = "check"
    else:
        overrides.setdefault("mode", "bn")

    try:
        config = parse_config(args.config, overrides)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    g = default_gas()
    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        if config.mode == "check":
            payload = run_check(config, g, out_dir)
            return 0 if payload["all_passed"] else 1
        if config.mode == "sweep":
            payload = run_sweep(config, g, out_dir)
            bad = payload["failures"] or any(
                f["failure"] for f in payload["fits"].values())
            return 1 if bad else 0
        run_single(config, g, out_dir)
        return 0
    except Exception as exc:                          # noqa: BLE001 - CLI surface
        record = {"schema_version": SCHEMA_VERSION, "mode": config.mode,
                  "failure": f"{type(exc).__name__}: {exc}"}
        write_json(out_dir / "failure.json", record)
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
