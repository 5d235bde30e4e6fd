"""Command-line front end: ``rdtool <command> --config FILE [--out DIR] [--seed N]``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 acceptance bound violated (verify-equivalence only).
"""

from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bifurcation import bif_summary
from .config import COMMANDS, ExperimentConfig, load_config
from .emit import fmt, svg_heatmap, svg_polyline, write_csv
from .errors import ConfigError, FoldDetectedError, NumericalError, RdtoolError
from .integrate import equivalence_gap, simulate, simulate_nonlocal
from .spectral import Grid1D, principal_eigenpair
from .steady import continue_amplitude, continue_branch, linearized_spectrum, uniqueness_probe

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_BOUND = 0, 2, 3, 4


def _say(line: str) -> None:
    print(line, flush=True)


def cmd_bif_table(cfg: ExperimentConfig) -> int:
    model, grid, taus = cfg.model, cfg.grid, cfg.taus
    pair = principal_eigenpair(grid)
    rows = []
    for tau in taus:
        s = bif_summary(model, float(tau), pair.lam, pair.phi, grid.h)
        rows.append([
            tau, s.d_star, s.mu1, s.M, s.d_prime0, int(np.sign(s.sign_test)), s.direction,
            s.d_star_star, s.d_star_star_star, s.bounds.get("u_max"), s.bounds.get("v_max"),
        ])
    cols = [
        ("tau", "time"), ("d_star", "length^2/time"), ("mu1", "1/time"), ("M", "1"),
        ("d_prime0", "length^2/time"), ("sign", "1"), ("direction", "label"),
        ("d_star_star", "length^2/time"), ("d_star_star_star", "length^2/time"),
        ("u_max", "density"), ("v_max", "density"),
    ]
    meta = [f"model {model.name} {_params(model)}", f"grid L={fmt(grid.length)} n={grid.n_interior}",
            f"lambda1 {fmt(pair.lam)}", "phi1 normalized to max-norm 1"]
    path = write_csv(cfg.out_dir / "bif_table.csv", cols, rows, meta)
    _say(f"bif-table rows={len(rows)} lambda1={fmt(pair.lam)} file={path}")
    return EXIT_OK


def _params(model) -> str:
    return " ".join(f"{k}={fmt(v)}" for k, v in model.params.items())


def cmd_branch(cfg: ExperimentConfig) -> int:
    model, grid, tau = cfg.model, cfg.grid, cfg.tau
    strong = cfg.kernel.order == "strong"
    pair = principal_eigenpair(grid)
    summ = bif_summary(model, tau, pair.lam, pair.phi, grid.h)
    mode = cfg.text("branch.mode", "natural")
    note = "complete"
    if mode == "natural":
        d_start = cfg.number("branch.d_start", 0.99 * summ.d_star, positive=True)
        d_end = cfg.number("branch.d_end", 0.05 * summ.d_star, positive=True)
        n_steps = cfg.integer("branch.n_steps", 40)
        if not d_end < d_start:
            raise ConfigError(f"{cfg.source}: field 'branch.d_end' must be below branch.d_start")
        try:
            points = continue_branch(
                model, tau, grid, d_start, d_end, n_steps, strong=strong,
                seed_fraction=cfg.number("branch.seed_fraction", 0.05, positive=True),
            )
        except FoldDetectedError as exc:
            points, note = exc.points, f"stopped at a fold: {exc}"
    elif mode == "amplitude":
        points = continue_amplitude(model, tau, grid, cfg.amplitudes(), strong=strong)
    else:
        raise ConfigError(f"{cfg.source}: field 'branch.mode' must be 'natural' or 'amplitude', got {mode!r}")
    proj = pair.phi / np.dot(pair.phi, pair.phi)
    rows = [
        [p.d, p.amplitude, float(np.dot(proj, p.state.u)), p.leading_eig, p.min_sv, p.residual]
        for p in points
    ]
    cols = [("d", "length^2/time"), ("max_u", "density"), ("phi1_amplitude", "density"),
            ("leading_eig", "1/time"), ("min_sv", "1/time"), ("residual", "density/time")]
    meta = [f"model {model.name} {_params(model)}", f"kernel {cfg.kernel.order} tau={fmt(tau)}",
            f"grid L={fmt(grid.length)} n={grid.n_interior}", f"mode {mode}",
            f"d_star {fmt(summ.d_star)} d_prime0 {fmt(summ.d_prime0)} direction {summ.direction}",
            f"status {note}"]
    path = write_csv(cfg.out_dir / "branch.csv", cols, rows, meta)
    if points and cfg.text("branch.svg", "yes") != "no":
        svg_polyline(
            cfg.out_dir / "branch.svg",
            [(model.name, [p.d for p in points], [p.amplitude for p in points])],
            "d", "max u", f"{model.name} branch (dashed: d*)", marker=summ.d_star,
        )
    d_max = max((p.d for p in points), default=float("nan"))
    _say(f"branch points={len(points)} d_star={fmt(summ.d_star)} max_d={fmt(d_max)} status={note.split(':')[0]} file={path}")
    return EXIT_OK


def _trajectory_rows(traj, grid: Grid1D):
    for t, st in zip(traj.times, traj.states):
        for i, x in enumerate(grid.x):
            yield [t, x, *(f[i] for f in st.fields)]


def cmd_simulate(cfg: ExperimentConfig) -> int:
    model, kernel, grid, d = cfg.model, cfg.kernel, cfg.grid, cfg.d
    eta = cfg.history
    sim = cfg.sim
    method = cfg.text("sim.method", "local")
    if method == "local":
        traj = simulate(model, kernel, d, grid, eta, sim)
    elif method == "nonlocal":
        traj = simulate_nonlocal(model, kernel, d, grid, eta, sim)
    else:
        raise ConfigError(f"{cfg.source}: field 'sim.method' must be 'local' or 'nonlocal', got {method!r}")
    out = cfg.out_dir
    names = ["u", "v", "w"][: len(traj.final.fields)]
    cols = [("t", "time"), ("x", "length")] + [(n, "density") for n in names]
    meta = [f"model {model.name} {_params(model)}", f"kernel {kernel.order} tau={fmt(kernel.tau)} d={fmt(d)}",
            f"grid L={fmt(grid.length)} n={grid.n_interior}", f"history {cfg.history_label()}",
            f"dt {fmt(sim.dt)} method {method}"]
    write_csv(out / "trajectory.csv", cols, _trajectory_rows(traj, grid), meta)
    gap = None if traj.steady is None else float(np.max(np.abs(traj.steady.u - traj.final.u)))
    stable = None
    if traj.steady is not None:
        stable = linearized_spectrum(model, d, kernel.tau, grid, traj.steady).stable
    write_csv(
        out / "summary.csv",
        [("verdict", "label"), ("t_final", "time"), ("max_u", "density"), ("min_value", "density"),
         ("newton_gap", "density"), ("steady_stable", "bool")],
        [[traj.verdict, traj.times[-1], float(np.max(traj.final.u)), traj.min_value, gap, stable]],
        meta,
    )
    svg_heatmap(out / "heatmap.svg", traj.times, grid.x, traj.u_matrix(), f"u(x,t), {model.name}, d={fmt(d)}")
    series = [("final u", grid.x, traj.final.u)]
    if traj.steady is not None:
        series.append(("Newton steady state", grid.x, traj.steady.u))
    svg_polyline(out / "profile.svg", series, "x", "u", f"final profile at t={fmt(traj.times[-1])}")
    _say(f"verdict={traj.verdict} t={fmt(traj.times[-1])} max_u={fmt(np.max(traj.final.u))}")
    return EXIT_OK


def cmd_verify_equivalence(cfg: ExperimentConfig) -> int:
    model, kernel, d, eta = cfg.model, cfg.kernel, cfg.d, cfg.history
    base = cfg.sim
    length = cfg.number("grid.L", np.pi, positive=True)
    bound = cfg.number("verify.bound", 1e-3, positive=True)
    mode_cap = cfg.integer("verify.n_modes", 64)
    rows = []
    for n, dt in cfg.ladder():
        stride = max(1, int(round(base.output_stride * base.dt / dt)))
        sim = replace(base, dt=dt, output_stride=stride, n_modes=min(n, mode_cap))
        gap = equivalence_gap(model, kernel, d, Grid1D(length, n), eta, sim)
        rows.append([n, dt, gap])
        _say(f"level n={n} dt={fmt(dt)} gap={fmt(gap)}")
    gaps = [r[2] for r in rows]
    decreasing = all(b < a for a, b in zip(gaps, gaps[1:]))
    ok = gaps[-1] <= bound
    meta = [f"model {model.name} {_params(model)}", f"kernel {kernel.order} tau={fmt(kernel.tau)} d={fmt(d)}",
            f"bound {fmt(bound)} strictly_decreasing {int(decreasing)}"]
    write_csv(cfg.out_dir / "equivalence.csv", [("n", "1"), ("dt", "time"), ("max_gap", "density")], rows, meta)
    _say(f"equivalence finest_gap={fmt(gaps[-1])} bound={fmt(bound)} decreasing={int(decreasing)} "
         f"result={'pass' if ok else 'fail'}")
    return EXIT_OK if ok else EXIT_BOUND


def cmd_uniqueness_probe(cfg: ExperimentConfig) -> int:
    model, grid, tau = cfg.model, cfg.grid, cfg.tau
    strong = cfg.kernel.order == "strong"
    if cfg.has("probe.d"):
        ds = cfg.numbers("probe.d")
    elif cfg.has("probe.d_over_dstar"):
        pair = principal_eigenpair(grid)
        dstar = bif_summary(model, tau, pair.lam, pair.phi, grid.h).d_star
        ds = [f * dstar for f in cfg.numbers("probe.d_over_dstar")]
    else:
        raise ConfigError(f"{cfg.source}: field 'probe.d' (or probe.d_over_dstar) is required but missing")
    n_starts = cfg.integer("probe.n_starts", 20)
    tol = cfg.number("probe.tol", 1e-6, positive=True)
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for i, d in enumerate(ds):
            res = uniqueness_probe(model, d, tau, grid, n_starts, seed=cfg.seed + i, strong=strong, tol=tol)
            svs = [linearized_spectrum(model, d, tau, grid, s).min_sv for s in res.solutions]
            amps = ";".join(fmt(np.max(s.u)) for s in res.solutions)
            rows.append([d, res.verdict, len(res.solutions), res.n_failed, res.n_trivial,
                         min(svs) if svs else None, amps])
            _say(f"d={fmt(d)} verdict={res.verdict} solutions={len(res.solutions)}")
    cols = [("d", "length^2/time"), ("verdict", "label"), ("n_solutions", "1"), ("n_failed", "1"),
            ("n_trivial", "1"), ("min_sv", "1/time"), ("max_u_list", "density")]
    meta = [f"model {model.name} {_params(model)}", f"tau {fmt(tau)} starts {n_starts} seed {cfg.seed}"]
    write_csv(cfg.out_dir / "uniqueness.csv", cols, rows, meta)
    return EXIT_OK


HANDLERS = {
    "bif-table": cmd_bif_table,
    "branch": cmd_branch,
    "simulate": cmd_simulate,
    "verify-equivalence": cmd_verify_equivalence,
    "uniqueness-probe": cmd_uniqueness_probe,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rdtool", description="Delayed reaction-diffusion experiments.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="key = value experiment file")
    ap.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    ap.add_argument("--seed", type=int, default=None, help="random seed (overrides seed)")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config, seed=args.seed, out=args.out)
        if cfg.has("command") and cfg.command != args.command:
            raise ConfigError(f"{cfg.source}: field 'command' is {cfg.command!r} but {args.command!r} was requested")
        Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
        return HANDLERS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (RdtoolError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
