"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 truncation or level overflow.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from . import __version__
from .config import ExperimentConfig, load_config
from .errors import ConfigError, DegenerateSpectrum, DomainError, NumericalError, TruncationError
from .io import load_user_spectra, write_csv, write_manifest
from .levelmap import entropy, growth_rate, iterate, map_table, returns
from .spectra import SegmentModelParams, SpinModelParams, segment_map, snapshot_map, spin_map
from .stochastic import BernoulliParams, bernoulli_map, kl_rho, lln_slopes, mc_gain, return_histogram

log = logging.getLogger("levelcross")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_TRUNCATION = 0, 2, 3, 4


def build_map(cfg: ExperimentConfig):
    if cfg.model == "segment":
        s = cfg.segment
        return segment_map(SegmentModelParams(s.a1, s.a2, s.level_count)), s.level_count
    if cfg.model == "spin":
        s = cfg.spin
        return spin_map(SpinModelParams(s.b1, s.b2, s.level_count)), s.level_count
    if cfg.model == "user-spectra":
        snap1, snap2 = load_user_spectra(cfg.spectra_path())
        return snapshot_map(snap1, snap2), snap1.reliable_levels()
    if cfg.model == "bernoulli":
        b = cfg.bernoulli
        return bernoulli_map(BernoulliParams(b.beta, b.gamma, cfg.seed, b.stream_id)), b.level_count
    raise ConfigError(f"model {cfg.model!r} has no level map; use the tdse command")


def _meta(cfg: ExperimentConfig, command: str) -> dict:
    return {"command": command, "model": cfg.model, "config_sha256": cfg.digest()}


def _write_trajectories(cfg, lmap, out: Path, meta: dict) -> list[Path]:
    t = cfg.trajectory
    files = []
    summary = []
    for k0 in t.k0:
        traj = iterate(k0, lmap, t.step_limit, t.escape_threshold, backward=t.backward)
        rows = [(s, k, math.log(k), entropy(k)) for s, k in enumerate(traj.steps)]
        files.append(write_csv(out / f"trajectory_k{k0}.csv", ["s", "k", "ln_k", "entropy"], rows, meta))
        rate = growth_rate(traj) if len(traj.steps) > 1 else float("nan")
        summary.append((k0, traj.outcome.value, traj.period or "", traj.threshold or "",
                        len(traj.steps) - 1, traj.steps[-1], rate, returns(traj), traj.diagnostic))
    if t.k0:
        files.append(write_csv(out / "trajectories.csv",
                               ["k0", "outcome", "period", "threshold", "steps", "final_k",
                                "growth_rate", "returns", "diagnostic"], summary, meta))
    return files


def cmd_levelmap(cfg: ExperimentConfig, out: Path) -> list[Path]:
    lmap, k_max = build_map(cfg)
    meta = _meta(cfg, "levelmap")
    rows = map_table(lmap, k_max)
    files = [write_csv(out / "levelmap.csv", ["k", "sigma1", "S1", "kbar", "sigma2_kbar"], rows, meta)]
    files += _write_trajectories(cfg, lmap, out, meta)
    return files


def cmd_trajectory(cfg: ExperimentConfig, out: Path) -> list[Path]:
    lmap, _ = build_map(cfg)
    if not cfg.trajectory.k0:
        raise ConfigError("trajectory command needs a non-empty trajectory.k0 list")
    return _write_trajectories(cfg, lmap, out, _meta(cfg, "trajectory"))


def cmd_montecarlo(cfg: ExperimentConfig, out: Path) -> list[Path]:
    b = cfg.bernoulli
    meta = _meta(cfg, "montecarlo")
    params = BernoulliParams(b.beta, b.gamma, cfg.seed, b.stream_id)
    est = mc_gain(params, b.k_start, b.trials)
    files = [write_csv(out / "montecarlo.csv",
                       ["beta", "gamma", "k_start", "trials", "mean", "stderr", "kl_rho",
                        "bias_allowance", "consistent"],
                       [(b.beta, b.gamma, b.k_start, b.trials, est.mean, est.stderr, est.reference,
                         est.bias_allowance, int(est.consistent()))], meta)]
    seeds = [cfg.seed + i for i in range(b.lln_seeds)]
    results = lln_slopes(b.beta, b.gamma, seeds, b.lln_k0, b.lln_periods, redraw=b.redraw)
    ref = kl_rho(b.beta, b.gamma)
    rows = []
    for seed, r in zip(seeds, results):
        within = (not r.truncated) and ref > 0 and abs(r.slope - ref) <= 0.3 * ref
        rows.append((seed, r.slope, int(within), int(r.truncated), r.trajectory.steps[-1],
                     len(r.trajectory.steps) - 1))
    files.append(write_csv(out / "lln_slopes.csv",
                           ["seed", "slope", "within_30pct", "truncated", "final_k", "periods"], rows, meta))
    files.append(write_csv(out / "lln_returns.csv", ["returns", "trajectories"],
                           sorted(return_histogram(results).items()), meta))
    return files


def cmd_tdse(cfg: ExperimentConfig, out: Path, quiet: bool = False) -> list[Path]:
    from .tdse import Grid, auto_timestep, run_period_experiment

    d = cfg.tdse
    schedule = cfg.schedule()
    grid = Grid.for_length(d.n_points, schedule.a_max)
    dt = auto_timestep(grid, schedule, d.levels, d.dt_factor)
    log.info("tdse: %d points, dx=%g, dt=%g, %d steps", d.n_points, grid.dx, dt,
             int(schedule.period / schedule.epsilon / dt))
    rep = run_period_experiment(d.k0, schedule, grid, d.levels, dt=dt, energy_samples=d.energy_samples)
    meta = _meta(cfg, "tdse")
    pop_rows = []
    for c in rep.checkpoints:
        for k, (p, e) in enumerate(zip(c.populations, c.energies), start=1):
            pop_rows.append((c.label, c.tau, k, float(e), float(p)))
    files = [
        write_csv(out / "populations.csv", ["checkpoint", "tau", "k", "energy", "population"], pop_rows, meta),
        write_csv(out / "energy.csv", ["t", "tau", "energy", "norm"],
                  [tuple(float(v) for v in row) for row in rep.energy_series], meta),
        write_csv(out / "summary.csv",
                  ["k0", "k_predicted", "k_observed", "I_predicted", "epsilon", "dt", "norm_drift",
                   "n_points", "dx"],
                  [(rep.k0, rep.k_predicted, rep.k_observed, rep.predicted_population, rep.epsilon,
                    rep.dt, rep.norm_drift, d.n_points, grid.dx)], meta),
    ]
    if not quiet:
        print(rep.summary())
    return files


COMMANDS = {
    "levelmap": cmd_levelmap,
    "trajectory": cmd_trajectory,
    "montecarlo": cmd_montecarlo,
    "tdse": cmd_tdse,
}


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="levelcross",
                                description="Adiabatic level renumbering under periodic separation.")
    p.add_argument("--version", action="version", version=f"levelcross {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("levelmap", "write the per-level map table and trajectories"),
        ("trajectory", "iterate the level map from each trajectory.k0"),
        ("montecarlo", "estimate the per-period log gain for random indicator sequences"),
        ("tdse", "run one period of the Schroedinger equation for the divided segment"),
        ("validate-config", "check a configuration file and exit"),
    ):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", type=Path, help="YAML configuration file")
        sp.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
        sp.add_argument("--seed", type=int, help="RNG seed (overrides seed)")
        sp.add_argument("--quiet", action="store_true", help="only report errors")
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.output.dir = str(args.out)
        cfg.validate()
        if args.command == "validate-config":
            if not args.quiet:
                print(f"ok: {args.config or '<defaults>'} (sha256 {cfg.digest()[:12]})")
            return EXIT_OK
        out = Path(cfg.output.dir)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "tdse":
            files = cmd_tdse(cfg, out, quiet=args.quiet)
        else:
            files = COMMANDS[args.command](cfg, out)
        seeds = [cfg.seed] if args.command != "montecarlo" else \
            [cfg.seed + i for i in range(cfg.bernoulli.lln_seeds)]
        extra = {}
        if args.command == "tdse":
            d = cfg.tdse
            extra = {"grid": {"n_points": d.n_points}, "schedule": {
                k: getattr(d, k) for k in ("a1", "a2", "tau1", "tau2", "period", "ramp", "epsilon", "identity")}}
        write_manifest(out, args.command, cfg.to_dict(), cfg.digest(), files, seeds, extra)
        log.info("wrote %d files to %s", len(files), out)
        return EXIT_OK
    except (ConfigError, DomainError, DegenerateSpectrum) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TruncationError as exc:
        print(f"truncation: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
