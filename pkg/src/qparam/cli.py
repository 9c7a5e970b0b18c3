"""Command-line scenario runner.

Subcommands: ``bands``, ``evolve``, ``spectrum``, ``figures``, ``selftest``.
Exit codes: 0 success, 1 selftest failure, 2 configuration error,
3 numerical convergence failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .classical import OscState, Trajectory, propagate_ermakov, propagate_linear, scan_bands
from .config import FigureSpec, ScenarioConfig, load_config
from .errors import ConfigError, ConvergenceError
from .model import frequencies_at
from .spectra import (
    DISPLACED,
    SQUEEZED,
    EnergyDistribution,
    GammaValue,
    WaveParams,
    asymptotic_moments,
    build_distribution,
    energy_stddev,
    gamma_displaced,
    gamma_squeezed,
    mean_energy,
    number_variance,
    overlap_matrix,
    probabilities,
)

FIGURE_KINDS = ("fig1a", "fig1b", "fig2")


# -- CSV output ------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence], units: dict[str, str],
              meta: dict | None = None) -> Path:
    """Write a CSV whose leading ``#`` lines carry metadata and column units."""
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# {k}: {_fmt(v)}" for k, v in (meta or {}).items()]
    lines.append("# units: " + "; ".join(f"{c}={units.get(c, 'dimensionless')}" for c in columns))
    lines.append(",".join(columns))
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path: Path) -> tuple[dict[str, str], list[str], np.ndarray]:
    meta, header, data = {}, None, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition(": ")
            meta[key] = val
        elif header is None:
            header = line.split(",")
        else:
            data.append([float(v) for v in line.split(",")])
    return meta, header, np.array(data)


def _pool_map(fn: Callable, items: list, threads: int) -> list:
    workers = (os.cpu_count() or 1) if threads == 0 else threads
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- scenario pipeline ------------------------------------------------------------------------


def auxiliary_trajectory(cfg: ScenarioConfig) -> Trajectory:
    """alpha(t) in the displaced regime, rho(t) in the squeezed regime."""
    ts = cfg.sampling.sample_times()
    pert = cfg.perturbation
    if cfg.regime == DISPLACED:
        return propagate_linear(cfg.profile, OscState(pert.alpha0, pert.alpha1), ts)
    rho0 = frequencies_at(cfg.profile, 0.0).omega_tilde ** -0.5 + pert.rho0_offset
    if not rho0 > 0:
        raise ConfigError("perturbation.rho0_offset", "initial width must stay positive")
    return propagate_ermakov(cfg.profile, OscState(rho0, pert.rho1), ts)


def gamma_series(cfg: ScenarioConfig, traj: Trajectory) -> list[GammaValue]:
    if cfg.regime == DISPLACED:
        avg = cfg.profile.omega_tilde_average()
        return [gamma_displaced(traj.state(i), traj.timepoint(i), avg) for i in range(len(traj))]
    return [gamma_squeezed(traj.state(i), traj.timepoint(i)) for i in range(len(traj))]


_TRAJ_UNITS = {"t": "time", "omega_tilde": "rad/time", "omega": "rad/time",
               "value": "length", "derivative": "length/time"}
_GAMMA_UNITS = {"t": "time", "omega_tilde": "rad/time", "e_cl": "energy", "beta_omega_tilde": "energy"}
_ENERGY_COLS = ("e_cl", "beta_omega_tilde", "mean", "mean_error", "stddev", "asym_mean", "asym_stddev")


def write_evolution(cfg: ScenarioConfig, out: Path) -> tuple[Trajectory, list[GammaValue]]:
    traj = auxiliary_trajectory(cfg)
    gammas = gamma_series(cfg, traj)
    write_csv(out / "trajectory.csv", ["t", "beta", "omega_tilde", "omega", "value", "derivative"],
              ([traj.t[i], traj.beta[i], traj.omega_tilde[i], traj.omega_tilde[i] / traj.beta[i],
                traj.value[i], traj.derivative[i]] for i in range(len(traj))),
              _TRAJ_UNITS, {"kind": traj.kind, "regime": cfg.regime})
    write_csv(out / "gamma.csv", ["t", "beta", "omega_tilde", "gamma", "e_cl", "beta_omega_tilde"],
              ([traj.t[i], traj.beta[i], traj.omega_tilde[i], g.gamma, g.e_cl, g.beta_omega_tilde]
               for i, g in enumerate(gammas)),
              _GAMMA_UNITS, {"regime": cfg.regime})
    return traj, gammas


def _ratio(a: float, b: float) -> float:
    return a / b if b != 0 and math.isfinite(b) else math.nan


def run_scenario(cfg: ScenarioConfig, out_dir: str | Path | None = None, threads: int = 1) -> Path:
    """Full pipeline: auxiliary function, Gamma(t), distributions and a moments summary."""
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    traj, gammas = write_evolution(cfg, out)
    tasks = [(m, k) for m in cfg.m_list for k in range(len(gammas))]

    def work(task):
        m, k = task
        try:
            return build_distribution(m, gammas[k], cfg.tail_tol)
        except ConvergenceError as exc:
            raise ConvergenceError(f"scenario m={m}, sample {k} (t={traj.t[k]!r}): {exc}") from exc

    dists: list[EnergyDistribution] = _pool_map(work, tasks, threads)
    rows = []
    for (m, k), d in zip(tasks, dists):
        g = d.gamma
        write_csv(out / "distributions" / f"m{m:02d}_s{k:04d}.csv", ["n", "P", "cumulative"],
                  zip(d.n, d.probs, d.cumulative), {},
                  {"m": m, "t": traj.t[k], "gamma": g.gamma, "regime": g.regime,
                   "beta_omega_tilde": g.beta_omega_tilde, "n_max": d.n_max, "tail_mass": d.tail_mass})
        mean, sd = mean_energy(d), energy_stddev(d)
        am, asd = asymptotic_moments(m, g.regime, g.e_cl, g.beta_omega_tilde) if g.e_cl > 0 else (math.nan,) * 2
        rows.append([m, traj.t[k], g.gamma, g.e_cl, g.beta_omega_tilde, mean, d.mean_error_bar, sd, am, asd,
                     _ratio(mean, am) - 1, _ratio(sd, asd) - 1, _ratio(mean, g.e_cl), _ratio(sd, g.e_cl)])
    cols = ["m", "t", "gamma", "e_cl", "beta_omega_tilde", "mean", "mean_error", "stddev", "asym_mean",
            "asym_stddev", "rel_dev_mean", "rel_dev_stddev", "mean_over_ecl", "stddev_over_ecl"]
    units = {c: "energy" for c in _ENERGY_COLS} | {"t": "time"}
    write_csv(out / "moments.csv", cols, rows, units, {"regime": cfg.regime})
    return out


# -- figures ------------------------------------------------------------------------------------


def figure_table(kind: str, spec: FigureSpec, threads: int = 1) -> tuple[list[str], list[list]]:
    """Rows for one figure, in units where ``beta * omega_tilde = 1``."""
    ms = list(range(spec.m_max + 1))
    if kind == "fig1a":
        grid = spec.gamma_grid()
        tasks = [(m, float(g)) for m in ms for g in grid]
        dists = _pool_map(lambda t: build_distribution(t[0], GammaValue.displaced(t[1])), tasks, threads)
        rows = [[m, g, g, mean_energy(d) / g, energy_stddev(d) / g, 1.0] for (m, g), d in zip(tasks, dists)]
        return ["m", "gamma", "e_cl_over_omega", "mean_over_ecl", "stddev_over_ecl", "asymptote"], rows
    if kind == "fig1b":
        grid = spec.energy_grid()
        tasks = [(m, float(x)) for m in ms for x in grid]
        dists = _pool_map(lambda t: build_distribution(t[0], GammaValue.squeezed_from_energy(t[1])),
                          tasks, threads)
        rows = [[m, x, d.gamma.gamma, mean_energy(d) / x, energy_stddev(d) / x, m + 0.5]
                for (m, x), d in zip(tasks, dists)]
        return ["m", "e_cl_over_omega", "gamma", "mean_over_ecl", "stddev_over_ecl", "asymptote"], rows
    if kind == "fig2":
        tasks = [(m, x) for m in ms for x in spec.fig2_levels]
        dists = _pool_map(lambda t: build_distribution(t[0], GammaValue.squeezed_from_energy(t[1])),
                          tasks, threads)
        sig = {t: energy_stddev(d) / t[1] for t, d in zip(tasks, dists)}
        rows = [[m] + [sig[(m, x)] for x in spec.fig2_levels] + [math.sqrt(((m + 1) ** 2 - m) / 2.0)]
                for m in ms]
        return ["m"] + [f"sigma_over_ecl_at_{_fmt(x)}" for x in spec.fig2_levels] + ["asymptote"], rows
    raise ValueError(f"unknown figure kind {kind!r}; expected one of {FIGURE_KINDS}")


def emit_figure_data(kind: str, spec: FigureSpec, out_dir: str | Path, threads: int = 1) -> Path:
    cols, rows = figure_table(kind, spec, threads)
    meta = {"figure": kind, "energy_unit": "beta*omega_tilde"}
    return write_csv(Path(out_dir) / f"{kind}.csv", cols, rows, {}, meta)


# -- bands ---------------------------------------------------------------------------------------


def scan_bands_cmd(cfg: ScenarioConfig, out_dir: str | Path) -> Path:
    b = cfg.bands
    scan = scan_bands(cfg.profile, (b.omega0_tau_min, b.omega0_tau_max), b.n_points)
    out = Path(out_dir)
    write_csv(out / "bands.csv", ["omega0_tau", "omega_cl", "in_band"],
              zip(scan.omega0_tau, scan.growth, scan.in_band), {"omega_cl": "1/time"},
              {"omega0": cfg.profile.omega0, "n_bands": len(scan.bands)})
    write_csv(out / "band_edges.csv", ["edge", "omega0_tau"], enumerate(scan.edges), {})
    return out / "bands.csv"


# -- selftest ---------------------------------------------------------------------------------------


def selftest(size: int = 8, report: Callable[[str], None] = print) -> bool:
    """Closed forms against quadrature on a reduced grid, plus normalisation and variance."""
    ok = True

    def check(name: str, passed: bool, detail: str):
        nonlocal ok
        ok &= passed
        report(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")

    ns = np.arange(size + 1)
    for g in (0.1, 5.0):
        wf = WaveParams.displaced(g)
        gv = wf.gamma_value(DISPLACED)
        err = np.abs(overlap_matrix(size, wf) - np.array([probabilities(m, ns, gv) for m in ns])).max()
        check(f"oracle displaced Gamma={g}", err <= 1e-9, f"max |diff| = {err:.2e}")
    for g in (1.01, 5.0):
        wf = WaveParams.squeezed(g)
        gv = wf.gamma_value(SQUEEZED)
        err = np.abs(overlap_matrix(size, wf) - np.array([probabilities(m, ns, gv) for m in ns])).max()
        check(f"oracle squeezed Gamma={g}", err <= 1e-9, f"max |diff| = {err:.2e}")
    worst = 0.0
    for m in range(4):
        for g in (GammaValue.displaced(10.0), GammaValue.squeezed(10.0)):
            worst = max(worst, 1.0 - float(np.sum(build_distribution(m, g).probs)))
    check("normalisation", worst <= 1e-10, f"max missing mass = {worst:.2e}")
    worst = max(abs(number_variance(build_distribution(m, GammaValue.displaced(10.0))) / ((2 * m + 1) * 10.0) - 1)
                for m in range(4))
    check("displaced variance (2m+1)Gamma", worst <= 1e-8, f"max rel dev = {worst:.2e}")
    return ok


# -- entry point ------------------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qparam", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="scenario TOML file")
        p.add_argument("--out", help="output directory (default: scenario.output_dir)")
        p.add_argument("--threads", type=int, default=1, help="worker threads, 0 = auto")

    common(sub.add_parser("bands", help="Floquet growth exponent over omega0*tau"))
    common(sub.add_parser("evolve", help="auxiliary function and Gamma(t)"))
    common(sub.add_parser("spectrum", help="full scenario: distributions and moments"))
    fig = sub.add_parser("figures", help="figure data as CSV")
    common(fig, config_required=False)
    fig.add_argument("--kind", choices=FIGURE_KINDS + ("all",), default="all")
    st = sub.add_parser("selftest", help="oracle-equivalence checks on a reduced grid")
    st.add_argument("--size", type=int, default=8)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "selftest":
            return 0 if selftest(args.size) else 1
        cfg = load_config(args.config) if args.config else None
        out = Path(args.out or (cfg.output_dir if cfg else "out"))
        if args.threads < 0:
            raise ConfigError("--threads", "must be >= 0")
        if args.command == "bands":
            print(scan_bands_cmd(cfg, out))
        elif args.command == "evolve":
            write_evolution(cfg, out)
            print(out / "gamma.csv")
        elif args.command == "spectrum":
            print(run_scenario(cfg, out, args.threads) / "moments.csv")
        elif args.command == "figures":
            spec = cfg.figures if cfg else FigureSpec()
            kinds = FIGURE_KINDS if args.kind == "all" else (args.kind,)
            for kind in kinds:
                print(emit_figure_data(kind, spec, out, args.threads))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
