"""Scenario configuration: TOML on disk, frozen dataclasses in memory.

Schema (all sections except ``[profile]`` and ``[scenario]`` optional)::

    [profile]
    omega0 = 1.0
    tau = 3.0
    n_periods = 40
    [[profile.segments]]        # repeated, covering exactly one period
    duration = 1.5
    delta = 0.3
    gamma = 0.0

    [scenario]
    regime = "displaced"        # or "squeezed"
    m_list = [0, 1, 2]
    tail_tol = 1e-12
    output_dir = "out"

    [perturbation]              # displaced: alpha0/alpha1; squeezed: rho0_offset/rho1
    alpha0 = 1e-6
    alpha1 = 0.0
    rho0_offset = 0.0
    rho1 = 0.0

    [sampling]                  # either ``times = [...]`` or ``stride`` + ``count`` (+ ``start``)
    stride = 6.0
    count = 11

    [bands]
    omega0_tau_min = 0.5
    omega0_tau_max = 20.0
    n_points = 2000

    [figures]
    m_max = 5
    gamma_min = 0.1
    gamma_max = 1000.0
    n_gamma = 41
    energy_min = 2.0
    energy_max = 1000.0
    n_energy = 41
    fig2_levels = [10.0, 100.0]
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import tomli_w

from .errors import ConfigError, QParamError
from .model import DriveProfile, Segment
from .spectra import DISPLACED, REGIMES, SQUEEZED

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULT_PERTURBATION = 1e-6


@dataclass(frozen=True)
class Perturbation:
    alpha0: float = 0.0
    alpha1: float = 0.0
    rho0_offset: float = 0.0
    rho1: float = 0.0


@dataclass(frozen=True)
class Sampling:
    times: tuple[float, ...] | None = None
    stride: float | None = None
    count: int | None = None
    start: float = 0.0

    def sample_times(self) -> np.ndarray:
        if self.times is not None:
            return np.asarray(self.times, dtype=float)
        return self.start + self.stride * np.arange(self.count)


@dataclass(frozen=True)
class BandSpec:
    omega0_tau_min: float = 0.5
    omega0_tau_max: float = 20.0
    n_points: int = 2000


@dataclass(frozen=True)
class FigureSpec:
    m_max: int = 5
    gamma_min: float = 0.1
    gamma_max: float = 1000.0
    n_gamma: int = 41
    energy_min: float = 2.0
    energy_max: float = 1000.0
    n_energy: int = 41
    fig2_levels: tuple[float, ...] = (10.0, 100.0)

    def gamma_grid(self) -> np.ndarray:
        return np.geomspace(self.gamma_min, self.gamma_max, self.n_gamma)

    def energy_grid(self) -> np.ndarray:
        return np.geomspace(self.energy_min, self.energy_max, self.n_energy)


@dataclass(frozen=True)
class ScenarioConfig:
    profile: DriveProfile
    regime: str
    m_list: tuple[int, ...]
    perturbation: Perturbation = field(default_factory=Perturbation)
    sampling: Sampling = field(default_factory=lambda: Sampling(stride=1.0, count=2))
    tail_tol: float = 1e-12
    output_dir: str = "out"
    bands: BandSpec = field(default_factory=BandSpec)
    figures: FigureSpec = field(default_factory=FigureSpec)


# -- parsing ---------------------------------------------------------------------------


def _get(table: dict, key: str, path: str, kind, default=...):
    if key not in table:
        if default is ...:
            raise ConfigError(f"{path}.{key}", "missing required key")
        return default
    value = table[key]
    try:
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise TypeError
            value = float(value)
            if not math.isfinite(value):
                raise TypeError
        elif kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise TypeError
        elif kind is str:
            if not isinstance(value, str):
                raise TypeError
    except TypeError:
        raise ConfigError(f"{path}.{key}", f"expected {kind.__name__}, got {value!r}") from None
    return value


def _known(table: dict, path: str, keys: set[str]) -> None:
    extra = set(table) - keys
    if extra:
        raise ConfigError(f"{path}.{sorted(extra)[0]}", "unknown key")


def _parse_profile(raw: Any) -> DriveProfile:
    if not isinstance(raw, dict):
        raise ConfigError("profile", "missing [profile] table")
    _known(raw, "profile", {"omega0", "tau", "n_periods", "segments"})
    segs_raw = raw.get("segments")
    if not isinstance(segs_raw, list) or not segs_raw:
        raise ConfigError("profile.segments", "need a non-empty list of segments")
    segs = []
    for i, s in enumerate(segs_raw):
        p = f"profile.segments[{i}]"
        if not isinstance(s, dict):
            raise ConfigError(p, "segment must be a table")
        _known(s, p, {"duration", "delta", "gamma"})
        seg = Segment(_get(s, "duration", p, float), _get(s, "delta", p, float),
                      _get(s, "gamma", p, float, 0.0))
        if not seg.duration > 0:
            raise ConfigError(f"{p}.duration", "must be positive")
        if not abs(seg.delta) < 1:
            raise ConfigError(f"{p}.delta", "|delta| must be < 1")
        if not seg.gamma >= 0:
            raise ConfigError(f"{p}.gamma", "must be >= 0")
        segs.append(seg)
    omega0 = _get(raw, "omega0", "profile", float)
    tau = _get(raw, "tau", "profile", float)
    n_periods = _get(raw, "n_periods", "profile", int, 1)
    if not omega0 > 0:
        raise ConfigError("profile.omega0", "must be positive")
    if not tau > 0:
        raise ConfigError("profile.tau", "must be positive")
    if n_periods < 1:
        raise ConfigError("profile.n_periods", "must be >= 1")
    try:
        return DriveProfile(omega0, tau, tuple(segs), n_periods)
    except QParamError as exc:
        raise ConfigError("profile.segments", str(exc)) from None


def config_from_dict(raw: dict) -> ScenarioConfig:
    _known(raw, "<root>", {"profile", "scenario", "perturbation", "sampling", "bands", "figures"})
    profile = _parse_profile(raw.get("profile"))

    sc = raw.get("scenario")
    if not isinstance(sc, dict):
        raise ConfigError("scenario", "missing [scenario] table")
    _known(sc, "scenario", {"regime", "m_list", "tail_tol", "output_dir"})
    regime = _get(sc, "regime", "scenario", str)
    if regime not in REGIMES:
        raise ConfigError("scenario.regime", f"must be one of {REGIMES}, got {regime!r}")
    m_list = sc.get("m_list")
    if not isinstance(m_list, list) or not m_list:
        raise ConfigError("scenario.m_list", "must be a non-empty list of integers")
    for i, m in enumerate(m_list):
        if isinstance(m, bool) or not isinstance(m, int) or m < 0:
            raise ConfigError(f"scenario.m_list[{i}]", f"expected integer >= 0, got {m!r}")
    tail_tol = _get(sc, "tail_tol", "scenario", float, 1e-12)
    if not 0 < tail_tol <= 1e-6:
        raise ConfigError("scenario.tail_tol", "must lie in (0, 1e-6]")
    output_dir = _get(sc, "output_dir", "scenario", str, "out")

    pr = raw.get("perturbation")
    if pr is None:
        pert = (Perturbation(alpha0=DEFAULT_PERTURBATION) if regime == DISPLACED
                else Perturbation(rho0_offset=DEFAULT_PERTURBATION))
    else:
        _known(pr, "perturbation", {"alpha0", "alpha1", "rho0_offset", "rho1"})
        pert = Perturbation(*(_get(pr, k, "perturbation", float, 0.0)
                              for k in ("alpha0", "alpha1", "rho0_offset", "rho1")))
    wrong = ("rho0_offset", "rho1") if regime == DISPLACED else ("alpha0", "alpha1")
    for k in wrong:
        if getattr(pert, k) != 0.0:
            raise ConfigError(f"perturbation.{k}", f"must be 0 in the {regime} regime")

    sampling = _parse_sampling(raw.get("sampling"), profile)

    bands = BandSpec()
    if "bands" in raw:
        b = raw["bands"]
        _known(b, "bands", {"omega0_tau_min", "omega0_tau_max", "n_points"})
        bands = BandSpec(_get(b, "omega0_tau_min", "bands", float, bands.omega0_tau_min),
                         _get(b, "omega0_tau_max", "bands", float, bands.omega0_tau_max),
                         _get(b, "n_points", "bands", int, bands.n_points))
        if not 0 < bands.omega0_tau_min < bands.omega0_tau_max:
            raise ConfigError("bands.omega0_tau_max", "need 0 < omega0_tau_min < omega0_tau_max")
        if bands.n_points < 2:
            raise ConfigError("bands.n_points", "must be >= 2")

    figures = FigureSpec()
    if "figures" in raw:
        figures = _parse_figures(raw["figures"])

    return ScenarioConfig(profile, regime, tuple(m_list), pert, sampling, tail_tol, output_dir,
                          bands, figures)


def _parse_sampling(raw: Any, profile: DriveProfile) -> Sampling:
    if raw is None:
        return Sampling(stride=profile.tau, count=profile.n_periods + 1)
    _known(raw, "sampling", {"times", "stride", "count", "start"})
    if "times" in raw:
        if {"stride", "count", "start"} & set(raw):
            raise ConfigError("sampling.times", "give either times or stride/count, not both")
        times = raw["times"]
        if not isinstance(times, list) or not times:
            raise ConfigError("sampling.times", "must be a non-empty list")
        vals = tuple(_get({"t": t}, "t", f"sampling.times[{i}]", float) for i, t in enumerate(times))
        samp = Sampling(times=vals)
    else:
        samp = Sampling(stride=_get(raw, "stride", "sampling", float),
                        count=_get(raw, "count", "sampling", int),
                        start=_get(raw, "start", "sampling", float, 0.0))
        if not samp.stride > 0:
            raise ConfigError("sampling.stride", "must be positive")
        if samp.count < 1:
            raise ConfigError("sampling.count", "must be >= 1")
    ts = samp.sample_times()
    if np.any(np.diff(ts) <= 0):
        raise ConfigError("sampling", "sample times must be strictly increasing")
    if ts[0] < 0 or ts[-1] > profile.t_end * (1 + 1e-14):
        raise ConfigError("sampling", f"sample times must lie in [0, {profile.t_end!r}]")
    return samp


def _parse_figures(raw: dict) -> FigureSpec:
    _known(raw, "figures", set(FigureSpec.__dataclass_fields__))
    d = FigureSpec()
    kw = {}
    for name in ("m_max", "n_gamma", "n_energy"):
        kw[name] = _get(raw, name, "figures", int, getattr(d, name))
    for name in ("gamma_min", "gamma_max", "energy_min", "energy_max"):
        kw[name] = _get(raw, name, "figures", float, getattr(d, name))
    levels = raw.get("fig2_levels", list(d.fig2_levels))
    if not isinstance(levels, list) or not levels:
        raise ConfigError("figures.fig2_levels", "must be a non-empty list")
    kw["fig2_levels"] = tuple(_get({"x": v}, "x", f"figures.fig2_levels[{i}]", float)
                              for i, v in enumerate(levels))
    spec = FigureSpec(**kw)
    if spec.m_max < 0:
        raise ConfigError("figures.m_max", "must be >= 0")
    if not 0 < spec.gamma_min < spec.gamma_max or spec.n_gamma < 1:
        raise ConfigError("figures.gamma_max", "need 0 < gamma_min < gamma_max and n_gamma >= 1")
    if not 2.0 <= spec.energy_min < spec.energy_max or spec.n_energy < 1:
        raise ConfigError("figures.energy_min", "need 2 <= energy_min < energy_max and n_energy >= 1")
    if any(v < 2.0 for v in spec.fig2_levels):
        raise ConfigError("figures.fig2_levels", "levels must be >= 2")
    return spec


def load_config(path: str | Path) -> ScenarioConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError("<file>", str(exc)) from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<file>", f"invalid TOML: {exc}") from None
    return config_from_dict(raw)


# -- serialisation ----------------------------------------------------------------------


def config_to_dict(cfg: ScenarioConfig) -> dict:
    p = cfg.profile
    out: dict[str, Any] = {
        "profile": {
            "omega0": p.omega0,
            "tau": p.tau,
            "n_periods": p.n_periods,
            "segments": [{"duration": s.duration, "delta": s.delta, "gamma": s.gamma} for s in p.segments],
        },
        "scenario": {
            "regime": cfg.regime,
            "m_list": list(cfg.m_list),
            "tail_tol": cfg.tail_tol,
            "output_dir": cfg.output_dir,
        },
        "perturbation": {k: getattr(cfg.perturbation, k) for k in ("alpha0", "alpha1", "rho0_offset", "rho1")},
    }
    s = cfg.sampling
    out["sampling"] = ({"times": list(s.times)} if s.times is not None
                       else {"stride": s.stride, "count": s.count, "start": s.start})
    b = cfg.bands
    out["bands"] = {"omega0_tau_min": b.omega0_tau_min, "omega0_tau_max": b.omega0_tau_max,
                    "n_points": b.n_points}
    f = cfg.figures
    out["figures"] = {k: getattr(f, k) for k in FigureSpec.__dataclass_fields__}
    out["figures"]["fig2_levels"] = list(f.fig2_levels)
    return out


def dumps_config(cfg: ScenarioConfig) -> str:
    return tomli_w.dumps(config_to_dict(cfg))


def loads_config(text: str) -> ScenarioConfig:
    return config_from_dict(tomllib.loads(text))
