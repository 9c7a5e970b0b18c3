"""Drive profiles and the elementary time-dependent scalars.

A drive is a periodic, piecewise-constant modulation of the squared frequency
``omega_tilde(t)**2 = omega0**2 * (1 - delta(t))`` together with a
piecewise-constant damping rate ``gamma(t)``.  Everything downstream consumes
the accumulated damping factor ``beta(t) = exp(-int_0^t gamma)``, the true
frequency ``omega_tilde`` and the stretched frequency ``omega = omega_tilde/beta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DomainError

_DURATION_RTOL = 1e-12


@dataclass(frozen=True)
class Segment:
    duration: float
    delta: float
    gamma: float = 0.0


@dataclass(frozen=True)
class DriveProfile:
    """One period of a piecewise-constant drive, repeated ``n_periods`` times.

    Segments are right-open: ``t = k*tau`` belongs to the first segment of
    period ``k``.
    """

    omega0: float
    tau: float
    segments: tuple[Segment, ...]
    n_periods: int = 1
    _starts: tuple[float, ...] = field(init=False, repr=False, compare=False)
    _exposure_starts: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        segs = tuple(s if isinstance(s, Segment) else Segment(*s) for s in self.segments)
        object.__setattr__(self, "segments", segs)
        if not (self.omega0 > 0 and math.isfinite(self.omega0)):
            raise DomainError(f"omega0 must be positive, got {self.omega0}")
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise DomainError(f"tau must be positive, got {self.tau}")
        if int(self.n_periods) != self.n_periods or self.n_periods < 1:
            raise DomainError(f"n_periods must be a positive integer, got {self.n_periods}")
        object.__setattr__(self, "n_periods", int(self.n_periods))
        if not segs:
            raise DomainError("profile needs at least one segment")
        for i, s in enumerate(segs):
            if not s.duration > 0:
                raise DomainError(f"segment {i}: duration must be positive")
            if not abs(s.delta) < 1:
                raise DomainError(f"segment {i}: |delta| must be < 1, got {s.delta}")
            if not s.gamma >= 0:
                raise DomainError(f"segment {i}: gamma must be >= 0, got {s.gamma}")
        total = math.fsum(s.duration for s in segs)
        if abs(total - self.tau) > _DURATION_RTOL * self.tau:
            raise DomainError(f"segment durations sum to {total!r}, expected tau={self.tau!r}")

        starts, exps = [0.0], [0.0]
        for s in segs[:-1]:
            starts.append(starts[-1] + s.duration)
            exps.append(exps[-1] + s.gamma * s.duration)
        object.__setattr__(self, "_starts", tuple(starts))
        object.__setattr__(self, "_exposure_starts", tuple(exps))

    # -- derived quantities -------------------------------------------------

    @property
    def t_end(self) -> float:
        return self.n_periods * self.tau

    @property
    def period_exposure(self) -> float:
        """Integral of gamma over one period."""
        return math.fsum(s.gamma * s.duration for s in self.segments)

    @property
    def segment_starts(self) -> tuple[float, ...]:
        return self._starts

    def omega_tilde(self, index: int) -> float:
        return self.omega0 * math.sqrt(1.0 - self.segments[index].delta)

    def omega_tilde_average(self) -> float:
        """Arithmetic mean of omega_tilde over one period."""
        return math.fsum(s.duration * self.omega_tilde(i) for i, s in enumerate(self.segments)) / self.tau

    def locate(self, t: float) -> tuple[int, int, float]:
        """Return ``(period, segment_index, offset_into_segment)`` for time ``t``."""
        _check_range(self, t)
        k = math.floor(t / self.tau)
        r = t - k * self.tau
        if r < 0.0:
            k -= 1
            r = t - k * self.tau
        elif r >= self.tau:
            k += 1
            r = t - k * self.tau
        i = max(0, np.searchsorted(self._starts, r, side="right") - 1)
        return k, int(i), r - self._starts[i]

    def exposure(self, t: float) -> float:
        """Integral of gamma from 0 to ``t`` in closed form."""
        k, i, off = self.locate(t)
        return k * self.period_exposure + self._exposure_starts[i] + self.segments[i].gamma * off

    # -- families -------------------------------------------------------------

    def with_omega0_tau(self, omega0_tau: float) -> "DriveProfile":
        """Same shape and omega0, with tau (and every duration) rescaled so that omega0*tau matches."""
        new_tau = omega0_tau / self.omega0
        scale = new_tau / self.tau
        segs = tuple(replace(s, duration=s.duration * scale) for s in self.segments)
        # absorb rescaling roundoff into the last segment
        tail = new_tau - math.fsum(s.duration for s in segs[:-1])
        segs = segs[:-1] + (replace(segs[-1], duration=tail),)
        return replace(self, tau=new_tau, segments=segs)

    def with_gamma(self, gamma: float | Sequence[float]) -> "DriveProfile":
        gammas = [gamma] * len(self.segments) if np.isscalar(gamma) else list(gamma)
        segs = tuple(replace(s, gamma=float(g)) for s, g in zip(self.segments, gammas, strict=True))
        return replace(self, segments=segs)


@dataclass(frozen=True)
class TimePoint:
    t: float
    beta: float
    omega_tilde: float
    omega: float


def constant_profile(omega0: float, tau: float, delta: float = 0.0, gamma: float = 0.0,
                     n_periods: int = 1) -> DriveProfile:
    return DriveProfile(omega0, tau, (Segment(tau, delta, gamma),), n_periods)


def square_wave(omega0: float, tau: float, delta: float, gamma: float | tuple[float, float] = 0.0,
                n_periods: int = 1) -> DriveProfile:
    """Half period at ``+delta`` followed by half period at ``-delta``."""
    g1, g2 = (gamma, gamma) if np.isscalar(gamma) else gamma
    half = 0.5 * tau
    return DriveProfile(omega0, tau, (Segment(half, delta, g1), Segment(tau - half, -delta, g2)), n_periods)


def _check_range(profile: DriveProfile, t: float) -> None:
    if not (0.0 <= t <= profile.t_end * (1 + 1e-14)):
        raise DomainError(f"t={t!r} outside simulated range [0, {profile.t_end!r}]")


def beta_at(profile: DriveProfile, t: float) -> float:
    return math.exp(-profile.exposure(t))


def frequencies_at(profile: DriveProfile, t: float) -> TimePoint:
    _, i, _ = profile.locate(t)
    beta = beta_at(profile, t)
    wt = profile.omega_tilde(i)
    return TimePoint(t=t, beta=beta, omega_tilde=wt, omega=wt / beta)
