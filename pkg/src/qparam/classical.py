"""Classical auxiliary dynamics: segment-exact propagation, Ermakov-Pinney, Floquet bands.

Within a segment of constant ``(delta, gamma)`` the linear equation
``x'' + gamma x' + omega_tilde**2 x = 0`` has a closed-form 2x2 propagator, so
every trajectory here is an ordered product of exact segment maps.  The
nonlinear width equation ``rho'' + gamma rho' + omega_tilde**2 rho = beta**2/rho**3``
is solved by Pinney's superposition of two linear solutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError
from .model import DriveProfile, TimePoint, beta_at, frequencies_at

_CRITICAL_RTOL = 1e-12


@dataclass(frozen=True)
class OscState:
    value: float
    derivative: float

    def as_array(self) -> np.ndarray:
        return np.array([self.value, self.derivative])


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution; arrays are aligned with ``t``."""

    profile: DriveProfile
    kind: str
    t: np.ndarray
    value: np.ndarray
    derivative: np.ndarray
    beta: np.ndarray
    omega_tilde: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    def state(self, i: int) -> OscState:
        return OscState(float(self.value[i]), float(self.derivative[i]))

    def timepoint(self, i: int) -> TimePoint:
        return TimePoint(float(self.t[i]), float(self.beta[i]), float(self.omega_tilde[i]),
                         float(self.omega_tilde[i] / self.beta[i]))

    @property
    def samples(self) -> list[tuple[TimePoint, OscState]]:
        return [(self.timepoint(i), self.state(i)) for i in range(len(self))]


@dataclass(frozen=True)
class MonodromyResult:
    matrix: np.ndarray
    multipliers: tuple[complex, complex]
    growth_exponent: float
    tau: float

    @property
    def in_band(self) -> bool:
        return self.growth_exponent > 0.0

    @property
    def max_modulus(self) -> float:
        return max(abs(z) for z in self.multipliers)


# -- segment propagators -------------------------------------------------------


def segment_propagator(omega_tilde: float, gamma: float, dt: float) -> np.ndarray:
    """Exact map ``(x, x')(t0) -> (x, x')(t0 + dt)`` for constant coefficients."""
    if dt == 0.0:
        return np.eye(2)
    w2 = omega_tilde * omega_tilde
    h = 0.5 * gamma
    disc = w2 - h * h
    if abs(gamma - 2.0 * omega_tilde) < _CRITICAL_RTOL * omega_tilde:
        c, s = 1.0, dt
    elif disc > 0.0:
        wd = math.sqrt(disc)
        c, s = math.cos(wd * dt), math.sin(wd * dt) / wd
    else:
        kd = math.sqrt(-disc)
        c, s = math.cosh(kd * dt), math.sinh(kd * dt) / kd
    e = math.exp(-h * dt)
    return e * np.array([[c + h * s, s], [-w2 * s, c - h * s]])


def _pieces(profile: DriveProfile, t0: float, t1: float) -> Iterator[tuple[float, float, int]]:
    """Yield ``(start, end, segment_index)`` covering [t0, t1] in order."""
    k, i, off = profile.locate(t0)
    start = t0
    nseg = len(profile.segments)
    while start < t1:
        seg_end = k * profile.tau + profile.segment_starts[i] + profile.segments[i].duration
        end = min(seg_end, t1)
        yield start, end, i
        start = seg_end
        i += 1
        if i == nseg:
            i, k = 0, k + 1


def transfer_matrix(profile: DriveProfile, t0: float, t1: float) -> np.ndarray:
    m = np.eye(2)
    for a, b, i in _pieces(profile, t0, t1):
        m = segment_propagator(profile.omega_tilde(i), profile.segments[i].gamma, b - a) @ m
    return m


def _propagate_many(profile: DriveProfile, inits: np.ndarray, t_samples: Sequence[float],
                    t0: float) -> np.ndarray:
    """Propagate the columns of ``inits`` (shape 2 x k) to each sample time.

    The state is advanced exactly from segment boundary to segment boundary;
    each sample is reached by one partial-segment map from the last boundary.
    """
    ts = np.asarray(t_samples, dtype=float)
    if ts.ndim != 1 or len(ts) == 0:
        raise DomainError("t_samples must be a non-empty 1-d sequence")
    if np.any(np.diff(ts) <= 0):
        raise DomainError("t_samples must be strictly increasing")
    if ts[0] < t0:
        raise DomainError("t_samples must not precede the initial time")
    profile.locate(float(ts[-1]))

    out = np.empty((len(ts),) + inits.shape)
    state = inits.astype(float).copy()
    pieces = _pieces(profile, t0, float(ts[-1]))
    cur = next(pieces, None)
    for j, t in enumerate(ts):
        while cur is not None and cur[1] <= t:
            a, b, i = cur
            state = segment_propagator(profile.omega_tilde(i), profile.segments[i].gamma, b - a) @ state
            cur = next(pieces, None)
        if cur is None or t == cur[0]:
            out[j] = state
        else:
            a, _, i = cur
            out[j] = segment_propagator(profile.omega_tilde(i), profile.segments[i].gamma, t - a) @ state
    return out


def _timebase(profile: DriveProfile, ts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    tps = [frequencies_at(profile, float(t)) for t in ts]
    return np.array([p.beta for p in tps]), np.array([p.omega_tilde for p in tps])


def propagate_linear(profile: DriveProfile, init: OscState, t_samples: Sequence[float],
                     t0: float = 0.0, kind: str = "linear-alpha") -> Trajectory:
    ts = np.asarray(t_samples, dtype=float)
    out = _propagate_many(profile, init.as_array()[:, None], ts, t0)[:, :, 0]
    beta, wt = _timebase(profile, ts)
    return Trajectory(profile, kind, ts, out[:, 0], out[:, 1], beta, wt)


def propagate_ermakov(profile: DriveProfile, init: OscState, t_samples: Sequence[float],
                      t0: float = 0.0) -> Trajectory:
    """Width function via Pinney's construction ``rho**2 = u**2 + (beta0/rho0)**2 v**2``.

    ``u`` carries the initial data of ``rho``; ``v`` starts at ``(0, 1)``.  Both
    solve the damped linear equation, so the result is segment-exact.
    """
    rho0, drho0 = init.value, init.derivative
    if not rho0 > 0:
        raise DomainError(f"rho must be positive, got {rho0}")
    ts = np.asarray(t_samples, dtype=float)
    c = beta_at(profile, t0) / rho0
    uv = _propagate_many(profile, np.array([[rho0, 0.0], [drho0, 1.0]]), ts, t0)
    u, du, v, dv = uv[:, 0, 0], uv[:, 1, 0], uv[:, 0, 1], uv[:, 1, 1]
    rho = np.hypot(u, c * v)
    drho = (u * du + c * c * v * dv) / rho
    beta, wt = _timebase(profile, ts)
    return Trajectory(profile, "ermakov-rho", ts, rho, drho, beta, wt)


def integrate_ermakov_direct(profile: DriveProfile, init: OscState, t_samples: Sequence[float],
                             rtol: float = 1e-13, atol: float = 1e-15) -> Trajectory:
    """Reference solution of the width equation by adaptive Runge-Kutta (DOP853).

    Integration restarts at every segment boundary so the integrator never
    steps across a coefficient jump.  Slow; intended as an independent check.
    """
    if not init.value > 0:
        raise DomainError(f"rho must be positive, got {init.value}")
    ts = np.asarray(t_samples, dtype=float)
    y = init.as_array()
    out = np.empty((len(ts), 2))
    j = 0
    while j < len(ts) and ts[j] == 0.0:
        out[j], j = y, j + 1
    for a, b, i in _pieces(profile, 0.0, float(ts[-1])):
        if j == len(ts):
            break
        g = profile.segments[i].gamma
        w2 = profile.omega_tilde(i) ** 2
        beta_a = beta_at(profile, a)

        def rhs(t, z, a=a, g=g, w2=w2, beta_a=beta_a):
            b2 = (beta_a * math.exp(-g * (t - a))) ** 2
            return [z[1], -g * z[1] - w2 * z[0] + b2 / z[0] ** 3]

        k = j
        while k < len(ts) and ts[k] <= b:
            k += 1
        teval = np.unique(np.append(ts[j:k], b))
        sol = solve_ivp(rhs, (a, b), y, method="DOP853", rtol=rtol, atol=atol, t_eval=teval)
        if not sol.success:
            raise RuntimeError(sol.message)
        out[j:k] = sol.y[:, : k - j].T
        y = sol.y[:, -1]
        j = k
    beta, wt = _timebase(profile, ts)
    return Trajectory(profile, "ermakov-rho", ts, out[:, 0], out[:, 1], beta, wt)


# -- energies and the invariant -------------------------------------------------


def classical_energy(state: OscState, tp: TimePoint) -> float:
    return 0.5 * (state.derivative ** 2 + tp.omega_tilde ** 2 * state.value ** 2)


def hamiltonian_energy(state: OscState, tp: TimePoint) -> float:
    """``beta**2 (p**2 + omega**2 q**2)/2`` with canonical momentum ``p = q'/beta``."""
    p = state.derivative / tp.beta
    return 0.5 * tp.beta ** 2 * (p * p + tp.omega ** 2 * state.value ** 2)


def lr_invariant(q_state: OscState, rho_state: OscState, tp: TimePoint) -> float:
    rho = rho_state.value
    if not rho > 0:
        raise DomainError(f"rho must be positive, got {rho}")
    q = q_state.value
    p = q_state.derivative / tp.beta
    return 0.5 * ((q / rho) ** 2 + (p * rho - rho_state.derivative * q / tp.beta) ** 2)


def lr_invariant_series(q: Trajectory, rho: Trajectory) -> np.ndarray:
    if not np.array_equal(q.t, rho.t):
        raise DomainError("trajectories must share sample times")
    cross = (q.derivative * rho.value - rho.derivative * q.value) / q.beta
    return 0.5 * ((q.value / rho.value) ** 2 + cross ** 2)


# -- Floquet analysis ----------------------------------------------------------------


def monodromy(profile: DriveProfile) -> MonodromyResult:
    """One-period transfer matrix and its multipliers.

    The determinant is taken from its exact value ``beta(tau)`` so that the
    stable (complex-pair) case yields ``|multiplier| = sqrt(beta(tau))`` exactly.
    """
    m = transfer_matrix(profile, 0.0, profile.tau)
    tau = profile.tau
    exposure = profile.period_exposure
    det = math.exp(-exposure)
    tr = float(m[0, 0] + m[1, 1])
    disc = tr * tr - 4.0 * det
    if disc < 0.0:
        root = 0.5 * math.sqrt(-disc)
        mult = (complex(0.5 * tr, root), complex(0.5 * tr, -root))
        growth = -0.5 * exposure / tau
    else:
        root = 0.5 * math.sqrt(disc)
        big = 0.5 * tr + math.copysign(root, tr) if tr != 0.0 else root
        small = det / big if big != 0.0 else 0.0
        mult = (complex(big), complex(small))
        growth = math.log(abs(big)) / tau
    return MonodromyResult(m, mult, growth, tau)


@dataclass(frozen=True)
class BandScan:
    omega0_tau: np.ndarray
    growth: np.ndarray
    edges: tuple[float, ...]

    @property
    def in_band(self) -> np.ndarray:
        return self.growth > 0.0

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.omega0_tau.tolist(), self.growth.tolist()))

    @property
    def bands(self) -> list[tuple[float, float]]:
        """Unstable intervals, clipped to the scanned range."""
        lo, hi = float(self.omega0_tau[0]), float(self.omega0_tau[-1])
        bounds = [lo] if self.in_band[0] else []
        bounds += list(self.edges)
        if self.in_band[-1]:
            bounds.append(hi)
        return list(zip(bounds[::2], bounds[1::2]))


def _growth_at(template: DriveProfile, x: float) -> float:
    return monodromy(template.with_omega0_tau(x)).growth_exponent


def scan_bands(template: DriveProfile, omega0_tau_range: tuple[float, float], n_points: int,
               refine: bool = True, max_iter: int = 50) -> BandScan:
    """Grid scan of the growth exponent over omega0*tau at fixed omega0 and drive shape.

    Band edges are located by bisection on the sign of the growth exponent
    between neighbouring grid points.
    """
    if n_points < 2:
        raise DomainError("n_points must be >= 2")
    lo, hi = omega0_tau_range
    if not (0 < lo < hi):
        raise DomainError("omega0_tau_range must satisfy 0 < lo < hi")
    xs = np.linspace(lo, hi, n_points)
    g = np.array([_growth_at(template, float(x)) for x in xs])
    edges = []
    if refine:
        flags = g > 0.0
        for k in np.flatnonzero(flags[1:] != flags[:-1]):
            a, b = float(xs[k]), float(xs[k + 1])
            fa = flags[k]
            for _ in range(max_iter):
                mid = 0.5 * (a + b)
                if (_growth_at(template, mid) > 0.0) == fa:
                    a = mid
                else:
                    b = mid
                if b - a <= 4 * np.finfo(float).eps * b:
                    break
            edges.append(0.5 * (a + b))
    return BandScan(xs, g, tuple(edges))


def envelope_growth_rate(t: np.ndarray, values: np.ndarray, tau: float, skip_periods: int = 0) -> float:
    """Least-squares slope of log(max |values| per period) against time."""
    k = np.floor(t / tau + 1e-12).astype(int)
    periods = np.unique(k)
    periods = periods[periods >= skip_periods]
    peaks, times = [], []
    for p in periods:
        sel = k == p
        if sel.sum() < 3:
            continue
        idx = np.argmax(np.abs(values[sel]))
        peaks.append(abs(values[sel][idx]))
        times.append(t[sel][idx])
    return float(np.polyfit(times, np.log(peaks), 1)[0])
