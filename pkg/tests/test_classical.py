import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qparam.classical import (
    OscState,
    classical_energy,
    envelope_growth_rate,
    hamiltonian_energy,
    integrate_ermakov_direct,
    lr_invariant,
    lr_invariant_series,
    monodromy,
    propagate_ermakov,
    propagate_linear,
    scan_bands,
    segment_propagator,
    transfer_matrix,
)
from qparam.errors import DomainError
from qparam.model import TimePoint, constant_profile, square_wave


def tp(omega_tilde=1.0, beta=1.0, t=0.0):
    return TimePoint(t, beta, omega_tilde, omega_tilde / beta)


# ---------------------------------------------------------------- propagation

def test_free_quarter_period():
    p = constant_profile(1.0, 2 * math.pi)
    traj = propagate_linear(p, OscState(1.0, 0.0), [math.pi / 2])
    assert traj.value[0] == pytest.approx(0.0, abs=1e-12)
    assert traj.derivative[0] == pytest.approx(-1.0, abs=1e-12)


def test_damped_closed_form():
    g = 0.2
    p = constant_profile(1.0, 2 * math.pi, gamma=g)
    wd = math.sqrt(1 - g * g / 4)
    t = 2 * math.pi
    exact = math.exp(-g * t / 2) * (math.cos(wd * t) + (g / 2 / wd) * math.sin(wd * t))
    traj = propagate_linear(p, OscState(1.0, 0.0), [t])
    assert traj.value[0] == pytest.approx(exact, abs=1e-13)


@pytest.mark.parametrize("g", [1.0, 2.0, 3.0])
def test_propagator_regimes_against_ode(g):
    # under-, critically and over-damped segments against a tight RK solve
    from scipy.integrate import solve_ivp
    w, dt = 1.0, 1.7
    m = segment_propagator(w, g, dt)
    for x0 in ([1.0, 0.0], [0.0, 1.0]):
        sol = solve_ivp(lambda t, y: [y[1], -g * y[1] - w * w * y[0]], (0, dt), x0,
                        rtol=1e-12, atol=1e-14, method="DOP853")
        assert m @ np.array(x0) == pytest.approx(sol.y[:, -1], abs=1e-10)


@settings(max_examples=60)
@given(st.floats(0.1, 5.0), st.floats(0.0, 3.0), st.floats(0.01, 5.0))
def test_segment_determinant_is_contraction(w, g, dt):
    assert np.linalg.det(segment_propagator(w, g, dt)) == pytest.approx(math.exp(-g * dt), rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.5, 2.0), st.floats(1.0, 5.0), st.floats(-0.8, 0.8), st.floats(0, 0.3),
       st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_composition(w, tau, d, g, a, b):
    p = square_wave(w, tau, d, gamma=(g, 0.0), n_periods=6)
    t1, t2 = sorted((a * p.t_end, b * p.t_end))
    whole = transfer_matrix(p, 0.0, t2)
    split = transfer_matrix(p, t1, t2) @ transfer_matrix(p, 0.0, t1)
    assert split == pytest.approx(whole, rel=1e-12, abs=1e-12 * np.abs(whole).max())


# ---------------------------------------------------------------- energies

def test_classical_energy_examples():
    assert classical_energy(OscState(0, 0), tp()) == 0.0
    assert classical_energy(OscState(1, 0), tp(2.0)) == 2.0
    assert classical_energy(OscState(0.3, 0.4), tp()) == pytest.approx(0.125, rel=1e-15)


def test_hamiltonian_energy_examples():
    assert hamiltonian_energy(OscState(1, 0), tp(1.0, 0.5)) == pytest.approx(0.5, rel=1e-15)
    s = OscState(0.7, -1.3)
    assert hamiltonian_energy(s, tp(1.4)) == classical_energy(s, tp(1.4))


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(0.1, 5), st.floats(1e-3, 1.0))
def test_hamiltonian_equals_classical(q, dq, w, beta):
    s, point = OscState(q, dq), tp(w, beta)
    assert hamiltonian_energy(s, point) == pytest.approx(classical_energy(s, point), rel=1e-12, abs=1e-300)


def test_lr_invariant_examples():
    assert lr_invariant(OscState(0, 0), OscState(1, 0), tp()) == 0.0
    for t in np.linspace(0, 10, 7):
        q = OscState(math.cos(t), -math.sin(t))
        assert lr_invariant(q, OscState(1.0, 0.0), tp(t=t)) == pytest.approx(0.5, rel=1e-15)
    with pytest.raises(DomainError):
        lr_invariant(OscState(1, 0), OscState(0.0, 0.0), tp())


# ---------------------------------------------------------------- Ermakov

def test_ermakov_equilibrium():
    p = constant_profile(1.0, 1.0, n_periods=20)
    traj = propagate_ermakov(p, OscState(1.0, 0.0), np.linspace(0, 20, 41))
    assert traj.value == pytest.approx(np.ones(41), abs=1e-14)


def test_ermakov_rejects_nonpositive():
    p = constant_profile(1.0, 1.0)
    with pytest.raises(DomainError):
        propagate_ermakov(p, OscState(0.0, 0.0), [0.5])


def test_ermakov_free_oscillation_against_rk():
    p = constant_profile(1.0, 1.0, n_periods=30)
    ts = np.linspace(0, 30, 301)
    a = propagate_ermakov(p, OscState(2.0, 0.0), ts)
    b = integrate_ermakov_direct(p, OscState(2.0, 0.0), ts)
    assert a.value == pytest.approx(b.value, rel=1e-8)
    # rho^2 = 4 cos^2 t + sin^2 t / 4: bounds 1/2 and 2, period pi
    assert a.value.min() >= 0.5 - 1e-12 and a.value.max() <= 2.0 + 1e-12
    early = ts[ts < 30 - math.pi]
    c = propagate_ermakov(p, OscState(2.0, 0.0), early + math.pi)
    assert c.value == pytest.approx(a.value[: len(early)], rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.5, 2.0), st.floats(1.0, 5.0), st.floats(-0.6, 0.6), st.floats(0, 0.2),
       st.floats(0.3, 3.0), st.floats(-1.0, 1.0), st.floats(-3, 3), st.floats(-3, 3))
def test_ermakov_lower_bound(w, tau, d, g, r0, dr0, q0, dq0):
    p = square_wave(w, tau, d, gamma=(g, 0.0), n_periods=5)
    ts = np.linspace(0, p.t_end, 101)
    q = propagate_linear(p, OscState(q0, dq0), ts, kind="linear-q")
    rho = propagate_ermakov(p, OscState(r0, dr0), ts)
    inv = lr_invariant_series(q, rho)
    if inv[0] < 1e-8:
        return
    assert np.all(rho.value > 0)
    assert np.all(rho.value >= np.abs(q.value) / np.sqrt(2 * inv[0]) * (1 - 1e-9))


def test_lr_invariant_conserved_out_of_band():
    p = square_wave(1.0, 2.0, 0.3, gamma=(0.05, 0.0), n_periods=100)
    ts = np.linspace(0, p.t_end, 1001)
    q = propagate_linear(p, OscState(0.4, -0.2), ts, kind="linear-q")
    rho = propagate_ermakov(p, OscState(1.3, 0.1), ts)
    inv = lr_invariant_series(q, rho)
    assert np.max(np.abs(inv / inv[0] - 1)) < 1e-9


# ---------------------------------------------------------------- Floquet

def test_monodromy_free_and_damped():
    free = monodromy(constant_profile(1.0, 2.5))
    assert np.abs(free.multipliers) == pytest.approx([1.0, 1.0], abs=1e-12)
    assert free.growth_exponent == 0.0
    for g in (0.05, 0.3, 1.9):
        r = monodromy(constant_profile(1.0, 2.5, gamma=g))
        assert r.growth_exponent == pytest.approx(-g / 2, rel=1e-14)
        assert np.linalg.det(r.matrix) == pytest.approx(math.exp(-g * 2.5), rel=1e-9)
        assert np.abs(r.multipliers) == pytest.approx([math.exp(-g * 1.25)] * 2, rel=1e-12)
    # overdamped: real multipliers, the slower mode decays more slowly than g/2
    r = monodromy(constant_profile(1.0, 2.5, gamma=2.5))
    assert r.growth_exponent == pytest.approx(-1.25 + math.sqrt(1.25**2 - 1), rel=1e-12)


def test_principal_band_near_pi():
    inside = monodromy(square_wave(1.0, math.pi, 0.3))
    outside = monodromy(square_wave(1.0, 2.0, 0.3))
    assert inside.max_modulus > 1 and inside.in_band
    assert outside.max_modulus == pytest.approx(1.0, abs=1e-12) and not outside.in_band


@settings(max_examples=40)
@given(st.floats(0.5, 3.0), st.floats(0.5, 8.0), st.floats(-0.8, 0.8), st.floats(0, 0.5), st.floats(0, 0.5))
def test_monodromy_invariants(w, tau, d, g1, g2):
    p = square_wave(w, tau, d, gamma=(g1, g2))
    r = monodromy(p)
    assert np.linalg.det(r.matrix) == pytest.approx(math.exp(-p.period_exposure), rel=1e-9)
    assert r.growth_exponent == pytest.approx(math.log(r.max_modulus) / tau, rel=1e-9, abs=1e-12)


def test_scan_without_modulation_has_no_band():
    scan = scan_bands(constant_profile(1.0, 1.0), (0.5, 20.0), 400)
    assert not np.any(scan.in_band)
    assert scan.edges == ()


def test_scan_square_wave_bands():
    scan = scan_bands(square_wave(1.0, 1.0, 0.3), (0.5, 20.0), 2000)
    bands = scan.bands
    assert len(bands) >= 3
    for lo, hi in bands:
        mid = scan.growth[(scan.omega0_tau > lo) & (scan.omega0_tau < hi)]
        assert np.all(mid > 0)
    # bands sit near multiples of pi for half-period square modulation
    centres = [0.5 * (lo + hi) for lo, hi in bands]
    assert centres[0] == pytest.approx(math.pi, abs=0.3)


def test_envelope_growth_matches_monodromy():
    p = square_wave(1.0, 3.0, 0.3, gamma=(0.02, 0.0), n_periods=50)
    rate = monodromy(p).growth_exponent
    ts = np.linspace(0, p.t_end, 50 * 200 + 1)
    a = propagate_linear(p, OscState(1e-6, 0.0), ts)
    fit = envelope_growth_rate(ts, np.abs(a.value), p.tau, skip_periods=10)
    assert fit == pytest.approx(rate, rel=1e-2)
