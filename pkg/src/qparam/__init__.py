"""Quantum parametric resonance of a damped oscillator.

Classical auxiliary dynamics (centre ``alpha`` and width ``rho``), Floquet
band analysis, and the energy-number distributions of the displaced and
squeezed resonance regimes.
"""

from .classical import (
    MonodromyResult,
    OscState,
    Trajectory,
    classical_energy,
    hamiltonian_energy,
    lr_invariant,
    monodromy,
    propagate_ermakov,
    propagate_linear,
    scan_bands,
)
from .model import DriveProfile, Segment, TimePoint, beta_at, frequencies_at, square_wave
from .spectra import (
    EnergyDistribution,
    GammaValue,
    asymptotic_moments,
    build_distribution,
    energy_stddev,
    gamma_displaced,
    gamma_squeezed,
    mean_energy,
    overlap_oracle,
    prob_displaced,
    prob_squeezed,
)

__version__ = "0.1.0"
