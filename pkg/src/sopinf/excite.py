"""Excitation-signal synthesis: linear chirp and mono-frequency harmonics.

A chirp is ``A * cos(phi(t))`` whose instantaneous frequency ramps linearly
from ``f0`` to ``f1`` over ``sweep_time``.  The phase is evaluated in closed
form, ``phi(t) = phi0 + 2*pi*(f0*t + (f1 - f0)*t**2 / (2*sweep_time))``,
rather than by quadrature: exact and cheaper.  Multi-channel inputs carry one
spec per channel; a quarter-period phase shift between two orthogonal
channels produces circular forcing for rotor models.
"""

from dataclasses import dataclass

import math

import numpy as np

from ._validation import as_vector

__all__ = [
    "ChirpSpec",
    "HarmonicSpec",
    "chirp_phase",
    "chirp_frequency",
    "chirp_value",
    "harmonic_value",
    "signal_value",
    "sample_input",
]


@dataclass(frozen=True)
class ChirpSpec:
    """Linear chirp: amplitude, initial phase (rad), start/end frequency (Hz)
    and the sweep duration (s)."""

    amplitude: float
    phi0: float
    f0: float
    f1: float
    sweep_time: float

    def __post_init__(self):
        if not self.sweep_time > 0:
            raise ValueError("sweep_time must be positive")
        if not math.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")


@dataclass(frozen=True)
class HarmonicSpec:
    """Mono-frequency cosine: amplitude, initial phase (rad), frequency (Hz)."""

    amplitude: float
    phi0: float
    frequency: float

    def __post_init__(self):
        if self.frequency < 0:
            raise ValueError("frequency must be non-negative")


def chirp_phase(spec: ChirpSpec, t):
    """Closed-form chirp phase phi(t)."""
    t = np.asarray(t, dtype=np.float64)
    return spec.phi0 + 2.0 * np.pi * (
        spec.f0 * t + (spec.f1 - spec.f0) * t * t / (2.0 * spec.sweep_time)
    )


def chirp_frequency(spec: ChirpSpec, t):
    """Instantaneous frequency (Hz) of the chirp at time t."""
    t = np.asarray(t, dtype=np.float64)
    return (spec.f1 - spec.f0) / spec.sweep_time * t + spec.f0


def chirp_value(spec: ChirpSpec, t):
    """Chirp signal value A * cos(phi(t)); scalar in, scalar out."""
    return spec.amplitude * np.cos(chirp_phase(spec, t))


def harmonic_value(spec: HarmonicSpec, t):
    """Harmonic signal value A * cos(phi0 + 2*pi*f*t)."""
    t = np.asarray(t, dtype=np.float64)
    return spec.amplitude * np.cos(spec.phi0 + 2.0 * np.pi * spec.frequency * t)


def signal_value(spec, t):
    if isinstance(spec, ChirpSpec):
        return chirp_value(spec, t)
    if isinstance(spec, HarmonicSpec):
        return harmonic_value(spec, t)
    raise TypeError(f"unknown signal spec {type(spec).__name__}")


def sample_input(channel_specs, times) -> np.ndarray:
    """Sample every channel on a time grid.

    Parameters
    ----------
    channel_specs : sequence of ChirpSpec or HarmonicSpec
        One spec per input channel.
    times : (N,) array_like

    Returns
    -------
    (m, N) ndarray
        Row ``i`` is channel ``i`` sampled at all times.
    """
    specs = list(channel_specs)
    if not specs:
        raise ValueError("need at least one channel spec")
    times = as_vector(times, "times")
    return np.vstack([signal_value(spec, times) for spec in specs])
