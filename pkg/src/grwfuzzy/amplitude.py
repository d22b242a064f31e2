"""Log-polar complex amplitudes.

Wavefunction tails of macroscopic superpositions sit far below the smallest
positive double, so amplitudes are kept as ``(log|z|, arg z)``. An exact zero
is encoded by ``log_magnitude == -inf``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

NEG_INF = float("-inf")


def wrap_phase(phase: float) -> float:
    """Map an angle into [-pi, pi)."""
    w = math.fmod(phase + math.pi, 2.0 * math.pi)
    if w < 0.0:
        w += 2.0 * math.pi
    w -= math.pi
    # fmod can land exactly on +pi after the shift for inputs like -pi - tiny
    if w >= math.pi:
        w -= 2.0 * math.pi
    return w


def wrap_phase_array(phase: np.ndarray) -> np.ndarray:
    w = np.mod(np.asarray(phase, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    w[w >= np.pi] -= 2.0 * np.pi
    return w


@dataclass(frozen=True, slots=True)
class Amplitude:
    log_magnitude: float
    phase: float = 0.0

    def __post_init__(self):
        lm = float(self.log_magnitude)
        if math.isnan(lm) or lm == math.inf:
            raise ValueError(f"invalid log-magnitude {self.log_magnitude!r}")
        object.__setattr__(self, "log_magnitude", lm)
        ph = 0.0 if lm == NEG_INF else wrap_phase(float(self.phase))
        object.__setattr__(self, "phase", ph)

    @classmethod
    def zero(cls) -> "Amplitude":
        return cls(NEG_INF, 0.0)

    @classmethod
    def one(cls) -> "Amplitude":
        return cls(0.0, 0.0)

    @classmethod
    def from_complex(cls, z: complex) -> "Amplitude":
        z = complex(z)
        if z == 0:
            return cls.zero()
        return cls(math.log(abs(z)), cmath.phase(z))

    @classmethod
    def from_polar(cls, modulus: float, phase: float = 0.0) -> "Amplitude":
        if modulus < 0:
            raise ValueError("modulus must be non-negative")
        return cls(math.log(modulus) if modulus > 0 else NEG_INF, phase)

    @property
    def is_zero(self) -> bool:
        return self.log_magnitude == NEG_INF

    @property
    def log_abs2(self) -> float:
        """Natural log of the squared modulus."""
        return 2.0 * self.log_magnitude

    def abs2(self) -> float:
        return math.exp(2.0 * self.log_magnitude)

    def to_complex(self) -> complex:
        if self.is_zero:
            return 0j
        return cmath.rect(math.exp(self.log_magnitude), self.phase)

    def conjugate(self) -> "Amplitude":
        return Amplitude(self.log_magnitude, -self.phase)

    def scale_log(self, delta: float) -> "Amplitude":
        """Multiply the modulus by ``exp(delta)``."""
        return Amplitude(self.log_magnitude + delta, self.phase)

    def __mul__(self, other: "Amplitude") -> "Amplitude":
        if not isinstance(other, Amplitude):
            return NotImplemented
        if self.is_zero or other.is_zero:
            return Amplitude.zero()
        return Amplitude(self.log_magnitude + other.log_magnitude, self.phase + other.phase)

    def __truediv__(self, other: "Amplitude") -> "Amplitude":
        if not isinstance(other, Amplitude):
            return NotImplemented
        if other.is_zero:
            raise ZeroDivisionError("division by a zero amplitude")
        if self.is_zero:
            return Amplitude.zero()
        return Amplitude(self.log_magnitude - other.log_magnitude, self.phase - other.phase)

    def __add__(self, other: "Amplitude") -> "Amplitude":
        if not isinstance(other, Amplitude):
            return NotImplemented
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        m = max(self.log_magnitude, other.log_magnitude)
        z = cmath.rect(math.exp(self.log_magnitude - m), self.phase) + cmath.rect(
            math.exp(other.log_magnitude - m), other.phase
        )
        if z == 0:
            return Amplitude.zero()
        return Amplitude(m + math.log(abs(z)), cmath.phase(z))

    def __neg__(self) -> "Amplitude":
        return Amplitude(self.log_magnitude, self.phase + math.pi)

    def isclose(self, other: "Amplitude", rel: float = 1e-12) -> bool:
        """Compare as complex numbers, relative to the larger modulus."""
        if self.is_zero and other.is_zero:
            return True
        if self.is_zero or other.is_zero:
            return False
        m = max(self.log_magnitude, other.log_magnitude)
        za = cmath.rect(math.exp(self.log_magnitude - m), self.phase)
        zb = cmath.rect(math.exp(other.log_magnitude - m), other.phase)
        return abs(za - zb) <= rel


def log_sum_abs2(amps) -> float:
    """log of sum |a|^2 over an iterable of Amplitudes, max-shifted."""
    logs = [a.log_abs2 for a in amps if not a.is_zero]
    if not logs:
        return NEG_INF
    m = max(logs)
    return m + math.log(math.fsum(math.exp(v - m) for v in logs))
