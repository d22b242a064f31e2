"""Single-particle GRW dynamics on a periodic 1D grid.

The wavefunction is stored as log-magnitude and phase per grid point so the
Gaussian jump factor can push a bump many hundreds of e-folds down without it
becoming an exact zero.

Conventions: the jump factor is ``j(u) = (pi sigma^2)^(-1/4) exp(-u^2 / (2 sigma^2))``,
so ``|j|^2`` integrates to one; "a Gaussian of width s" for a wavefunction
means ``psi ∝ exp(-(x-c)^2 / (2 s^2))`` in the same sense. Distances are
taken with the periodic minimum-image convention.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf, logsumexp

from .amplitude import wrap_phase_array
from .dynamics import GrwParams
from .errors import DegenerateStateError, ShapeError

HBAR_CGS = 1.0545718e-27  # erg s
MIN_POINTS = 8


@dataclass(frozen=True, eq=False)
class LatticeWavefunction:
    log_amp: np.ndarray
    phase: np.ndarray
    dx: float
    origin: float = 0.0

    def __post_init__(self):
        lm = np.array(self.log_amp, dtype=float)
        ph = np.array(self.phase, dtype=float)
        if lm.ndim != 1 or lm.shape != ph.shape:
            raise ShapeError("log_amp and phase must be matching 1D arrays")
        if lm.size < MIN_POINTS:
            raise ShapeError(f"grid needs at least {MIN_POINTS} points")
        if not self.dx > 0:
            raise ShapeError("dx must be positive")
        ph = np.where(np.isfinite(lm), wrap_phase_array(ph), 0.0)
        lm.flags.writeable = False
        ph.flags.writeable = False
        object.__setattr__(self, "log_amp", lm)
        object.__setattr__(self, "phase", ph)

    # construction -------------------------------------------------------
    @classmethod
    def from_complex(cls, psi, dx: float, origin: float = 0.0, normalize: bool = True):
        psi = np.asarray(psi, dtype=complex)
        with np.errstate(divide="ignore"):
            lm = np.log(np.abs(psi))
        wf = cls(lm, np.angle(psi), dx, origin)
        return wf.normalized() if normalize else wf

    @classmethod
    def gaussian(cls, n: int, dx: float, center: float, width: float, origin: float = 0.0, k0: float = 0.0):
        x = origin + dx * np.arange(n)
        d = _periodic_delta(x - center, n * dx)
        lm = -(d**2) / (2.0 * width**2)
        return cls(lm, k0 * d, dx, origin).normalized()

    @classmethod
    def two_bump(cls, n, dx, centers, width, weights=(0.5, 0.5), origin=0.0):
        """Superposition of Gaussians with the given squared-mass weights."""
        x = origin + dx * np.arange(n)
        parts = []
        for c, w in zip(centers, weights):
            d = _periodic_delta(x - c, n * dx)
            g = -(d**2) / (2.0 * width**2)
            g = g - 0.5 * (logsumexp(2.0 * g) + math.log(dx))
            parts.append(g + 0.5 * math.log(w))
        lm = np.logaddexp.reduce(np.vstack(parts), axis=0)
        return cls(lm, np.zeros(n), dx, origin).normalized()

    @classmethod
    def from_bin_masses(cls, masses, points_per_bin: int, dx: float = 1.0, origin: float = 0.0):
        """Piecewise-uniform |psi|^2 with the given mass in each bin."""
        dens = np.repeat(np.asarray(masses, dtype=float) / (points_per_bin * dx), points_per_bin)
        with np.errstate(divide="ignore"):
            lm = 0.5 * np.log(dens)
        return cls(lm, np.zeros_like(lm), dx, origin).normalized()

    # inspection ---------------------------------------------------------
    @property
    def n(self) -> int:
        return self.log_amp.size

    @property
    def x(self) -> np.ndarray:
        return self.origin + self.dx * np.arange(self.n)

    @property
    def length(self) -> float:
        return self.n * self.dx

    def log_norm(self) -> float:
        return float(logsumexp(2.0 * self.log_amp)) + math.log(self.dx)

    def norm(self) -> float:
        return math.exp(self.log_norm())

    def normalized(self) -> "LatticeWavefunction":
        ln = self.log_norm()
        if not np.isfinite(ln):
            raise DegenerateStateError("wavefunction has zero norm")
        return LatticeWavefunction(self.log_amp - 0.5 * ln, self.phase, self.dx, self.origin)

    def to_complex(self) -> np.ndarray:
        return np.exp(self.log_amp) * np.exp(1j * self.phase)

    def density(self) -> np.ndarray:
        return np.exp(2.0 * self.log_amp)

    def mean_position(self) -> float:
        return float(np.sum(self.x * self.density()) * self.dx)

    def position_std(self) -> float:
        d = self.density() * self.dx
        mu = np.sum(self.x * d)
        return float(np.sqrt(np.sum((self.x - mu) ** 2 * d)))

    def momentum_variance(self, hbar: float = 1.0) -> float:
        psi = self.to_complex()
        phi = np.fft.fft(psi)
        k = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)
        w = np.abs(phi) ** 2
        w /= w.sum()
        mk = np.sum(k * w)
        return float(hbar**2 * np.sum((k - mk) ** 2 * w))

    def shifted(self, cells: int) -> "LatticeWavefunction":
        return LatticeWavefunction(
            np.roll(self.log_amp, cells), np.roll(self.phase, cells), self.dx, self.origin
        )

    def to_csv(self) -> str:
        """Columns x, re, im, density."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "re", "im", "density"])
        psi = self.to_complex()
        for xi, z, d in zip(self.x, psi, self.density()):
            w.writerow([repr(float(xi)), repr(float(z.real)), repr(float(z.imag)), repr(float(d))])
        return buf.getvalue()


def _periodic_delta(d: np.ndarray, length: float) -> np.ndarray:
    return d - length * np.round(d / length)


def log_jump_factor(u: np.ndarray, sigma: float) -> np.ndarray:
    """log j(u) for the squared-normalized Gaussian jump factor."""
    return -0.25 * math.log(math.pi * sigma**2) - u**2 / (2.0 * sigma**2)


def _require_inside(psi: LatticeWavefunction, x: float):
    lo, hi = psi.origin - 0.5 * psi.dx, psi.origin + psi.length - 0.5 * psi.dx
    if not lo <= x <= hi:
        raise ShapeError(f"hit center {x} outside grid [{lo}, {hi}]")


def apply_lattice_hit(psi: LatticeWavefunction, center: float, params: GrwParams) -> LatticeWavefunction:
    """psi'(x) = j(center - x) psi(x) / sqrt(int |j psi|^2)."""
    _require_inside(psi, center)
    u = _periodic_delta(psi.x - center, psi.length)
    lm = psi.log_amp + log_jump_factor(u, params.sigma)
    log_r = float(logsumexp(2.0 * lm)) + math.log(psi.dx)
    if not np.isfinite(log_r):
        raise DegenerateStateError(f"hit at {center} annihilates the wavefunction")
    return LatticeWavefunction(lm - 0.5 * log_r, psi.phase, psi.dx, psi.origin)


def _cell_kernel(n: int, dx: float, sigma: float) -> np.ndarray:
    """Cell-integrated |j|^2 at periodic offsets k*dx, summing to one."""
    k = np.arange(n)
    off = _periodic_delta(k * dx, n * dx)
    s = sigma / math.sqrt(2.0)  # std of |j|^2
    hi = (off + 0.5 * dx) / (s * math.sqrt(2.0))
    lo = (off - 0.5 * dx) / (s * math.sqrt(2.0))
    w = 0.5 * (erf(hi) - erf(lo))
    return w


def hit_center_density(psi: LatticeWavefunction, params: GrwParams) -> np.ndarray:
    """Probability density of the hit center on the grid points.

    density(x) = sum_r |j(x - r)|^2 |psi(r)|^2 dr, with |j|^2 integrated
    over each cell so the narrow-kernel limit reduces to |psi|^2.
    """
    w = _cell_kernel(psi.n, psi.dx, params.sigma)
    rho = psi.density() * psi.dx
    dens = np.real(np.fft.ifft(np.fft.fft(rho) * np.fft.fft(w))) / psi.dx
    return np.clip(dens, 0.0, None)


def sample_hit_center(psi: LatticeWavefunction, rng: np.random.Generator, params: GrwParams, size=None):
    """Inverse-CDF draw: pick a cell by its mass, then a uniform point in it.

    Returns a float, or an array of ``size`` independent centers for the
    same (unchanged) wavefunction.
    """
    dens = hit_center_density(psi, params)
    cdf = np.cumsum(dens)
    cdf /= cdf[-1]
    lo, hi = psi.origin - 0.5 * psi.dx, psi.origin + psi.length - 0.5 * psi.dx
    if size is None:
        u = rng.random()
        i = min(int(np.searchsorted(cdf, u, side="right")), psi.n - 1)
        x = psi.origin + psi.dx * (i - 0.5 + rng.random())
        return float(min(max(x, lo), hi))
    u = rng.random(size)
    i = np.minimum(np.searchsorted(cdf, u, side="right"), psi.n - 1)
    x = psi.origin + psi.dx * (i - 0.5 + rng.random(size))
    return np.clip(x, lo, hi)


def hit_center_cdf(psi: LatticeWavefunction, params: GrwParams):
    """Continuous CDF of :func:`sample_hit_center` (piecewise linear)."""
    dens = hit_center_density(psi, params)
    p = dens / dens.sum()
    edges = psi.origin + psi.dx * (np.arange(psi.n + 1) - 0.5)
    cum = np.concatenate([[0.0], np.cumsum(p)])

    def cdf(x):
        return np.interp(x, edges, cum)

    return cdf


def free_evolve(psi: LatticeWavefunction, dt: float, mass: float, hbar: float = 1.0) -> LatticeWavefunction:
    """Exact free propagation on the periodic grid via FFT."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if dt == 0:
        return psi
    m = float(psi.log_amp.max())
    z = np.exp(psi.log_amp - m) * np.exp(1j * psi.phase)
    k = 2.0 * np.pi * np.fft.fftfreq(psi.n, d=psi.dx)
    z = np.fft.ifft(np.fft.fft(z) * np.exp(-1j * hbar * k**2 * dt / (2.0 * mass)))
    with np.errstate(divide="ignore"):
        lm = np.log(np.abs(z)) + m
    return LatticeWavefunction(lm, np.angle(z), psi.dx, psi.origin)


def region_mass(psi: LatticeWavefunction, interval) -> float:
    """Mass on grid points x with lo <= x < hi."""
    lo, hi = interval
    x = psi.x
    mask = (x >= lo) & (x < hi)
    if not mask.any():
        return 0.0
    return float(np.exp(logsumexp(2.0 * psi.log_amp[mask]) + math.log(psi.dx)))


def free_gaussian_width(width0: float, t: float, mass: float, hbar: float = 1.0) -> float:
    """Closed-form density standard deviation of a freely spreading Gaussian.

    ``width0`` is the initial density standard deviation.
    """
    return width0 * math.sqrt(1.0 + (hbar * t / (2.0 * mass * width0**2)) ** 2)
