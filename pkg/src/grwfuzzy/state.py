"""Marble and pointer states: factorized products, sparse superpositions.

A :class:`SparseState` holds its terms column-wise: an integer code matrix
(one row per configuration, one column per subsystem) plus log-magnitude and
phase vectors. Zero-amplitude terms are never stored, and rows are kept in
lexicographic code order so serialization is canonical.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .amplitude import NEG_INF, Amplitude, wrap_phase_array
from .errors import CapacityError, DegenerateStateError, ShapeError

DEFAULT_DENSE_LIMIT = 20
MARBLE_ALPHABET = ("in", "out")
NORM_TOL = 1e-12


def marble_name(i: int) -> str:
    return f"m{i}"


def apparatus_name(i: int) -> str:
    return f"M{i}"


@dataclass(frozen=True)
class Subsystem:
    """A named subsystem with a finite, ordered alphabet of basis labels.

    ``particles`` is the number of hittable particles carried by the
    subsystem; it sets the subsystem's share of the aggregate hit rate.
    """

    name: str
    alphabet: tuple[str, ...] = MARBLE_ALPHABET
    particles: float = 0.0

    def __post_init__(self):
        if len(set(self.alphabet)) != len(self.alphabet) or not self.alphabet:
            raise ShapeError(f"alphabet of {self.name!r} must be non-empty and distinct")

    def code(self, label: str) -> int:
        try:
            return self.alphabet.index(label)
        except ValueError:
            raise ShapeError(f"label {label!r} not in alphabet of {self.name!r}") from None


class BasisLabel(NamedTuple):
    subsystem_id: int
    label: str


@dataclass(frozen=True)
class TwoRegionMarble:
    amp_in: Amplitude
    amp_out: Amplitude
    marble_id: int = 1

    def __post_init__(self):
        err = abs(self.log_norm())
        if err > NORM_TOL:
            raise DegenerateStateError(
                f"marble {self.marble_id} factor not normalized (log-mass {err:.3e})"
            )

    @classmethod
    def from_masses(cls, a_sq: float, marble_id: int = 1, phase_in=0.0, phase_out=0.0):
        """Factor with |amp_in|^2 = a_sq (real-positive amplitudes by default)."""
        if not 0.0 <= a_sq <= 1.0:
            raise ValueError("a_sq must lie in [0, 1]")
        return cls(
            Amplitude.from_polar(math.sqrt(a_sq), phase_in),
            Amplitude.from_polar(math.sqrt(1.0 - a_sq), phase_out),
            marble_id,
        )

    @classmethod
    def from_amplitudes(cls, amp_in: Amplitude, amp_out: Amplitude, marble_id: int = 1):
        """Normalize an arbitrary nonzero pair."""
        half = 0.5 * _lse2(amp_in.log_abs2, amp_out.log_abs2)
        if half == NEG_INF:
            raise DegenerateStateError("both amplitudes are zero")
        return cls(amp_in.scale_log(-half), amp_out.scale_log(-half), marble_id)

    def log_norm(self) -> float:
        return _lse2(self.amp_in.log_abs2, self.amp_out.log_abs2)

    @property
    def mass_in(self) -> float:
        return self.amp_in.abs2()

    @property
    def mass_out(self) -> float:
        return self.amp_out.abs2()

    def log_mass(self, label: str) -> float:
        if label == "in":
            return self.amp_in.log_abs2
        if label == "out":
            return self.amp_out.log_abs2
        raise ShapeError(f"marble label must be 'in' or 'out', got {label!r}")

    def amplitude(self, label: str) -> Amplitude:
        return self.amp_in if label == "in" else self.amp_out

    def dominant(self) -> str:
        return "in" if self.amp_in.log_magnitude >= self.amp_out.log_magnitude else "out"


def _lse2(x: float, y: float) -> float:
    m = max(x, y)
    if m == NEG_INF:
        return NEG_INF
    return m + math.log(math.exp(x - m) + math.exp(y - m))


@dataclass(frozen=True)
class ProductState:
    marbles: tuple[TwoRegionMarble, ...]

    def __post_init__(self):
        object.__setattr__(self, "marbles", tuple(self.marbles))
        ids = [m.marble_id for m in self.marbles]
        if len(set(ids)) != len(ids):
            raise ShapeError("duplicate marble ids")

    @classmethod
    def uniform(cls, n: int, a_sq: float) -> "ProductState":
        """n marbles, each with |amp_in|^2 = a_sq, ids 1..n."""
        return cls(tuple(TwoRegionMarble.from_masses(a_sq, i) for i in range(1, n + 1)))

    def __len__(self):
        return len(self.marbles)

    def index_of(self, marble_id: int) -> int:
        for k, m in enumerate(self.marbles):
            if m.marble_id == marble_id:
                return k
        raise ShapeError(f"unknown marble {marble_id}")

    def marble(self, marble_id: int) -> TwoRegionMarble:
        return self.marbles[self.index_of(marble_id)]

    def replace(self, index: int, factor: TwoRegionMarble) -> "ProductState":
        ms = list(self.marbles)
        ms[index] = factor
        return ProductState(tuple(ms))

    def log_joint_mass(self, assignment: Mapping[int, str]) -> float:
        """log of the product of per-marble masses for the assigned labels."""
        return math.fsum(self.marble(mid).log_mass(lab) for mid, lab in assignment.items())


class SparseState:
    """Sparse map from configurations to amplitudes over an ordered roster.

    The constructor accepts unnormalized terms (so :func:`normalize` has
    something to act on); use :meth:`check_normalized` where the unit-mass
    invariant is required.
    """

    __slots__ = ("roster", "codes", "logm", "phase", "_names")

    def __init__(self, roster, codes, logm, phase, *, canonical: bool = False):
        self.roster: tuple[Subsystem, ...] = tuple(roster)
        codes = np.asarray(codes, dtype=np.int32).reshape(-1, len(self.roster))
        logm = np.asarray(logm, dtype=np.float64).ravel()
        phase = np.asarray(phase, dtype=np.float64).ravel()
        if not (codes.shape[0] == logm.shape[0] == phase.shape[0]):
            raise ShapeError("codes, log-magnitudes and phases differ in length")
        if not canonical:
            keep = np.isfinite(logm)
            if np.any(np.isnan(logm)) or np.any(logm == np.inf):
                raise ValueError("log-magnitudes must be finite or -inf")
            codes, logm, phase = codes[keep], logm[keep], phase[keep]
            for j, sub in enumerate(self.roster):
                if codes.size and (codes[:, j].min() < 0 or codes[:, j].max() >= len(sub.alphabet)):
                    raise ShapeError(f"label code out of range for {sub.name!r}")
            if codes.shape[0] > 1:
                order = np.lexsort(codes.T[::-1])
                codes, logm, phase = codes[order], logm[order], phase[order]
                dup = np.all(codes[1:] == codes[:-1], axis=1)
                if dup.any():
                    raise ShapeError("duplicate configuration in sparse state")
            phase = wrap_phase_array(phase)
        self.codes = np.ascontiguousarray(codes)
        self.logm = np.ascontiguousarray(logm)
        self.phase = np.ascontiguousarray(phase)
        self._names = {s.name: j for j, s in enumerate(self.roster)}
        if len(self._names) != len(self.roster):
            raise ShapeError("duplicate subsystem names in roster")
        for arr in (self.codes, self.logm, self.phase):
            arr.flags.writeable = False

    # construction -------------------------------------------------------
    @classmethod
    def from_terms(cls, roster: Iterable[Subsystem], terms: Mapping) -> "SparseState":
        """Build from ``{configuration: amplitude}``.

        A configuration is a tuple of labels in roster order; amplitudes may
        be :class:`Amplitude` or plain complex numbers.
        """
        roster = tuple(roster)
        rows, lms, phs = [], [], []
        for config, amp in terms.items():
            if len(config) != len(roster):
                raise ShapeError(f"configuration {config!r} does not match roster")
            if not isinstance(amp, Amplitude):
                amp = Amplitude.from_complex(amp)
            rows.append([s.code(lab) for s, lab in zip(roster, config)])
            lms.append(amp.log_magnitude)
            phs.append(amp.phase)
        return cls(roster, np.array(rows, dtype=np.int32).reshape(-1, len(roster)), lms, phs)

    def _replace(self, logm=None, phase=None) -> "SparseState":
        return SparseState(
            self.roster,
            self.codes,
            self.logm if logm is None else logm,
            self.phase if phase is None else phase,
            canonical=True,
        )

    # inspection ---------------------------------------------------------
    def __len__(self):
        return self.codes.shape[0]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.roster)

    def index_of(self, subsystem) -> int:
        if isinstance(subsystem, (int, np.integer)):
            if not 0 <= subsystem < len(self.roster):
                raise ShapeError(f"subsystem index {subsystem} out of range")
            return int(subsystem)
        try:
            return self._names[subsystem]
        except KeyError:
            raise ShapeError(f"unknown subsystem {subsystem!r}") from None

    def config(self, row: int) -> tuple[str, ...]:
        return tuple(s.alphabet[c] for s, c in zip(self.roster, self.codes[row]))

    def basis_labels(self, row: int) -> tuple[BasisLabel, ...]:
        return tuple(BasisLabel(j, lab) for j, lab in enumerate(self.config(row)))

    @property
    def terms(self) -> dict[tuple[str, ...], Amplitude]:
        return {
            self.config(r): Amplitude(float(self.logm[r]), float(self.phase[r]))
            for r in range(len(self))
        }

    def log_mass(self) -> float:
        return kernels.log_total_mass(self.logm)

    def mass(self) -> float:
        return math.exp(self.log_mass())

    def check_normalized(self, tol: float = 1e-9) -> None:
        if abs(self.mass() - 1.0) > tol:
            raise DegenerateStateError(f"state mass {self.mass()!r} is not 1 within {tol}")

    def label_log_masses(self, subsystem) -> dict[str, float]:
        j = self.index_of(subsystem)
        alphabet = self.roster[j].alphabet
        lm = kernels.grouped_log_mass(self.codes[:, j], self.logm, len(alphabet))
        return {lab: float(v) for lab, v in zip(alphabet, lm)}

    def label_masses(self, subsystem) -> dict[str, float]:
        return {k: math.exp(v) for k, v in self.label_log_masses(subsystem).items()}

    def marginal_log_masses(self, group) -> dict[tuple[str, ...], float]:
        """Log mass of each configuration class restricted to ``group``."""
        cols = [self.index_of(g) for g in group]
        if not cols:
            return {(): self.log_mass()}
        sub = self.codes[:, cols]
        uniq, keys = np.unique(sub, axis=0, return_inverse=True)
        lm = kernels.grouped_log_mass(keys.ravel().astype(np.int32), self.logm, len(uniq))
        out = {}
        for u, v in zip(uniq, lm):
            out[tuple(self.roster[c].alphabet[k] for c, k in zip(cols, u))] = float(v)
        return out

    def dominant_row(self) -> int:
        return int(np.argmax(self.logm))

    # textual form -------------------------------------------------------
    def to_text(self) -> str:
        """One line per term, ``name=label,... | log_mag phase``, in code order."""
        lines = []
        for r in range(len(self)):
            cfg = ",".join(f"{s.name}={lab}" for s, lab in zip(self.roster, self.config(r)))
            lines.append(f"{cfg} | {float(self.logm[r])!r} {float(self.phase[r])!r}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str, roster: Iterable[Subsystem]) -> "SparseState":
        roster = tuple(roster)
        names = [s.name for s in roster]
        terms = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            cfg_part, amp_part = line.split("|")
            pairs = [kv.split("=", 1) for kv in cfg_part.strip().split(",")]
            if [k for k, _ in pairs] != names:
                raise ShapeError(f"line does not follow roster order: {line!r}")
            lm, ph = (float(v) for v in amp_part.split())
            terms[tuple(v for _, v in pairs)] = Amplitude(lm, ph)
        return cls.from_terms(roster, terms)

    def __repr__(self):
        return f"SparseState({len(self)} terms over {list(self.names)})"

    # transformations ----------------------------------------------------
    def with_subsystem(self, subsystem: Subsystem, label: str) -> "SparseState":
        """Tensor on a fresh subsystem prepared in ``label`` (e.g. 'ready')."""
        code = subsystem.code(label)
        codes = np.hstack([self.codes, np.full((len(self), 1), code, dtype=np.int32)])
        return SparseState(self.roster + (subsystem,), codes, self.logm, self.phase, canonical=True)

    def coupled(self, target, record: Callable[[dict[str, str]], str], ready: str = "ready"):
        """Premeasurement: set ``target``'s label in every term to ``record(config)``.

        The target must be in ``ready`` in every term, so the map is an
        isometry on the occupied subspace and no terms merge.
        """
        sub = self.roster[self.index_of(target)]
        labels = [record(dict(zip(self.names, self.config(r)))) for r in range(len(self))]
        return self.recorded(target, np.array([sub.code(lab) for lab in labels], dtype=np.int32), ready)

    def recorded(self, target, new_codes, ready: str = "ready") -> "SparseState":
        """Vectorized :meth:`coupled`: ``new_codes`` holds the target's code per row."""
        j = self.index_of(target)
        sub = self.roster[j]
        if np.any(self.codes[:, j] != sub.code(ready)):
            raise ShapeError(f"{sub.name!r} is not in {ready!r} in every term")
        new_codes = np.asarray(new_codes, dtype=np.int32)
        if new_codes.shape != (len(self),):
            raise ShapeError("one record code per term is required")
        if new_codes.size and (new_codes.min() < 0 or new_codes.max() >= len(sub.alphabet)):
            raise ShapeError(f"record code out of range for {sub.name!r}")
        codes = self.codes.copy()
        codes[:, j] = new_codes
        return SparseState(self.roster, codes, self.logm, self.phase)


# operations ---------------------------------------------------------------


def normalize(state: SparseState) -> SparseState:
    """Rescale to unit squared mass; relative weights are unchanged."""
    lm = state.log_mass()
    if lm == NEG_INF:
        raise DegenerateStateError("cannot normalize an all-zero state")
    return state._replace(logm=state.logm - 0.5 * lm)


def product_roster(state: ProductState) -> tuple[Subsystem, ...]:
    return tuple(Subsystem(marble_name(m.marble_id), MARBLE_ALPHABET) for m in state.marbles)


def expand(
    state: ProductState,
    dense_limit: int = DEFAULT_DENSE_LIMIT,
    roster: Iterable[Subsystem] | None = None,
) -> SparseState:
    """Multiply out the product into its (up to) 2^n configurations."""
    n = len(state)
    if n > dense_limit:
        raise CapacityError(f"{n} marbles exceed the dense limit of {dense_limit}")
    roster = product_roster(state) if roster is None else tuple(roster)
    if len(roster) != n:
        raise ShapeError("roster length differs from marble count")
    codes = np.zeros((1, 0), dtype=np.int32)
    logm = np.zeros(1)
    phase = np.zeros(1)
    for m in state.marbles:
        parts = []
        for code, amp in ((0, m.amp_in), (1, m.amp_out)):
            if amp.is_zero:
                continue
            parts.append(
                (
                    np.hstack([codes, np.full((len(logm), 1), code, dtype=np.int32)]),
                    logm + amp.log_magnitude,
                    phase + amp.phase,
                )
            )
        codes = np.vstack([p[0] for p in parts])
        logm = np.concatenate([p[1] for p in parts])
        phase = np.concatenate([p[2] for p in parts])
    return SparseState(roster, codes, logm, phase)


def _predicate_mask(state: SparseState, predicate) -> np.ndarray:
    if isinstance(predicate, Mapping):
        mask = np.ones(len(state), dtype=bool)
        for name, allowed in predicate.items():
            j = state.index_of(name)
            sub = state.roster[j]
            if isinstance(allowed, str):
                mask &= state.codes[:, j] == sub.code(allowed)
            else:
                mask &= np.isin(state.codes[:, j], [sub.code(a) for a in allowed])
        return mask
    return np.fromiter((bool(predicate(state.config(r))) for r in range(len(state))), bool, len(state))


def log_branch_mass(state: SparseState, predicate) -> float:
    mask = _predicate_mask(state, predicate)
    return kernels.log_total_mass(np.ascontiguousarray(state.logm[mask]))


def branch_mass(state: SparseState, predicate) -> float:
    """Squared mass of the configurations selected by ``predicate``.

    ``predicate`` is either a callable on a configuration tuple or a mapping
    ``{subsystem name: label or labels}`` read as a conjunction.
    """
    return math.exp(log_branch_mass(state, predicate))


def inner_product(x: SparseState, y: SparseState) -> Amplitude:
    """<x|y>, conjugate-linear in ``x``."""
    if [(s.name, s.alphabet) for s in x.roster] != [(s.name, s.alphabet) for s in y.roster]:
        raise ShapeError("inner product needs identical subsystem rosters")
    index = {x.codes[r].tobytes(): r for r in range(len(x))}
    rx, ry = [], []
    for r in range(len(y)):
        k = index.get(y.codes[r].tobytes())
        if k is not None:
            rx.append(k)
            ry.append(r)
    if not rx:
        return Amplitude.zero()
    logs = x.logm[rx] + y.logm[ry]
    phases = y.phase[ry] - x.phase[rx]
    m = float(logs.max())
    z = complex(np.sum(np.exp(logs - m) * np.exp(1j * phases)))
    if z == 0:
        return Amplitude.zero()
    return Amplitude(m + math.log(abs(z)), float(np.angle(z)))


def schmidt_rank_one_check(
    state: SparseState, left_subsystems, dense_limit: int = DEFAULT_DENSE_LIMIT
) -> tuple[bool, float]:
    """Ratio of the second to the first singular value across a bipartition."""
    left = sorted({state.index_of(s) for s in left_subsystems})
    right = [j for j in range(len(state.roster)) if j not in left]
    if not left or not right:
        raise ShapeError("both sides of the bipartition must be non-empty")
    if len(state) > 2**dense_limit:
        raise CapacityError(f"{len(state)} terms exceed the dense limit 2^{dense_limit}")
    if len(state) == 0:
        raise DegenerateStateError("empty state")
    lu, li = np.unique(state.codes[:, left], axis=0, return_inverse=True)
    ru, ri = np.unique(state.codes[:, right], axis=0, return_inverse=True)
    m = float(state.logm.max())
    mat = np.zeros((len(lu), len(ru)), dtype=complex)
    mat[li.ravel(), ri.ravel()] = np.exp(state.logm - m) * np.exp(1j * state.phase)
    s = np.linalg.svd(mat, compute_uv=False)
    deviation = float(s[1] / s[0]) if len(s) > 1 else 0.0
    return deviation < 1e-10, deviation
