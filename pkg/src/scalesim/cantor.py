"""Generalized Cantor constructions and the singular measures carried by them.

A generalized Cantor set is built from a finite base interval by repeatedly
removing, at generation n, the open middle piece of length ``l_n`` from each
of the 2^(n-1) intervals surviving generation n-1.  When the removed lengths
sum to less than the base length the limit set is compact, nowhere dense and
of positive Lebesgue measure (a "fat" Cantor set).

All constructions here are truncated at a finite ``depth``; the surviving
depth-D intervals are carried explicitly, so gap endpoints and per-interval
masses are exact while quantities interior to a surviving interval are
interpolated at the documented 2^-depth resolution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .intervals import Interval


class CantorSpecError(ValueError):
    """Raised for removal sequences that do not fit their base interval."""


@dataclass(frozen=True)
class GeneralizedCantorSpec:
    """Recipe for a generalized Cantor set.

    Parameters
    ----------
    base : Interval
        Finite interval the construction lives on.
    removal_fractions : tuple of float
        Absolute length ``l_n`` removed from the middle of each surviving
        interval at generation n (so generation n removes ``2**(n-1)`` open
        intervals of that length).  Must hold at least ``depth`` entries.
    depth : int
        Construction truncation; generations beyond ``depth`` are dropped.
    """

    base: Interval
    removal_fractions: tuple
    depth: int

    def __post_init__(self):
        if not self.base.is_finite:
            raise CantorSpecError("base interval must be finite")
        if self.depth < 1:
            raise CantorSpecError("depth must be a positive integer")
        if len(self.removal_fractions) < self.depth:
            raise CantorSpecError(
                f"need {self.depth} removal lengths, got {len(self.removal_fractions)}"
            )
        width = self.base.length
        for n, ell in enumerate(self.removal_fractions[: self.depth], start=1):
            if ell <= 0.0:
                raise CantorSpecError(f"removed length at generation {n} must be > 0")
            if ell >= width:
                raise CantorSpecError(
                    f"generation {n} removes {ell}, which does not fit strictly "
                    f"inside surviving intervals of length {width}"
                )
            width = 0.5 * (width - ell)

    @property
    def segment_width(self) -> float:
        """Common width of the surviving depth-D intervals."""
        width = self.base.length
        for ell in self.removal_fractions[: self.depth]:
            width = 0.5 * (width - ell)
        return width

    @property
    def surviving_length(self) -> float:
        """Lebesgue measure of the depth-D surviving set."""
        return self.segment_width * 2.0**self.depth

    @property
    def removed_per_generation(self) -> np.ndarray:
        """Total length removed at each generation, ``2**(n-1) * l_n``."""
        ell = np.asarray(self.removal_fractions[: self.depth], dtype=float)
        return ell * 2.0 ** np.arange(self.depth)

    def ideal_surviving_length(self) -> Optional[float]:
        """Extrapolated Lebesgue measure of the infinite-depth set.

        The removed-per-generation totals of the classical constructions are
        geometric; the tail beyond ``depth`` is estimated from the last ratio.
        Returns None when the sequence is too short or not contracting.
        """
        a = self.removed_per_generation
        if len(a) < 2:
            return None
        q = a[-1] / a[-2]
        if not (0.0 < q < 1.0):
            return None
        tail = a[-1] * q / (1.0 - q)
        return float(self.surviving_length - tail)


def build_segments(spec: GeneralizedCantorSpec) -> np.ndarray:
    """Surviving closed intervals at ``spec.depth``, shape (2^depth, 2)."""
    segs = np.array([[spec.base.lo, spec.base.hi]], dtype=float)
    for ell in spec.removal_fractions[: spec.depth]:
        lo, hi = segs[:, 0], segs[:, 1]
        child = 0.5 * ((hi - lo) - ell)
        left = np.stack([lo, lo + child], axis=1)
        right = np.stack([hi - child, hi], axis=1)
        segs = np.empty((2 * len(segs), 2))
        segs[0::2] = left
        segs[1::2] = right
    return segs


def fat_cantor_spec(depth: int, ratio: float = 4.0, base: Interval = Interval(0.0, 1.0)) -> GeneralizedCantorSpec:
    """Removal lengths ``length(base) * ratio**-n``; ratio 4 leaves measure 1/2."""
    if ratio <= 2.0:
        raise CantorSpecError("ratio must exceed 2 for the removals to fit")
    ells = tuple(base.length * ratio ** -(n + 1) for n in range(depth))
    return GeneralizedCantorSpec(base=base, removal_fractions=ells, depth=depth)


def middle_thirds_spec(depth: int, base: Interval = Interval(0.0, 1.0)) -> GeneralizedCantorSpec:
    """Classical middle-thirds removals; the surviving measure tends to 0."""
    ells = []
    width = base.length
    for _ in range(depth):
        ell = width / 3.0
        ells.append(ell)
        width = 0.5 * (width - ell)
    return GeneralizedCantorSpec(base=base, removal_fractions=tuple(ells), depth=depth)


# An inner CDF maps (segment indices, points) to the fraction of that
# segment's mass lying to the left of each point, in [0, 1].
InnerCdf = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SingularMeasure:
    """Atomless measure supported on the surviving intervals of a Cantor construction.

    The measure is stored as an iterated splitting rule evaluated at finite
    depth: explicit support ``segments`` with exact per-segment ``masses``,
    plus an optional ``inner_cdf`` describing how mass accrues inside one
    segment (linear interpolation when absent).  The CDF is exact at every
    gap endpoint; interior values carry the documented 2^-depth tolerance.
    """

    segments: np.ndarray  # (N, 2) disjoint, increasing support intervals
    masses: np.ndarray  # (N,) positive masses
    depth: int
    ideal_total: float  # extrapolated infinite-depth total, for hypothesis checks
    inner_cdf: Optional[InnerCdf] = None
    _cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        segs = np.asarray(self.segments, dtype=float)
        masses = np.asarray(self.masses, dtype=float)
        if segs.ndim != 2 or segs.shape[1] != 2 or len(segs) != len(masses):
            raise ValueError("segments must be (N, 2) with matching masses")
        if np.any(masses <= 0.0):
            raise ValueError("segment masses must be positive")
        if np.any(segs[:, 1] <= segs[:, 0]) or np.any(segs[1:, 0] < segs[:-1, 1]):
            raise ValueError("segments must be disjoint and increasing")
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "masses", masses)
        cum = np.concatenate([[0.0], np.cumsum(masses)])
        object.__setattr__(self, "_cum", cum)

    @property
    def total_mass(self) -> float:
        return float(self._cum[-1])

    @property
    def support_lo(self) -> float:
        return float(self.segments[0, 0])

    @property
    def support_hi(self) -> float:
        return float(self.segments[-1, 1])

    def cdf(self, x) -> np.ndarray:
        """Mass of (-inf, x]; continuous, nondecreasing, flat across gaps."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xv = np.atleast_1d(x)
        # index of the last segment starting at or before x (-1: before all)
        idx = np.searchsorted(self.segments[:, 0], xv, side="right") - 1
        out = np.where(idx >= 0, self._cum[np.clip(idx, 0, None)], 0.0)
        inside = (idx >= 0) & (xv < self.segments[np.clip(idx, 0, None), 1])
        if np.any(inside):
            ii = idx[inside]
            pts = xv[inside]
            if self.inner_cdf is None:
                lo = self.segments[ii, 0]
                hi = self.segments[ii, 1]
                frac = (pts - lo) / (hi - lo)
            else:
                frac = np.clip(self.inner_cdf(ii, pts), 0.0, 1.0)
            out[inside] = self._cum[ii] + self.masses[ii] * frac
        past = (idx >= 0) & ~inside
        out[past] = self._cum[idx[past] + 1]
        return float(out[0]) if scalar else out

    def mass(self, a: float, b: float) -> float:
        """Mass of the interval (a, b]."""
        if b < a:
            raise ValueError("need a <= b")
        return float(self.cdf(b) - self.cdf(a))

    def restrict(self, lo: float, hi: float) -> Optional["SingularMeasure"]:
        """Restriction to [lo, hi]; None when no mass survives."""
        if hi <= lo:
            return None
        keep = (self.segments[:, 1] > lo) & (self.segments[:, 0] < hi)
        if not np.any(keep):
            return None
        segs = self.segments[keep].copy()
        segs[:, 0] = np.maximum(segs[:, 0], lo)
        segs[:, 1] = np.minimum(segs[:, 1], hi)
        left = self.cdf(segs[:, 0])
        right = self.cdf(segs[:, 1])
        masses = right - left
        good = masses > 0.0
        segs, masses, left = segs[good], masses[good], left[good]
        if len(segs) == 0:
            return None
        parent = self

        def _inner(ii, pts):
            return (parent.cdf(pts) - left[ii]) / masses[ii]

        return SingularMeasure(
            segments=segs,
            masses=masses,
            depth=self.depth,
            ideal_total=self.ideal_total * float(masses.sum()) / self.total_mass,
            inner_cdf=_inner,
        )

    def window_for_mass(self, c: float, center: float) -> float:
        """Half-width w with mass([center-w, center+w]) = c, by bisection."""
        total = self.total_mass
        if not 0.0 <= c <= total * (1.0 + 1e-12):
            raise ValueError(f"target mass {c} outside [0, {total}]")
        if c <= 0.0:
            return 0.0
        w_hi = max(abs(self.support_hi - center), abs(center - self.support_lo))
        if c >= total:
            return w_hi
        w_lo = 0.0
        # mass(center-w, center+w) is continuous and nondecreasing in w
        for _ in range(200):
            w = 0.5 * (w_lo + w_hi)
            if self.mass(center - w, center + w) < c:
                w_lo = w
            else:
                w_hi = w
            if w_hi - w_lo <= 1e-15 * (1.0 + w_hi):
                break
        return 0.5 * (w_lo + w_hi)

    def describe(self) -> dict:
        return {
            "kind": "cantor-singular",
            "depth": self.depth,
            "pieces": len(self.segments),
            "support_lo": self.support_lo,
            "support_hi": self.support_hi,
            "total_mass": self.total_mass,
            "ideal_total_mass": self.ideal_total,
        }
