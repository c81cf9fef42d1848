"""Scale functions of one-dimensional diffusions, with singular-part support.

A scale function s is strictly increasing and continuous on its state
interval, anchored so s(e) = 0.  Its Stieltjes measure decomposes as
ds = g * lambda + kappa with kappa carried by a Cantor-type set.  Every
concrete class here stores that decomposition explicitly, carries closed
forms for its inverse t = s^-1 and for the derived quantities used
downstream, and tags the regularity class of t' (the object that decides
which hypotheses the associated SDE coefficients satisfy):

``smooth_positive``
    t' continuous and strictly positive (absolutely continuous s).
``lipschitz``
    t' Lipschitz, vanishing exactly on the Cantor set (fat-Cantor scales
    and their subspace family).
``bv_jump``
    t' of bounded variation with a jump (skew transforms).
``not_bv``
    no a.e. version of t' has locally bounded variation (x + Cantor
    function).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .cantor import (
    CantorSpecError,
    GeneralizedCantorSpec,
    SingularMeasure,
    build_segments,
    middle_thirds_spec,
)
from .intervals import Interval, REAL_LINE

__all__ = [
    "ScaleFunction",
    "InverseScale",
    "LebesgueDecomposition",
    "TentScale",
    "AffineScale",
    "SmoothScale",
    "SkewScale",
    "SubspaceScale",
    "identity_scale",
    "build_cantor_scale",
    "build_devils_staircase_scale",
    "build_orey_scale",
    "skew_transform",
    "lebesgue_decompose",
    "abs_cont_part",
    "subspace_scale",
    "invert",
    "InversionDomainError",
    "DecompositionAuditError",
]

# Density assigned inside the surviving intervals of a finite-depth Cantor
# construction; keeps the absolutely continuous part strictly increasing.
_SEGMENT_DENSITY = 1.0


class InversionDomainError(ValueError):
    """Requested inverse value lies outside the scale image J."""


class DecompositionAuditError(RuntimeError):
    """Reconstruction of s from (g, kappa) missed the stored values."""


@dataclass(frozen=True)
class InverseScale:
    """Inverse t = s^-1 on J = s(I), with derivatives where defined."""

    range: Interval
    _eval: Callable
    _deriv: Callable
    _second: Optional[Callable] = None

    def __call__(self, y):
        y_arr = np.asarray(y, dtype=float)
        if np.any(y_arr <= self.range.lo) or np.any(y_arr >= self.range.hi):
            raise InversionDomainError(
                f"value outside the scale image ({self.range.lo}, {self.range.hi})"
            )
        return self._eval(y)

    def derivative(self, y):
        return self._deriv(y)

    def second_derivative(self, y):
        if self._second is None:
            raise NotImplementedError("second derivative not available for this scale")
        return self._second(y)


class ScaleFunction:
    """Base class; subclasses fill in the piecewise machinery."""

    domain: Interval
    anchor: float
    kappa: Optional[SingularMeasure]
    tprime_class: str

    # -- evaluation ---------------------------------------------------------

    def __call__(self, x):
        raise NotImplementedError

    def inverse_value(self, y):
        raise NotImplementedError

    def inverse(self) -> InverseScale:
        return InverseScale(
            range=self.scale_range(),
            _eval=self.inverse_value,
            _deriv=self.inverse_derivative,
            _second=self.inverse_second_derivative,
        )

    def scale_range(self) -> Interval:
        return REAL_LINE

    def inverse_derivative(self, y):
        raise NotImplementedError

    def inverse_second_derivative(self, y):
        raise NotImplementedError

    # -- decomposition ------------------------------------------------------

    def density(self, x):
        """Density g of the absolutely continuous part of ds (a.e.)."""
        raise NotImplementedError

    def kappa_cdf(self, x):
        if self.kappa is None:
            x = np.asarray(x, dtype=float)
            return np.zeros_like(x) if x.ndim else 0.0
        return self.kappa.cdf(x)

    def kappa_signed(self, x):
        """kappa((e, x]) for x >= e and -kappa((x, e]) below the anchor."""
        return self.kappa_cdf(x) - self.kappa_cdf(self.anchor)

    def density_integral(self, a: float, b: float) -> float:
        """Exact integral of g over (a, b); the kappa CDF does the bookkeeping."""
        return float(self(b) - self(a)) - (float(self.kappa_cdf(b)) - float(self.kappa_cdf(a)))

    # -- derived local quantities -------------------------------------------

    def tilde_density(self, x):
        """t' o s, the density of the measure m-tilde (a.e.)."""
        raise NotImplementedError

    def tilde_density_deriv(self, x):
        """d/dx of t' o s (a.e.); equals (t'' o s) * (t' o s) by the chain rule."""
        raise NotImplementedError

    def tilde_moments(self, x1: float, x2: float):
        """(I0, I1) = (int of t' o s dx, int of s * (t' o s) dx) over (x1, x2).

        Equivalently the moments int t'^2 du and int u t'^2 du over the
        scale interval (s(x1), s(x2)); these drive the Green-kernel holding
        times and the local quadrature behind hypothesis (H1).
        """
        raise NotImplementedError

    def s_integral(self, x1: float, x2: float) -> float:
        """Exact integral of s over (x1, x2)."""
        raise NotImplementedError

    def kappa_support_mask(self, x):
        """True where x lies on the (finite-depth) support of kappa."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xv = np.atleast_1d(x)
        if self.kappa is None:
            out = np.zeros(xv.shape, dtype=bool)
            return bool(out[0]) if scalar else out
        segs = self.kappa.segments
        idx = np.searchsorted(segs[:, 0], xv, side="right") - 1
        ok = idx >= 0
        out = np.zeros(xv.shape, dtype=bool)
        out[ok] = xv[ok] <= segs[idx[ok], 1]
        return bool(out[0]) if scalar else out

    # -- metadata -----------------------------------------------------------

    def describe(self) -> dict:
        raise NotImplementedError

    @property
    def kappa_total(self) -> float:
        return 0.0 if self.kappa is None else self.kappa.total_mass

    def _check_probe(self, x, name="probe point"):
        x = np.asarray(x, dtype=float)
        if np.any(x <= self.domain.lo) or np.any(x >= self.domain.hi):
            raise ValueError(f"{name} outside the state interval")
        return x


# ---------------------------------------------------------------------------
# Fat-Cantor scale: t is the integral of the distance to a generalized
# Cantor set, evaluated piecewise; s = t^-1 carries the singular part.
# ---------------------------------------------------------------------------


class TentScale(ScaleFunction):
    """Scale function whose inverse has derivative psi = d(., K).

    The scale image J is partitioned into the gaps and surviving intervals
    of the Cantor construction plus two outer rays.  On every bounded piece
    t' is a tent: the true distance function on gaps (peak = half the gap
    width, slopes +-1), and a flattened tent of peak ``eta`` on surviving
    intervals, which stands in for the unresolved deeper generations and
    keeps t strictly increasing at finite depth.  t is piecewise quadratic
    and both t and s evaluate in closed form.
    """

    tprime_class = "lipschitz"

    def __init__(self, spec: GeneralizedCantorSpec, eta: Optional[float] = None,
                 segment_density: float = _SEGMENT_DENSITY):
        self.spec = spec
        self.domain = REAL_LINE
        self.anchor = 0.0
        self.gamma = float(segment_density)
        segs = build_segments(spec)
        w_seg = spec.segment_width
        self.eta = float(eta) if eta is not None else w_seg / 8.0
        if not 0.0 < self.eta <= w_seg / 2.0:
            raise CantorSpecError("segment regularisation height must lie in (0, w/2]")

        # bounded pieces: seg, gap, seg, ..., seg
        n = len(segs)
        bounds = np.empty(2 * n)
        bounds[0::2] = segs[:, 0]
        bounds[1::2] = segs[:, 1]
        widths = np.diff(bounds)
        is_seg = np.zeros(2 * n - 1, dtype=bool)
        is_seg[0::2] = True
        peaks = np.where(is_seg, self.eta, widths / 2.0)

        # halves: rising then falling on each piece
        ynodes = np.empty(2 * (2 * n - 1) + 1)
        ynodes[0::2] = bounds
        ynodes[1::2] = 0.5 * (bounds[:-1] + bounds[1:])
        a = 2.0 * peaks / widths  # |slope| of psi on the piece
        half_a = np.repeat(a, 2)
        half_rising = np.tile([True, False], 2 * n - 1)
        half_dt = np.repeat(peaks * widths / 4.0, 2)

        t_eps = np.finfo(float).eps * max(1.0, float(bounds[-1] - bounds[0]))
        if np.any(half_dt <= 32.0 * t_eps):
            raise CantorSpecError(
                "depth too large: piece increments of t fall below float64 resolution"
            )

        tnodes = np.concatenate([[0.0], np.cumsum(half_dt)])
        self._ynodes = ynodes
        self._tnodes_raw = tnodes
        self._half_a = half_a
        self._half_rising = half_rising
        self._is_seg = is_seg
        self._bounds = bounds
        self._widths = widths
        self._peaks = peaks

        shift = self._t_raw(np.array([0.0]))[0]
        self._tnodes = tnodes - shift

        # prefix sums over halves of int t'^2, int u t'^2 and int t du
        m0, m1, ti = self._half_full_moments()
        self._cum0 = np.concatenate([[0.0], np.cumsum(m0)])
        self._cum1 = np.concatenate([[0.0], np.cumsum(m1)])
        self._cumt = np.concatenate([[0.0], np.cumsum(ti)])

        self.kappa = self._build_kappa(segs, w_seg)

    # -- construction helpers -----------------------------------------------

    def _build_kappa(self, segs, w_seg) -> SingularMeasure:
        n = len(segs)
        piece_idx = 2 * np.arange(n)  # seg pieces sit at even positions
        lo_state = self._tnodes[2 * piece_idx]
        hi_state = self._tnodes[2 * piece_idx + 2]
        delta = hi_state - lo_state
        masses = w_seg - self.gamma * delta
        ideal = self.spec.ideal_surviving_length()
        if ideal is None:
            ideal = self.spec.surviving_length
        seg_j_lo = segs[:, 0]
        gamma = self.gamma
        s_eval = self.__call__

        def _inner(ii, pts):
            return ((s_eval(pts) - seg_j_lo[ii]) - gamma * (pts - lo_state[ii])) / masses[ii]

        return SingularMeasure(
            segments=np.stack([lo_state, hi_state], axis=1),
            masses=masses,
            depth=self.spec.depth,
            ideal_total=max(ideal, 0.0),
            inner_cdf=_inner,
        )

    def _half_full_moments(self):
        y0 = self._ynodes[:-1]
        y1 = self._ynodes[1:]
        a = self._half_a
        rising = self._half_rising
        zero_end = np.where(rising, y0, y1)
        m0 = self._F0(y1, a, zero_end, rising) - self._F0(y0, a, zero_end, rising)
        m1 = self._F1(y1, a, zero_end, rising) - self._F1(y0, a, zero_end, rising)
        t_at = self._tnodes_raw
        ti = self._FT(y1, a, zero_end, rising, t_at[:-1], t_at[1:]) - self._FT(
            y0, a, zero_end, rising, t_at[:-1], t_at[1:]
        )
        return m0, m1, ti

    # antiderivatives of t'^2, u t'^2 and t on a half with |t'| = a * dist
    @staticmethod
    def _F0(u, a, z, rising):
        d = np.where(rising, u - z, z - u)
        return np.where(rising, 1.0, -1.0) * a**2 * d**3 / 3.0

    @staticmethod
    def _F1(u, a, z, rising):
        # antiderivative of u t'^2; d grows away from the zero end z
        d = np.where(rising, u - z, z - u)
        quart = a**2 * d**4 / 4.0
        cube = a**2 * z * d**3 / 3.0
        return np.where(rising, quart + cube, quart - cube)

    @staticmethod
    def _FT(u, a, z, rising, t_lo, t_hi):
        # rising: t = t_lo + a (u - z)^2 / 2 ; falling: t = t_hi - a (z - u)^2 / 2
        d = np.where(rising, u - z, z - u)
        return np.where(
            rising,
            t_lo * u + a * d**3 / 6.0,
            t_hi * u + a * d**3 / 6.0,
        )

    # -- locate pieces -------------------------------------------------------

    def _half_of_y(self, y):
        return np.clip(np.searchsorted(self._ynodes, y, side="right") - 1, 0, len(self._half_a) - 1)

    def _half_of_x(self, x):
        return np.clip(np.searchsorted(self._tnodes, x, side="right") - 1, 0, len(self._half_a) - 1)

    def _t_raw(self, y):
        y = np.asarray(y, dtype=float)
        out = np.empty_like(y)
        lo, hi = self._ynodes[0], self._ynodes[-1]
        t = self._tnodes_raw
        left = y < lo
        right = y > hi
        mid = ~(left | right)
        out[left] = t[0] - 0.5 * (lo - y[left]) ** 2
        out[right] = t[-1] + 0.5 * (y[right] - hi) ** 2
        if np.any(mid):
            ym = y[mid]
            h = self._half_of_y(ym)
            a = self._half_a[h]
            rising = self._half_rising[h]
            d = np.where(rising, ym - self._ynodes[h], self._ynodes[h + 1] - ym)
            out[mid] = np.where(
                rising,
                t[h] + 0.5 * a * d**2,
                t[h + 1] - 0.5 * a * d**2,
            )
        return out

    # -- ScaleFunction API ----------------------------------------------------

    def inverse_value(self, y):
        y = np.asarray(y, dtype=float)
        scalar = y.ndim == 0
        out = self._t_raw(np.atleast_1d(y)) + (self._tnodes[0] - self._tnodes_raw[0])
        return float(out[0]) if scalar else out

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xv = np.atleast_1d(x).astype(float)
        out = np.empty_like(xv)
        t = self._tnodes
        left = xv < t[0]
        right = xv > t[-1]
        mid = ~(left | right)
        lo, hi = self._ynodes[0], self._ynodes[-1]
        out[left] = lo - np.sqrt(2.0 * (t[0] - xv[left]))
        out[right] = hi + np.sqrt(2.0 * (xv[right] - t[-1]))
        if np.any(mid):
            xm = xv[mid]
            h = self._half_of_x(xm)
            a = self._half_a[h]
            rising = self._half_rising[h]
            d = np.where(
                rising,
                np.sqrt(np.maximum(2.0 * (xm - t[h]) / a, 0.0)),
                np.sqrt(np.maximum(2.0 * (t[h + 1] - xm) / a, 0.0)),
            )
            out[mid] = np.where(rising, self._ynodes[h] + d, self._ynodes[h + 1] - d)
        return float(out[0]) if scalar else out

    def inverse_derivative(self, y):
        """psi(y) = d(y, K), with the flattened tents on surviving intervals."""
        y = np.asarray(y, dtype=float)
        scalar = y.ndim == 0
        yv = np.atleast_1d(y).astype(float)
        out = np.empty_like(yv)
        lo, hi = self._ynodes[0], self._ynodes[-1]
        left = yv < lo
        right = yv > hi
        mid = ~(left | right)
        out[left] = lo - yv[left]
        out[right] = yv[right] - hi
        if np.any(mid):
            ym = yv[mid]
            h = self._half_of_y(ym)
            a = self._half_a[h]
            d = np.where(self._half_rising[h], ym - self._ynodes[h], self._ynodes[h + 1] - ym)
            out[mid] = a * d
        return float(out[0]) if scalar else out

    def inverse_second_derivative(self, y):
        """t'' = +-a off the Cantor set (slope of the local tent)."""
        y = np.asarray(y, dtype=float)
        scalar = y.ndim == 0
        yv = np.atleast_1d(y).astype(float)
        out = np.empty_like(yv)
        lo, hi = self._ynodes[0], self._ynodes[-1]
        left = yv < lo
        right = yv > hi
        mid = ~(left | right)
        out[left] = -1.0
        out[right] = 1.0
        if np.any(mid):
            h = self._half_of_y(yv[mid])
            out[mid] = np.where(self._half_rising[h], 1.0, -1.0) * self._half_a[h]
        return float(out[0]) if scalar else out

    def tilde_density(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xv = np.atleast_1d(x).astype(float)
        out = np.empty_like(xv)
        t = self._tnodes
        left = xv < t[0]
        right = xv > t[-1]
        mid = ~(left | right)
        out[left] = np.sqrt(2.0 * (t[0] - xv[left]))
        out[right] = np.sqrt(2.0 * (xv[right] - t[-1]))
        if np.any(mid):
            xm = xv[mid]
            h = self._half_of_x(xm)
            a = self._half_a[h]
            d = np.where(self._half_rising[h], xm - t[h], t[h + 1] - xm)
            out[mid] = np.sqrt(np.maximum(2.0 * a * d, 0.0))
        return float(out[0]) if scalar else out

    def tilde_density_deriv(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xv = np.atleast_1d(x).astype(float)
        psi = np.atleast_1d(self.tilde_density(xv))
        t = self._tnodes
        sign = np.empty_like(xv)
        a = np.empty_like(xv)
        left = xv < t[0]
        right = xv > t[-1]
        mid = ~(left | right)
        sign[left], a[left] = -1.0, 1.0
        sign[right], a[right] = 1.0, 1.0
        if np.any(mid):
            h = self._half_of_x(xv[mid])
            sign[mid] = np.where(self._half_rising[h], 1.0, -1.0)
            a[mid] = self._half_a[h]
        with np.errstate(divide="ignore"):
            out = sign * a / psi
        return float(out[0]) if scalar else out

    def density(self, x):
        """g = 1/psi o s on gaps and rays, a small constant on the dust."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xv = np.atleast_1d(x).astype(float)
        psi = np.atleast_1d(self.tilde_density(xv))
        with np.errstate(divide="ignore"):
            out = 1.0 / psi
        on_seg = self.kappa_support_mask(xv)
        out[on_seg] = self.gamma
        return float(out[0]) if scalar else out

    # -- moments -------------------------------------------------------------

    def _moments_j(self, u1: float, u2: float):
        """(int t'^2 du, int u t'^2 du) over the scale interval (u1, u2)."""
        if u2 < u1:
            raise ValueError("need u1 <= u2")
        lo, hi = self._ynodes[0], self._ynodes[-1]

        def ray_part(a_, b_):
            # |t'| = distance to the nearest base endpoint, slope one
            m0 = 0.0
            m1 = 0.0
            la, lb = min(a_, lo), min(b_, lo)
            if lb > la:
                m0 += self._scalar_F0(lb, 1.0, lo, False) - self._scalar_F0(la, 1.0, lo, False)
                m1 += self._scalar_F1(lb, 1.0, lo, False) - self._scalar_F1(la, 1.0, lo, False)
            ra, rb = max(a_, hi), max(b_, hi)
            if rb > ra:
                m0 += self._scalar_F0(rb, 1.0, hi, True) - self._scalar_F0(ra, 1.0, hi, True)
                m1 += self._scalar_F1(rb, 1.0, hi, True) - self._scalar_F1(ra, 1.0, hi, True)
            return m0, m1

        a = max(u1, lo)
        b = min(u2, hi)
        m0, m1 = ray_part(u1, u2)
        if b > a:
            pa, pb = self._partial_moments(a, b)
            m0 += pa
            m1 += pb
        return m0, m1

    def _partial_moments(self, a: float, b: float):
        ha = int(self._half_of_y(np.array([a]))[0])
        hb = int(self._half_of_y(np.array([b]))[0])
        z = np.where(self._half_rising, self._ynodes[:-1], self._ynodes[1:])
        if ha == hb:
            m0 = self._seg_m0(a, b, ha, z)
            m1 = self._seg_m1(a, b, ha, z)
            return m0, m1
        m0 = self._seg_m0(a, self._ynodes[ha + 1], ha, z)
        m1 = self._seg_m1(a, self._ynodes[ha + 1], ha, z)
        m0 += self._cum0[hb] - self._cum0[ha + 1]
        m1 += self._cum1[hb] - self._cum1[ha + 1]
        m0 += self._seg_m0(self._ynodes[hb], b, hb, z)
        m1 += self._seg_m1(self._ynodes[hb], b, hb, z)
        return m0, m1

    def _seg_m0(self, a, b, h, z):
        aa = self._half_a[h]
        rising = bool(self._half_rising[h])
        return self._scalar_F0(b, aa, z[h], rising) - self._scalar_F0(a, aa, z[h], rising)

    def _seg_m1(self, a, b, h, z):
        aa = self._half_a[h]
        rising = bool(self._half_rising[h])
        return self._scalar_F1(b, aa, z[h], rising) - self._scalar_F1(a, aa, z[h], rising)

    @staticmethod
    def _scalar_F0(u, a, z, rising):
        d = u - z if rising else z - u
        return (1.0 if rising else -1.0) * a**2 * d**3 / 3.0

    @staticmethod
    def _scalar_F1(u, a, z, rising):
        d = u - z if rising else z - u
        if rising:
            return a**2 * (d**4 / 4.0 + z * d**3 / 3.0)
        # u = z - d: int u t'^2 du has antiderivative a^2 (d^4/4 - z d^3/3) in u
        return a**2 * (d**4 / 4.0 - z * d**3 / 3.0)

    def tilde_moments(self, x1: float, x2: float):
        u1 = float(self(x1))
        u2 = float(self(x2))
        return self._moments_j(u1, u2)

    def t_integral(self, u1: float, u2: float) -> float:
        """Exact integral of t over the scale interval (u1, u2)."""
        if u2 < u1:
            raise ValueError("need u1 <= u2")
        lo, hi = self._ynodes[0], self._ynodes[-1]
        shift = self._tnodes[0] - self._tnodes_raw[0]
        total = shift * (u2 - u1)

        def ray_piece(a_, b_, edge, t_edge, left):
            # left ray: t = t_edge - (edge-u)^2/2, right: t = t_edge + (u-edge)^2/2
            def F(u):
                d = (edge - u) if left else (u - edge)
                return t_edge * u + d**3 / 6.0

            return F(b_) - F(a_)

        out = 0.0
        la, lb = u1, min(u2, lo)
        if lb > la:
            out += ray_piece(la, lb, lo, self._tnodes_raw[0], True)
        ra, rb = max(u1, hi), u2
        if rb > ra:
            out += ray_piece(ra, rb, hi, self._tnodes_raw[-1], False)
        a, b = max(u1, lo), min(u2, hi)
        if b > a:
            ha = int(self._half_of_y(np.array([a]))[0])
            hb = int(self._half_of_y(np.array([b]))[0])
            z = np.where(self._half_rising, self._ynodes[:-1], self._ynodes[1:])
            t_lo = self._tnodes_raw[:-1]
            t_hi = self._tnodes_raw[1:]

            def FT(u, h):
                return self._FT(
                    np.array([u]), self._half_a[h], z[h], bool(self._half_rising[h]),
                    t_lo[h], t_hi[h],
                )[0]

            if ha == hb:
                out += FT(b, ha) - FT(a, ha)
            else:
                out += FT(self._ynodes[ha + 1], ha) - FT(a, ha)
                out += self._cumt[hb] - self._cumt[ha + 1]
                out += FT(b, hb) - FT(self._ynodes[hb], hb)
        return out + total

    def s_integral(self, x1: float, x2: float) -> float:
        u1, u2 = float(self(x1)), float(self(x2))
        return x2 * u2 - x1 * u1 - self.t_integral(u1, u2)

    def describe(self) -> dict:
        return {
            "kind": "cantor",
            "depth": self.spec.depth,
            "base_lo": self.spec.base.lo,
            "base_hi": self.spec.base.hi,
            "removals": ",".join(repr(v) for v in self.spec.removal_fractions[: self.spec.depth]),
            "anchor": self.anchor,
            "eta": self.eta,
            "segment_density": self.gamma,
            "kappa_mass": self.kappa_total,
        }


# ---------------------------------------------------------------------------
# Piecewise-affine scales: the devil's staircase and trivial scales.
# ---------------------------------------------------------------------------


class AffineScale(ScaleFunction):
    """Piecewise-affine scale with optional singular mass spread over pieces.

    ``xb`` are the interior breakpoints; piece i covers (xb[i-1], xb[i]) with
    total slope ``slopes[i]`` of which ``kappa_dens[i]`` is declared singular.
    The two unbounded end pieces are included (slopes has len(xb) + 1).
    """

    def __init__(self, xb, svals, slopes, kappa_dens=None, kappa=None,
                 tprime_class="smooth_positive", anchor=0.0, kind="affine",
                 extra_describe=None):
        xb = np.asarray(xb, dtype=float)
        svals = np.asarray(svals, dtype=float)
        slopes = np.asarray(slopes, dtype=float)
        if len(svals) != len(xb) or len(slopes) != len(xb) + 1:
            raise ValueError("need s values at breakpoints and one slope per piece")
        if np.any(slopes <= 0.0):
            raise ValueError("scale slopes must be positive")
        self._xb = xb
        self._sv = svals
        self._slopes = slopes
        self._kdens = np.zeros_like(slopes) if kappa_dens is None else np.asarray(kappa_dens, float)
        self.kappa = kappa
        self.tprime_class = tprime_class
        self.domain = REAL_LINE
        self.anchor = float(anchor)
        self._kind = kind
        self._extra_describe = extra_describe or {}
        # prefix sums over bounded pieces of int t'^2 du and int u t'^2 du
        su = np.diff(svals)
        m0 = su / slopes[1:-1] ** 2 if len(su) else su
        m1 = (svals[1:] ** 2 - svals[:-1] ** 2) / (2.0 * slopes[1:-1] ** 2) if len(su) else su
        self._cum0 = np.concatenate([[0.0], np.cumsum(m0)])
        self._cum1 = np.concatenate([[0.0], np.cumsum(m1)])

    def _piece_of_x(self, x):
        return np.searchsorted(self._xb, x, side="right")

    def _piece_of_u(self, u):
        return np.searchsorted(self._sv, u, side="right")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xv = np.atleast_1d(x).astype(float)
        p = self._piece_of_x(xv)
        ref_x = self._xb[np.clip(p - 1, 0, None)]
        ref_s = self._sv[np.clip(p - 1, 0, None)]
        first = p == 0
        ref_x = np.where(first, self._xb[0], ref_x)
        ref_s = np.where(first, self._sv[0], ref_s)
        out = ref_s + self._slopes[p] * (xv - ref_x)
        return float(out[0]) if scalar else out

    def inverse_value(self, y):
        y = np.asarray(y, dtype=float)
        scalar = y.ndim == 0
        yv = np.atleast_1d(y).astype(float)
        p = self._piece_of_u(yv)
        ref_x = self._xb[np.clip(p - 1, 0, None)]
        ref_s = self._sv[np.clip(p - 1, 0, None)]
        first = p == 0
        ref_x = np.where(first, self._xb[0], ref_x)
        ref_s = np.where(first, self._sv[0], ref_s)
        out = ref_x + (yv - ref_s) / self._slopes[p]
        return float(out[0]) if scalar else out

    def inverse_derivative(self, y):
        y = np.asarray(y, dtype=float)
        scalar = y.ndim == 0
        p = self._piece_of_u(np.atleast_1d(y).astype(float))
        out = 1.0 / self._slopes[p]
        return float(out[0]) if scalar else out

    def inverse_second_derivative(self, y):
        y = np.asarray(y, dtype=float)
        scalar = y.ndim == 0
        out = np.zeros(np.atleast_1d(y).shape)
        return float(out[0]) if scalar else out

    def density(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        p = self._piece_of_x(np.atleast_1d(x).astype(float))
        out = self._slopes[p] - self._kdens[p]
        return float(out[0]) if scalar else out

    def tilde_density(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        p = self._piece_of_x(np.atleast_1d(x).astype(float))
        out = 1.0 / self._slopes[p]
        return float(out[0]) if scalar else out

    def tilde_density_deriv(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        out = np.zeros(np.atleast_1d(x).shape)
        return float(out[0]) if scalar else out

    def tilde_moments(self, x1: float, x2: float):
        u1, u2 = float(self(x1)), float(self(x2))
        return self._moments_j(u1, u2)

    def _moments_j(self, u1: float, u2: float):
        if u2 < u1:
            raise ValueError("need u1 <= u2")

        def piece_moments(a, b, slope):
            w = 1.0 / slope**2
            return (b - a) * w, (b * b - a * a) / 2.0 * w

        if len(self._sv) == 0:
            return piece_moments(u1, u2, self._slopes[0])
        m0 = m1 = 0.0
        lo_s, hi_s = self._sv[0], self._sv[-1]
        a_, b_ = u1, min(u2, lo_s)
        if b_ > a_:
            p0, p1 = piece_moments(a_, b_, self._slopes[0])
            m0 += p0
            m1 += p1
        a_, b_ = max(u1, hi_s), u2
        if b_ > a_:
            p0, p1 = piece_moments(a_, b_, self._slopes[-1])
            m0 += p0
            m1 += p1
        a_, b_ = max(u1, lo_s), min(u2, hi_s)
        if b_ > a_:
            ia = int(np.clip(np.searchsorted(self._sv, a_, "right") - 1, 0, len(self._sv) - 2))
            ib = int(np.clip(np.searchsorted(self._sv, b_, "right") - 1, 0, len(self._sv) - 2))
            if ia == ib:
                p0, p1 = piece_moments(a_, b_, self._slopes[ia + 1])
                m0 += p0
                m1 += p1
            else:
                p0, p1 = piece_moments(a_, self._sv[ia + 1], self._slopes[ia + 1])
                m0 += p0
                m1 += p1
                m0 += self._cum0[ib] - self._cum0[ia + 1]
                m1 += self._cum1[ib] - self._cum1[ia + 1]
                p0, p1 = piece_moments(self._sv[ib], b_, self._slopes[ib + 1])
                m0 += p0
                m1 += p1
        return m0, m1

    def s_integral(self, x1: float, x2: float) -> float:
        if x2 < x1:
            raise ValueError("need x1 <= x2")
        xs = np.concatenate([[x1], self._xb[(self._xb > x1) & (self._xb < x2)], [x2]])
        sv = np.atleast_1d(self(xs))
        # trapezoid is exact on affine pieces
        return float(np.sum(0.5 * (sv[1:] + sv[:-1]) * np.diff(xs)))

    def describe(self) -> dict:
        d = {"kind": self._kind, "anchor": self.anchor, "kappa_mass": self.kappa_total}
        d.update(self._extra_describe)
        return d


def identity_scale() -> AffineScale:
    """Natural scale of Brownian motion: s(x) = x."""
    return AffineScale(
        xb=np.array([0.0]),
        svals=np.array([0.0]),
        slopes=np.array([1.0, 1.0]),
        tprime_class="smooth_positive",
        kind="brownian",
    )


# ---------------------------------------------------------------------------
# Smooth scales (Orey's absolutely continuous family).
# ---------------------------------------------------------------------------


class _AnchoredIntegral:
    """Cumulative integral from an anchor, cached at unit-spaced knots."""

    def __init__(self, f, anchor=0.0, tol=1e-11):
        self.f = f
        self.anchor = float(anchor)
        self.tol = tol
        self._knots = {0: 0.0}
        self._max_k = 0
        self._min_k = 0

    def _knot(self, k: int) -> float:
        while self._max_k < k:
            base = self._knots[self._max_k]
            lo = self.anchor + self._max_k
            val, _ = quad(self.f, lo, lo + 1.0, epsabs=1e-13, epsrel=self.tol, limit=200)
            self._max_k += 1
            self._knots[self._max_k] = base + val
        while self._min_k > k:
            base = self._knots[self._min_k]
            hi = self.anchor + self._min_k
            val, _ = quad(self.f, hi - 1.0, hi, epsabs=1e-13, epsrel=self.tol, limit=200)
            self._min_k -= 1
            self._knots[self._min_k] = base - val
        return self._knots[k]

    def __call__(self, x: float) -> float:
        k = int(math.floor(x - self.anchor))
        base = self._knot(k)
        lo = self.anchor + k
        if x == lo:
            return base
        val, _ = quad(self.f, lo, x, epsabs=1e-13, epsrel=self.tol, limit=200)
        return base + val


class SmoothScale(ScaleFunction):
    """Absolutely continuous scale with smooth positive density s'."""

    tprime_class = "smooth_positive"

    def __init__(self, sprime, sprime_deriv, anchor=0.0, quadrature_tol=1e-9,
                 kind="smooth", extra_describe=None):
        self.sprime = sprime
        self.sprime_deriv = sprime_deriv
        self.anchor = float(anchor)
        self.domain = REAL_LINE
        self.kappa = None
        self.tol = float(quadrature_tol)
        if self.tol <= 0.0:
            raise ValueError("quadrature tolerance must be positive")
        self._s = _AnchoredIntegral(sprime, anchor=self.anchor, tol=min(self.tol, 1e-10))
        self._kind = kind
        self._extra_describe = extra_describe or {}

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            return self._s(float(x))
        return np.array([self._s(v) for v in x.ravel()]).reshape(x.shape)

    def inverse_value(self, y):
        y = np.asarray(y, dtype=float)
        if y.ndim == 0:
            return self._invert_scalar(float(y))
        return np.array([self._invert_scalar(v) for v in y.ravel()]).reshape(y.shape)

    def _invert_scalar(self, y: float) -> float:
        lo = hi = self.anchor
        step = 1.0
        for _ in range(200):
            if self._s(lo) <= y:
                break
            lo -= step
            step *= 2.0
        else:
            raise InversionDomainError(f"{y} below the scale image")
        step = 1.0
        for _ in range(200):
            if self._s(hi) >= y:
                break
            hi += step
            step *= 2.0
        else:
            raise InversionDomainError(f"{y} above the scale image")
        if lo == hi:
            return lo
        return brentq(lambda x: self._s(x) - y, lo, hi, xtol=1e-13, rtol=8.9e-16)

    def inverse_derivative(self, y):
        y = np.asarray(y, dtype=float)
        if y.ndim == 0:
            return 1.0 / self.sprime(self._invert_scalar(float(y)))
        x = self.inverse_value(y)
        return 1.0 / np.asarray([self.sprime(v) for v in np.atleast_1d(x)])

    def inverse_second_derivative(self, y):
        y = np.asarray(y, dtype=float)
        def one(v):
            x = self._invert_scalar(float(v))
            sp = self.sprime(x)
            return -self.sprime_deriv(x) / sp**3
        if y.ndim == 0:
            return one(y)
        return np.array([one(v) for v in y.ravel()]).reshape(y.shape)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return self.sprime(x) if x.ndim else float(self.sprime(float(x)))

    def tilde_density(self, x):
        x = np.asarray(x, dtype=float)
        out = 1.0 / np.asarray(self.sprime(x), dtype=float)
        return float(out) if x.ndim == 0 else out

    def tilde_density_deriv(self, x):
        x = np.asarray(x, dtype=float)
        sp = np.asarray(self.sprime(x), dtype=float)
        spd = np.asarray(self.sprime_deriv(x), dtype=float)
        out = -spd / sp**2
        return float(out) if x.ndim == 0 else out

    def tilde_moments(self, x1: float, x2: float):
        if x2 < x1:
            raise ValueError("need x1 <= x2")
        i0, _ = quad(lambda v: 1.0 / self.sprime(v), x1, x2, epsrel=self.tol, limit=200)
        i1, _ = quad(lambda v: self._s(v) / self.sprime(v), x1, x2, epsrel=self.tol, limit=200)
        return i0, i1

    def s_integral(self, x1: float, x2: float) -> float:
        val, _ = quad(self._s, x1, x2, epsrel=self.tol, limit=200)
        return val

    def describe(self) -> dict:
        d = {"kind": self._kind, "anchor": self.anchor, "kappa_mass": 0.0}
        d.update(self._extra_describe)
        return d


# ---------------------------------------------------------------------------
# Skew transform.
# ---------------------------------------------------------------------------


class SkewScale(ScaleFunction):
    """d s-hat = gamma1 ds below x0 and gamma2 ds from x0 on, re-anchored."""

    def __init__(self, base: ScaleFunction, x0: float, gamma1: float, gamma2: float):
        if not base.domain.contains(x0):
            raise ValueError("skew point must be interior to the state interval")
        if gamma1 <= 0.0 or gamma2 <= 0.0:
            raise ValueError("skew factors must be positive")
        self.base = base
        self.x0 = float(x0)
        self.gamma1 = float(gamma1)
        self.gamma2 = float(gamma2)
        self.domain = base.domain
        self.anchor = base.anchor
        self._s0 = float(base(self.x0))
        if self.anchor < self.x0:
            self._y0 = self.gamma1 * self._s0  # s-hat at x0 once anchored
        else:
            self._y0 = self.gamma2 * self._s0
        jump = float(base.tilde_density(np.asarray(self.x0)))
        self.tprime_jump = jump * (1.0 / self.gamma2 - 1.0 / self.gamma1)
        if self.gamma1 == self.gamma2:
            self.tprime_class = base.tprime_class
        elif base.tprime_class in ("smooth_positive", "lipschitz", "bv_jump"):
            self.tprime_class = "bv_jump"
        else:
            self.tprime_class = "not_bv"
        self.kappa = self._build_kappa()

    def _build_kappa(self):
        bk = self.base.kappa
        if bk is None:
            return None
        parts = []
        below = bk.restrict(-np.inf, self.x0)
        if below is not None:
            parts.append((below, self.gamma1))
        above = bk.restrict(self.x0, np.inf)
        if above is not None:
            parts.append((above, self.gamma2))
        if not parts:
            return None
        segs = np.concatenate([p.segments for p, _ in parts])
        masses = np.concatenate([p.masses * g for p, g in parts])
        ideal = sum(p.ideal_total * g for p, g in parts)
        offsets = np.concatenate([[0], np.cumsum([len(p.segments) for p, _ in parts])])
        inner_parts = [p.inner_cdf for p, _ in parts]
        part_segs = [p for p, _ in parts]

        def _inner(ii, pts):
            out = np.empty(len(pts))
            for k, (pf, pm) in enumerate(zip(inner_parts, part_segs)):
                sel = (ii >= offsets[k]) & (ii < offsets[k + 1])
                if np.any(sel):
                    local = ii[sel] - offsets[k]
                    if pf is None:
                        lo = pm.segments[local, 0]
                        hi = pm.segments[local, 1]
                        out[sel] = (pts[sel] - lo) / (hi - lo)
                    else:
                        out[sel] = pf(local, pts[sel])
            return out

        return SingularMeasure(
            segments=segs, masses=masses, depth=bk.depth, ideal_total=ideal, inner_cdf=_inner
        )

    def _gamma_of_x(self, x):
        return np.where(np.asarray(x, dtype=float) < self.x0, self.gamma1, self.gamma2)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        g = self._gamma_of_x(x)
        out = g * (np.asarray(self.base(x), dtype=float) - self._s0) + self._y0
        return float(out) if x.ndim == 0 else out

    def inverse_value(self, y):
        y = np.asarray(y, dtype=float)
        g = np.where(y < self._y0, self.gamma1, self.gamma2)
        base_u = self._s0 + (y - self._y0) / g
        out = self.base.inverse_value(base_u)
        return float(out) if y.ndim == 0 else np.asarray(out, dtype=float)

    def inverse_derivative(self, y):
        y = np.asarray(y, dtype=float)
        g = np.where(y < self._y0, self.gamma1, self.gamma2)
        base_u = self._s0 + (y - self._y0) / g
        out = np.asarray(self.base.inverse_derivative(base_u), dtype=float) / g
        return float(out) if y.ndim == 0 else out

    def inverse_second_derivative(self, y):
        y = np.asarray(y, dtype=float)
        g = np.where(y < self._y0, self.gamma1, self.gamma2)
        base_u = self._s0 + (y - self._y0) / g
        out = np.asarray(self.base.inverse_second_derivative(base_u), dtype=float) / g**2
        return float(out) if y.ndim == 0 else out

    def density(self, x):
        x = np.asarray(x, dtype=float)
        out = self._gamma_of_x(x) * np.asarray(self.base.density(x), dtype=float)
        return float(out) if x.ndim == 0 else out

    def tilde_density(self, x):
        x = np.asarray(x, dtype=float)
        out = np.asarray(self.base.tilde_density(x), dtype=float) / self._gamma_of_x(x)
        return float(out) if x.ndim == 0 else out

    def tilde_density_deriv(self, x):
        x = np.asarray(x, dtype=float)
        out = np.asarray(self.base.tilde_density_deriv(x), dtype=float) / self._gamma_of_x(x)
        return float(out) if x.ndim == 0 else out

    def tilde_moments(self, x1: float, x2: float):
        # sides map affinely onto the base scale image
        m0 = m1 = 0.0
        for (a, b) in ((x1, min(x2, self.x0)), (max(x1, self.x0), x2)):
            if b <= a:
                continue
            g = self.gamma1 if a < self.x0 else self.gamma2
            b0, b1 = self.base.tilde_moments(a, b)
            m0 += b0 / g
            m1 += (self._y0 - g * self._s0) / g * b0 + b1
        return m0, m1

    def s_integral(self, x1: float, x2: float) -> float:
        out = 0.0
        for (a, b) in ((x1, min(x2, self.x0)), (max(x1, self.x0), x2)):
            if b <= a:
                continue
            g = self.gamma1 if a < self.x0 else self.gamma2
            out += g * self.base.s_integral(a, b) + (self._y0 - g * self._s0) * (b - a)
        return out

    def describe(self) -> dict:
        d = {"kind": "skew", "x0": self.x0, "gamma1": self.gamma1, "gamma2": self.gamma2}
        d["base"] = self.base.describe()["kind"]
        d["kappa_mass"] = self.kappa_total
        d["anchor"] = self.anchor
        return d


# ---------------------------------------------------------------------------
# The subspace family s_c of a scale with nonzero singular part.
# ---------------------------------------------------------------------------


class SubspaceScale(ScaleFunction):
    """Scale s_c: full density g plus kappa restricted to a symmetric window.

    The window [e - w, e + w] around the anchor is sized by bisection so the
    retained singular mass equals c; c = 0 recovers the absolutely
    continuous part and c = kappa_total recovers the parent.
    """

    def __init__(self, parent: ScaleFunction, c: float):
        if parent.kappa is None and c > 0.0:
            raise ValueError("parent scale has no singular part to restrict")
        total = parent.kappa_total
        if not 0.0 <= c <= total * (1.0 + 1e-12):
            raise ValueError(f"c must lie in [0, {total}]")
        self.parent = parent
        self.c = float(min(c, total))
        self.domain = parent.domain
        self.anchor = parent.anchor
        self.tprime_class = parent.tprime_class if self.c > 0.0 else "lipschitz"
        if parent.kappa is None or self.c <= 0.0:
            self.window = 0.0
            self.kappa = None
        elif self.c >= total:
            self.window = math.inf
            self.kappa = parent.kappa
        else:
            self.window = parent.kappa.window_for_mass(self.c, self.anchor)
            self.kappa = parent.kappa.restrict(self.anchor - self.window, self.anchor + self.window)
        if self.c <= 0.0:
            # the absolutely continuous part of a singular scale is smooth in
            # the same sense as the parent's off-dust behaviour
            self.tprime_class = "lipschitz" if parent.kappa is not None else parent.tprime_class
        self._excluded = self._excluded_segments()
        self._prefix = None

    def _excluded_segments(self):
        pk = self.parent.kappa
        if pk is None:
            return np.zeros((0, 2))
        if self.kappa is None:
            return pk.segments.copy()
        lo = self.anchor - self.window
        hi = self.anchor + self.window
        segs = []
        for (a, b) in pk.segments:
            if b <= lo or a >= hi:
                segs.append((a, b))
            else:
                if a < lo:
                    segs.append((a, lo))
                if b > hi:
                    segs.append((hi, b))
        return np.array(segs) if segs else np.zeros((0, 2))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        base = np.asarray(self.parent(x), dtype=float)
        drop = np.asarray(self.parent.kappa_signed(x), dtype=float)
        keep = np.asarray(self.kappa_signed(x), dtype=float)
        out = base - drop + keep
        return float(out) if x.ndim == 0 else out

    def kappa_signed(self, x):
        if self.kappa is None:
            x = np.asarray(x, dtype=float)
            return np.zeros_like(x) if x.ndim else 0.0
        return self.kappa.cdf(x) - self.kappa.cdf(self.anchor)

    def inverse_value(self, y):
        y = np.asarray(y, dtype=float)
        if y.ndim == 0:
            return self._invert_scalar(float(y))
        return np.array([self._invert_scalar(v) for v in y.ravel()]).reshape(y.shape)

    def _invert_scalar(self, y: float) -> float:
        # bracket by monotonicity, expanding from the parent's inverse guess
        guess = float(self.parent.inverse_value(np.asarray(y + 0.0)))
        lo = hi = guess
        step = max(1.0, abs(guess)) * 0.5
        for _ in range(300):
            if float(self(lo)) <= y:
                break
            lo -= step
            step *= 2.0
        step = max(1.0, abs(guess)) * 0.5
        for _ in range(300):
            if float(self(hi)) >= y:
                break
            hi += step
            step *= 2.0
        if lo == hi:
            return lo
        return brentq(lambda x: float(self(x)) - y, lo, hi, xtol=1e-13, rtol=8.9e-16)

    def _excluded_mask(self, x):
        x = np.asarray(x, dtype=float)
        segs = self._excluded
        if len(segs) == 0:
            return np.zeros(x.shape, dtype=bool)
        idx = np.searchsorted(segs[:, 0], x, side="right") - 1
        ok = idx >= 0
        out = np.zeros(x.shape, dtype=bool)
        out[ok] = x[ok] <= segs[idx[ok], 1]
        return out

    def inverse_derivative(self, y):
        y = np.asarray(y, dtype=float)
        x = np.asarray(self.inverse_value(y), dtype=float)
        out = np.asarray(self.tilde_density(x), dtype=float)
        return float(out) if y.ndim == 0 else out

    def inverse_second_derivative(self, y):
        y = np.asarray(y, dtype=float)
        x = np.asarray(self.inverse_value(y), dtype=float)
        td = np.asarray(self.tilde_density(x), dtype=float)
        tdd = np.asarray(self.tilde_density_deriv(x), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(td > 0.0, tdd, 0.0)
        return float(out) if y.ndim == 0 else out

    def density(self, x):
        return self.parent.density(x)

    def tilde_density(self, x):
        x = np.asarray(x, dtype=float)
        xv = np.atleast_1d(x).astype(float)
        base = np.asarray(self.parent.tilde_density(xv), dtype=float)
        excl = self._excluded_mask(xv)
        if np.any(excl):
            g = np.asarray(self.parent.density(xv[excl]), dtype=float)
            base = base.copy()
            base[excl] = 1.0 / g
        return float(base[0]) if x.ndim == 0 else base

    def tilde_density_deriv(self, x):
        x = np.asarray(x, dtype=float)
        xv = np.atleast_1d(x).astype(float)
        base = np.asarray(self.parent.tilde_density_deriv(xv), dtype=float)
        excl = self._excluded_mask(xv)
        if np.any(excl):
            base = base.copy()
            base[excl] = 0.0  # g is constant on excluded dust pieces
        return float(base[0]) if x.ndim == 0 else base

    # -- moments: parent values plus window corrections ----------------------

    def _i0_ref(self, x: float) -> float:
        """Cumulative parent tilde mass from the anchor (signed)."""
        if x >= self.anchor:
            return self.parent.tilde_moments(self.anchor, x)[0]
        return -self.parent.tilde_moments(x, self.anchor)[0]

    def _build_prefix(self):
        segs = self._excluded
        k = len(segs)
        pref = {
            "segs": segs,
            "mass": np.zeros(k),
            "mass_i0": np.zeros(k),  # mass_j * I0ref(mid_j)
            "delta_over_g": np.zeros(k),
            "seg_i0": np.zeros(k),
            "seg_i1": np.zeros(k),
            "repl_i1": np.zeros(k),
        }
        pk = self.parent.kappa
        for j, (a, b) in enumerate(segs):
            mass = float(pk.cdf(b) - pk.cdf(a))
            mid = 0.5 * (a + b)
            pref["mass"][j] = mass
            pref["mass_i0"][j] = mass * self._i0_ref(mid)
            g = float(np.asarray(self.parent.density(np.array([mid])), dtype=float)[0])
            pref["delta_over_g"][j] = (b - a) / g
            s0, s1 = self.parent.tilde_moments(a, b)
            pref["seg_i0"][j] = s0
            pref["seg_i1"][j] = s1
            pref["repl_i1"][j] = 0.5 * (float(self(a)) + float(self(b))) * (b - a) / g
        for key in ("mass", "mass_i0", "delta_over_g", "seg_i0", "seg_i1", "repl_i1"):
            pref["c_" + key] = np.concatenate([[0.0], np.cumsum(pref[key])])
        self._prefix = pref
        pref["e0"] = float(self._ecdf(self.anchor))

    def _ecdf(self, x: float) -> float:
        """Cumulative excluded kappa mass up to x."""
        pk = self.parent.kappa
        if pk is None or len(self._excluded) == 0:
            return 0.0
        segs = self._excluded
        idx = int(np.searchsorted(segs[:, 0], x, side="right")) - 1
        if self._prefix is not None and "c_mass" in self._prefix:
            cum = self._prefix["c_mass"]
        else:
            masses = np.array([pk.cdf(b) - pk.cdf(a) for a, b in segs])
            cum = np.concatenate([[0.0], np.cumsum(masses)])
        if idx < 0:
            return 0.0
        base = cum[idx]
        a, b = segs[idx]
        if x >= b:
            return float(cum[idx + 1])
        return float(base + pk.cdf(x) - pk.cdf(a))

    def _int_D_tilde(self, x1: float, x2: float, i0p: float) -> float:
        """int of D * (parent tilde density) over (x1, x2).

        D(x) = Ecdf(x) - Ecdf(e) is the singular mass dropped below x; the
        integral is computed by parts with the dEcdf part collapsed to the
        excluded-piece midpoints (the parent tilde mass of one dust piece is
        below float resolution, so the midpoint collapse is lossless).
        """
        p = self._prefix
        segs = p["segs"]
        if len(segs) == 0:
            return 0.0
        e2 = self._ecdf(x2)
        i0_x1 = self._i0_ref(x1)
        i0_x2 = self._i0_ref(x2)
        # segments fully inside (x1, x2) via prefix sums
        ja = int(np.searchsorted(segs[:, 0], x1, side="left"))
        jb = int(np.searchsorted(segs[:, 1], x2, side="right"))
        sum_jde = 0.0
        if jb > ja:
            sum_jde += (p["c_mass_i0"][jb] - p["c_mass_i0"][ja]) - i0_x1 * (
                p["c_mass"][jb] - p["c_mass"][ja]
            )
        # straddling edge segments carry only their in-range mass
        pk = self.parent.kappa
        for j in {ja - 1, jb} - set(range(ja, jb)):
            if j < 0 or j >= len(segs):
                continue
            lo_, hi_ = max(segs[j, 0], x1), min(segs[j, 1], x2)
            if hi_ <= lo_:
                continue
            m = float(pk.cdf(hi_) - pk.cdf(lo_))
            if m > 0.0:
                sum_jde += m * (self._i0_ref(0.5 * (lo_ + hi_)) - i0_x1)
        int_ecdf_tilde = e2 * (i0_x2 - i0_x1) - sum_jde
        return int_ecdf_tilde - p["e0"] * i0p

    def tilde_moments(self, x1: float, x2: float):
        if x2 < x1:
            raise ValueError("need x1 <= x2")
        if self._prefix is None:
            self._build_prefix()
        p = self._prefix
        i0p, i1p = self.parent.tilde_moments(x1, x2)
        segs = p["segs"]
        if len(segs) == 0:
            return i0p, i1p
        j1 = int(np.searchsorted(segs[:, 1], x1, side="right"))
        j2 = int(np.searchsorted(segs[:, 0], x2, side="left"))
        # replace parent dust contributions by density-only behaviour
        d_i0 = (p["c_delta_over_g"][j2] - p["c_delta_over_g"][j1]) - (
            p["c_seg_i0"][j2] - p["c_seg_i0"][j1]
        )
        d_i1 = (p["c_repl_i1"][j2] - p["c_repl_i1"][j1]) - (
            p["c_seg_i1"][j2] - p["c_seg_i1"][j1]
        )
        return i0p + d_i0, i1p + d_i1 - self._int_D_tilde(x1, x2, i0p)

    def moments_against_parent_tilde(self, x1: float, x2: float):
        """(m-mass, int s_c dm) for m = the parent's m-tilde."""
        if self._prefix is None:
            self._build_prefix()
        i0p, i1p = self.parent.tilde_moments(x1, x2)
        return i0p, i1p - self._int_D_tilde(x1, x2, i0p)

    def s_integral(self, x1: float, x2: float) -> float:
        if self._prefix is None:
            self._build_prefix()
        base = self.parent.s_integral(x1, x2)
        segs = self._prefix["segs"]
        if len(segs) == 0:
            return base
        # subtract int D dx; D is piecewise constant off the dust
        xs = [x1, x2]
        for a, b in segs:
            if b <= x1 or a >= x2:
                continue
            xs.extend([max(a, x1), min(b, x2)])
        xs = sorted(set(xs))
        corr = 0.0
        for a, b in zip(xs[:-1], xs[1:]):
            mid = 0.5 * (a + b)
            corr += (self._ecdf(mid) - self._prefix["e0"]) * (b - a)
        return base - corr

    def describe(self) -> dict:
        d = {
            "kind": "subspace",
            "c": self.c,
            "window": self.window,
            "anchor": self.anchor,
            "kappa_mass": self.kappa_total,
        }
        d["parent"] = self.parent.describe()["kind"]
        return d


# ---------------------------------------------------------------------------
# Construction operations.
# ---------------------------------------------------------------------------


def build_cantor_scale(spec: GeneralizedCantorSpec, extension: str = "distance"):
    """Scale pair of the fat-Cantor construction.

    t(y) integrates the distance to the surviving set, extended outside the
    base by the distance to the base endpoints so that t(+-inf) = +-inf and
    the diffusion never reaches a boundary.  Returns (s, t).
    """
    if extension != "distance":
        raise ValueError("only the distance-to-set linear extension is supported")
    scale = TentScale(spec)
    return scale, scale.inverse()


def build_devils_staircase_scale(depth: int):
    """s(x) = x + c(x) with c the standard Cantor function at finite depth."""
    if depth < 1:
        raise ValueError("depth must be a positive integer")
    spec = middle_thirds_spec(depth)
    segs = build_segments(spec)
    n = len(segs)
    masses = np.full(n, 2.0**-depth)
    kappa = SingularMeasure(segments=segs, masses=masses, depth=depth, ideal_total=1.0)
    xb = segs.ravel()
    width = spec.segment_width
    seg_slope = 1.0 + (2.0**-depth) / width
    slopes = np.ones(2 * n + 1)
    slopes[1::2] = seg_slope
    kdens = np.zeros(2 * n + 1)
    kdens[1::2] = seg_slope - 1.0
    sv = np.concatenate([[0.0], np.cumsum(slopes[1:-1] * np.diff(xb))])
    scale = AffineScale(
        xb=xb,
        svals=sv,
        slopes=slopes,
        kappa_dens=kdens,
        kappa=kappa,
        tprime_class="not_bv",
        kind="staircase",
        extra_describe={"depth": depth},
    )
    return scale, scale.inverse()


def build_orey_scale(b: Callable, quadrature_tol: float = 1e-9, b_antiderivative=None):
    """Scale and speed of the drift family s'(x) = exp(-2 int_0^x b).

    The speed density is 1/s', so the pair satisfies m = m-tilde and the
    diffusion solves dX = b(X) dt + dB.  ``b_antiderivative`` may supply a
    closed form for int_0^x b; otherwise it is built by cached quadrature.
    """
    if quadrature_tol <= 0.0:
        raise ValueError("quadrature tolerance must be positive")
    if b_antiderivative is None:
        b_antiderivative = _AnchoredIntegral(b, anchor=0.0, tol=min(quadrature_tol, 1e-10))

    def B(x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            return float(b_antiderivative(float(x)))
        return np.array([b_antiderivative(float(v)) for v in x.ravel()]).reshape(x.shape)

    def sprime(x):
        val = np.exp(-2.0 * B(x))
        if np.any(~np.isfinite(np.atleast_1d(val))):
            raise OverflowError("exp(-2 int b) overflowed; drift too large for quadrature")
        return val

    def sprime_deriv(x):
        x = np.asarray(x, dtype=float)
        return -2.0 * np.asarray(b(x), dtype=float) * sprime(x)

    scale = SmoothScale(
        sprime, sprime_deriv, anchor=0.0, quadrature_tol=quadrature_tol, kind="orey"
    )

    from .diffusion import SpeedMeasure

    def h(x):
        val = np.exp(2.0 * B(x))
        if np.any(~np.isfinite(np.atleast_1d(val))):
            raise OverflowError("exp(2 int b) overflowed; drift too large for quadrature")
        return val

    speed = SpeedMeasure.tilde_of(scale)
    speed = speed._replace_density(h)  # identical values, cheaper to evaluate
    return scale, speed


def skew_transform(scale: ScaleFunction, speed, x0: float, gamma1: float, gamma2: float):
    """Skewed pair (s-hat, m-hat); identity when gamma1 == gamma2 == 1."""
    new_scale = SkewScale(scale, x0, gamma1, gamma2)
    from .diffusion import SpeedMeasure

    if not isinstance(speed, SpeedMeasure):
        raise TypeError("speed must be a SpeedMeasure")
    new_speed = speed.skewed(x0, gamma1, gamma2, scale=new_scale)
    return new_scale, new_speed


@dataclass(frozen=True)
class LebesgueDecomposition:
    """ds = g * lambda + kappa with kappa singular (Cantor-type)."""

    g: Callable
    kappa: Optional[SingularMeasure]


def lebesgue_decompose(scale: ScaleFunction, probes: int = 100, rng=None,
                       rel_tol: float = 1e-8, abs_tol: float = 1e-12) -> LebesgueDecomposition:
    """Return (g, kappa) and audit the reconstruction on random intervals."""
    rng = np.random.default_rng(0) if rng is None else rng
    for _ in range(probes):
        a = float(rng.uniform(-2.0, 2.0))
        b = a + float(rng.uniform(0.01, 2.0))
        ds = float(scale(b) - scale(a))
        recon = scale.density_integral(a, b) + (
            float(scale.kappa_cdf(b)) - float(scale.kappa_cdf(a))
        )
        if abs(ds - recon) > rel_tol * abs(ds) + abs_tol:
            raise DecompositionAuditError(
                f"reconstruction mismatch on ({a}, {b}): ds={ds}, g+kappa={recon}"
            )
    return LebesgueDecomposition(g=scale.density, kappa=scale.kappa)


def abs_cont_part(scale: ScaleFunction) -> ScaleFunction:
    """The scale with density g and no singular part, anchor preserved."""
    if scale.kappa is None:
        return scale
    return SubspaceScale(scale, 0.0)


def subspace_scale(scale: ScaleFunction, c: float) -> ScaleFunction:
    """Member s_c of the subspace family; s_0 = abs-cont part, s_total = s."""
    if scale.kappa is not None and c >= scale.kappa_total:
        return scale
    return SubspaceScale(scale, c)


def invert(scale: ScaleFunction, tol: float = 1e-12) -> InverseScale:
    """Inverse by monotone bracketing, checked to |s(t(y)) - y| <= tol."""
    if tol <= 0.0:
        raise ValueError("tolerance must be positive")
    inner = scale.inverse()

    def _eval(y):
        x = inner(y)
        resid = np.max(np.abs(np.asarray(scale(x), dtype=float) - np.asarray(y, dtype=float)))
        if resid > tol:
            raise InversionDomainError(f"inversion residual {resid} exceeds {tol}")
        return x

    return InverseScale(
        range=inner.range,
        _eval=_eval,
        _deriv=inner._deriv,
        _second=inner._second,
    )
