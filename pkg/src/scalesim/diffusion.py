"""Speed measures and the (scale, speed) pair defining a diffusion."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.integrate import quad

from .intervals import Interval, REAL_LINE
from .scale import InverseScale, ScaleFunction, SubspaceScale

__all__ = ["SpeedMeasure", "DiffusionSpec", "SpecValidationError"]


class SpecValidationError(ValueError):
    """The (scale, inverse, speed) triple is inconsistent."""


class SpeedMeasure:
    """Radon measure on the state interval: a density, optional atoms.

    ``kind`` records the structural class used by the absolute-continuity
    decision table:

    ``lebesgue``        density one (optionally scaled per side of a point)
    ``tilde``           the measure t' o s(x) dx of an attached scale
    ``density``         a general positive density callable
    """

    def __init__(self, kind: str, domain: Interval = REAL_LINE, density: Optional[Callable] = None,
                 atoms: Tuple[Tuple[float, float], ...] = (), scale: Optional[ScaleFunction] = None,
                 sides: Optional[Tuple[float, float, float]] = None, label: str = ""):
        if kind not in ("lebesgue", "tilde", "density"):
            raise ValueError(f"unknown speed measure kind {kind!r}")
        if kind == "tilde" and scale is None:
            raise ValueError("tilde speed measure needs its scale")
        if kind == "density" and density is None:
            raise ValueError("density speed measure needs a density callable")
        for loc, mass in atoms:
            if mass <= 0.0:
                raise ValueError("atom masses must be positive")
        self.kind = kind
        self.domain = domain
        self._density = density
        self.atoms = tuple(atoms)
        self.scale = scale
        self.sides = sides  # (x0, factor_below, factor_from) for lebesgue kind
        self.label = label or kind

    # -- constructors ---------------------------------------------------------

    @classmethod
    def lebesgue(cls, domain: Interval = REAL_LINE) -> "SpeedMeasure":
        return cls("lebesgue", domain=domain, label="lebesgue")

    @classmethod
    def tilde_of(cls, scale: ScaleFunction) -> "SpeedMeasure":
        return cls("tilde", domain=scale.domain, scale=scale, label="m-tilde")

    @classmethod
    def from_density(cls, density: Callable, domain: Interval = REAL_LINE,
                     label: str = "density") -> "SpeedMeasure":
        return cls("density", domain=domain, density=density, label=label)

    def _replace_density(self, density: Callable) -> "SpeedMeasure":
        """Same measure with a cheaper, equal-valued density callable."""
        out = SpeedMeasure(self.kind, domain=self.domain, density=density,
                          atoms=self.atoms, scale=self.scale, sides=self.sides,
                          label=self.label)
        return out

    def skewed(self, x0: float, gamma1: float, gamma2: float,
               scale: Optional[ScaleFunction] = None) -> "SpeedMeasure":
        """(1/gamma1) m below x0 plus (1/gamma2) m from x0 on."""
        if self.atoms:
            raise NotImplementedError("skewing atomic speed measures is not supported")
        if self.kind == "tilde" and scale is not None and getattr(scale, "base", None) is self.scale:
            # m was the base scale's m-tilde; the skewed measure is exactly
            # the skew scale's m-tilde
            return SpeedMeasure.tilde_of(scale)
        if self.kind == "lebesgue" and self.sides is None:
            out = SpeedMeasure("lebesgue", domain=self.domain, label="skewed-lebesgue")
            out.sides = (float(x0), 1.0 / gamma1, 1.0 / gamma2)
            return out
        base_density = self.density_at

        def h(x):
            x = np.asarray(x, dtype=float)
            f = np.where(x < x0, 1.0 / gamma1, 1.0 / gamma2)
            return f * np.asarray(base_density(x), dtype=float)

        return SpeedMeasure.from_density(h, domain=self.domain, label="skewed-" + self.label)

    # -- evaluation -----------------------------------------------------------

    def density_at(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "lebesgue":
            if self.sides is None:
                out = np.ones_like(x)
            else:
                x0, f1, f2 = self.sides
                out = np.where(x < x0, f1, f2)
            return float(out) if x.ndim == 0 else out
        if self._density is not None:
            out = np.asarray(self._density(x), dtype=float)
            return float(out) if x.ndim == 0 else out
        return self.scale.tilde_density(x)

    @property
    def has_positive_density(self) -> bool:
        """Structural flag behind hypothesis (H3'): a.e. strictly positive density."""
        return True  # all constructible kinds carry an a.e.-positive density

    def mass(self, a: float, b: float) -> float:
        """Measure of (a, b], atoms included."""
        if b < a:
            raise ValueError("need a <= b")
        if self.kind == "lebesgue":
            if self.sides is None:
                out = b - a
            else:
                x0, f1, f2 = self.sides
                out = f1 * max(0.0, min(b, x0) - a) + f2 * max(0.0, b - max(a, x0))
        elif self.kind == "tilde":
            out = self.scale.tilde_moments(a, b)[0]
        else:
            out, _ = quad(lambda v: float(np.asarray(self._density(v), dtype=float)), a, b,
                          limit=200)
        out += sum(m for loc, m in self.atoms if a < loc <= b)
        return float(out)

    def describe(self) -> dict:
        d = {"kind": self.kind, "label": self.label}
        if self.sides is not None:
            d["sides"] = ",".join(repr(v) for v in self.sides)
        if self.atoms:
            d["atoms"] = ";".join(f"{loc}:{m}" for loc, m in self.atoms)
        return d


@dataclass
class DiffusionSpec:
    """A minimal diffusion on an open interval, given by scale and speed."""

    interval: Interval
    scale: ScaleFunction
    inverse: InverseScale
    speed: SpeedMeasure
    label: str = "diffusion"

    @classmethod
    def build(cls, scale: ScaleFunction, speed: SpeedMeasure, label: str = "diffusion",
              validate: bool = True) -> "DiffusionSpec":
        spec = cls(interval=scale.domain, scale=scale, inverse=scale.inverse(),
                   speed=speed, label=label)
        if validate:
            spec.validate()
        return spec

    def validate(self, n_probe: int = 1000, seed: int = 20240) -> None:
        """Round-trip and monotonicity audit on a probe grid."""
        rng = np.random.default_rng(seed)
        lo = self.interval.lo if np.isfinite(self.interval.lo) else -3.0
        hi = self.interval.hi if np.isfinite(self.interval.hi) else 3.0
        pad = 1e-6 * (hi - lo)
        x = np.sort(rng.uniform(lo + pad, hi - pad, size=n_probe))
        s = np.asarray(self.scale(x), dtype=float)
        if np.any(np.diff(s) <= 0.0):
            raise SpecValidationError("scale function is not strictly increasing on probes")
        back = np.asarray(self.inverse(s), dtype=float)
        tol = 1e-9 * (1.0 + np.abs(x))
        worst = np.max(np.abs(back - x) - tol)
        if worst > 0.0:
            raise SpecValidationError(f"round trip t(s(x)) missed x by {worst:.3e} beyond tolerance")
        if abs(float(self.scale(self.scale.anchor))) > 1e-12:
            raise SpecValidationError("scale is not zero at its anchor")

    # -- quantities used by the chain construction ----------------------------

    def green_moments(self, x1: float, x2: float) -> Tuple[float, float]:
        """(m-mass of (x1, x2), integral of s against m), atoms excluded."""
        sp = self.speed
        sc = self.scale
        if sp.kind == "tilde":
            if sp.scale is sc:
                return sc.tilde_moments(x1, x2)
            if isinstance(sc, SubspaceScale) and sp.scale is sc.parent:
                return sc.moments_against_parent_tilde(x1, x2)
            # m-tilde of an unrelated scale: fall through to quadrature
        if sp.kind == "lebesgue" and sp.sides is None:
            return x2 - x1, sc.s_integral(x1, x2)
        if sp.kind == "lebesgue":
            x0, f1, f2 = sp.sides
            i0 = i1 = 0.0
            for (a, b, f) in ((x1, min(x2, x0), f1), (max(x1, x0), x2, f2)):
                if b > a:
                    i0 += f * (b - a)
                    i1 += f * sc.s_integral(a, b)
            return i0, i1
        h = sp.density_at
        i0, _ = quad(lambda v: float(np.asarray(h(v), dtype=float)), x1, x2, limit=200)
        i1, _ = quad(lambda v: float(sc(v)) * float(np.asarray(h(v), dtype=float)), x1, x2,
                     limit=200)
        return i0, i1

    def expected_exit_time(self, a: float, x: float, b: float) -> float:
        """Mean exit time of (a, b) started at x: the Green kernel against m."""
        if not a < x < b:
            raise ValueError("need a < x < b")
        sa, sx, sb = (float(self.scale(v)) for v in (a, x, b))
        span = sb - sa
        i0_lo, i1_lo = self.green_moments(a, x)
        i0_hi, i1_hi = self.green_moments(x, b)
        out = 2.0 / span * ((sb - sx) * (i1_lo - sa * i0_lo) + (sx - sa) * (sb * i0_hi - i1_hi))
        for loc, mass in self.speed.atoms:
            if a < loc < b:
                sl = float(self.scale(loc))
                g = 2.0 * (min(sx, sl) - sa) * (sb - max(sx, sl)) / span
                out += g * mass
        return out

    def exit_probability_up(self, a: float, x: float, b: float) -> float:
        """P(hit b before a | start at x) = (s(x)-s(a)) / (s(b)-s(a))."""
        if not a < x < b:
            raise ValueError("need a < x < b")
        sa, sx, sb = (float(self.scale(v)) for v in (a, x, b))
        return (sx - sa) / (sb - sa)

    @property
    def speed_is_tilde(self) -> bool:
        """m equals m-tilde structurally (up to the a.e. class on the dust)."""
        sp = self.speed
        if sp.kind != "tilde":
            return False
        if sp.scale is self.scale:
            return True
        return isinstance(self.scale, SubspaceScale) and sp.scale is self.scale.parent

    def describe(self) -> dict:
        d = {"label": self.label}
        for k, v in self.scale.describe().items():
            d["scale_" + k] = v
        for k, v in self.speed.describe().items():
            d["speed_" + k] = v
        return d
