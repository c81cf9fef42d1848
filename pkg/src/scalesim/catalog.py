"""Bundled diffusion specs used by the experiments and the test suite."""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from .cantor import fat_cantor_spec
from .diffusion import DiffusionSpec, SpeedMeasure
from .scale import (
    build_cantor_scale,
    build_devils_staircase_scale,
    build_orey_scale,
    identity_scale,
    skew_transform,
    subspace_scale,
)

__all__ = [
    "brownian_spec",
    "cantor_spec",
    "staircase_spec",
    "orey_spec",
    "skew_bm_spec",
    "subspace_of",
    "spec_by_name",
]


def brownian_spec() -> DiffusionSpec:
    """Standard Brownian motion: s(x) = x, m = Lebesgue."""
    scale = identity_scale()
    return DiffusionSpec.build(scale, SpeedMeasure.lebesgue(), label="brownian")


def cantor_spec(depth: int = 12, ratio: float = 4.0, speed: str = "tilde") -> DiffusionSpec:
    """Fat-Cantor scale (removals ratio**-n) with m = m-tilde by default."""
    scale, _ = build_cantor_scale(fat_cantor_spec(depth, ratio=ratio))
    if speed == "tilde":
        sp = SpeedMeasure.tilde_of(scale)
    elif speed == "lebesgue":
        sp = SpeedMeasure.lebesgue()
    else:
        raise ValueError(f"unknown speed choice {speed!r}")
    return DiffusionSpec.build(scale, sp, label=f"cantor(depth={depth})")


def staircase_spec(depth: int = 20, speed: str = "lebesgue") -> DiffusionSpec:
    """s(x) = x + c(x) with the standard Cantor function, m = Lebesgue."""
    scale, _ = build_devils_staircase_scale(depth)
    if speed == "lebesgue":
        sp = SpeedMeasure.lebesgue()
    elif speed == "tilde":
        sp = SpeedMeasure.tilde_of(scale)
    else:
        raise ValueError(f"unknown speed choice {speed!r}")
    return DiffusionSpec.build(scale, sp, label=f"staircase(depth={depth})")


def orey_spec(b: Callable | float, label: Optional[str] = None,
              b_antiderivative: Optional[Callable] = None,
              quadrature_tol: float = 1e-9) -> DiffusionSpec:
    """Drift family s' = exp(-2 int b): solves dX = b(X) dt + dB with m = m-tilde."""
    if isinstance(b, (int, float)):
        beta = float(b)

        def b_fn(x):
            x = np.asarray(x, dtype=float)
            out = np.full_like(x, beta)
            return float(out) if x.ndim == 0 else out

        anti = (lambda x: beta * x) if b_antiderivative is None else b_antiderivative
        scale, sp = build_orey_scale(b_fn, quadrature_tol=quadrature_tol, b_antiderivative=anti)
        lbl = label or f"orey(beta={beta})"
    else:
        scale, sp = build_orey_scale(b, quadrature_tol=quadrature_tol,
                                     b_antiderivative=b_antiderivative)
        lbl = label or "orey"
    return DiffusionSpec.build(scale, sp, label=lbl)


def skew_bm_spec(alpha: float) -> DiffusionSpec:
    """alpha-skew Brownian motion via the scale/speed skew transform at 0."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    base = identity_scale()
    scale, speed = skew_transform(base, SpeedMeasure.lebesgue(), x0=0.0,
                                  gamma1=1.0 / alpha, gamma2=1.0 / (1.0 - alpha))
    return DiffusionSpec.build(scale, speed, label=f"skew(alpha={alpha})")


def subspace_of(parent: DiffusionSpec, c: float, label: Optional[str] = None) -> DiffusionSpec:
    """Member of the subspace family: scale s_c, same speed measure."""
    scale = subspace_scale(parent.scale, c)
    lbl = label or f"{parent.label}/c={c:.6g}"
    return DiffusionSpec.build(scale, parent.speed, label=lbl)


def spec_by_name(kind: str, **params) -> DiffusionSpec:
    """Construct one of the bundled specs from a config-style description."""
    kind = kind.lower()
    if kind == "brownian":
        return brownian_spec()
    if kind == "cantor":
        return cantor_spec(depth=int(params.get("depth", 12)),
                           ratio=float(params.get("ratio", 4.0)),
                           speed=params.get("speed", "tilde"))
    if kind == "staircase":
        return staircase_spec(depth=int(params.get("depth", 20)),
                              speed=params.get("speed", "lebesgue"))
    if kind == "orey":
        bspec = params.get("b", params.get("beta", 0.0))
        if isinstance(bspec, str):
            if bspec == "sin":
                return orey_spec(np.sin, label="orey(b=sin)",
                                 b_antiderivative=lambda x: 1.0 - np.cos(x))
            bspec = float(bspec)
        return orey_spec(bspec)
    if kind == "skew":
        return skew_bm_spec(float(params["alpha"]))
    if kind == "subspace-of":
        parent = spec_by_name(params["parent"], **params.get("parent_params", {}))
        c = params.get("c")
        if c is None:
            c = float(params["c_frac"]) * parent.scale.kappa_total
        return subspace_of(parent, float(c))
    raise ValueError(f"unknown spec kind {kind!r}")
