"""Rotation angles for the exact and approximate PITE blocks.

A block with angle ``theta`` multiplies an eigencomponent by ``cos(theta)``.
Each variant picks ``theta`` as a function of ``y = dtau * lambda`` so that
``cos(theta) / m0`` approximates ``exp(-y)``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .grid import SpectralDiagonal

VARIANTS = ("exact", "aapite", "apite", "vs_apite")
AAPITE_ORDERS = (1, 2, 4)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PiteConfig:
    """How each ITE factor is approximated.

    ``potential_variant`` overrides ``variant`` for the potential factor
    only; ``None`` means both factors use ``variant``.
    """

    variant: str = "aapite"
    order: int = 1
    m0: float = 1.0
    dtau: float = 1e-3
    trotter_order: int = 1
    vs_dtau: Optional[tuple] = None
    potential_variant: Optional[str] = None
    mode: str = "direct"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.potential_variant not in (None,) + VARIANTS:
            raise ConfigError(f"unknown potential variant {self.potential_variant!r}")
        if self.order not in AAPITE_ORDERS:
            raise ConfigError(f"order must be one of {AAPITE_ORDERS}")
        if not 0 < self.m0 <= 1:
            raise ConfigError("m0 must lie in (0, 1]")
        uses_apite = {self.variant, self.potential_variant} & {"apite", "vs_apite"}
        if uses_apite and not self.m0 < 1:
            raise ConfigError("APITE variants need m0 < 1")
        if not self.dtau > 0:
            raise ConfigError("dtau must be positive")
        if self.trotter_order not in (1, 2):
            raise ConfigError("trotter_order must be 1 or 2")
        if self.variant == "vs_apite":
            if self.vs_dtau is None or len(self.vs_dtau) != 2:
                raise ConfigError("vs_apite needs vs_dtau = (dtau_min, dtau_max)")
            lo, hi = self.vs_dtau
            if not 0 < lo <= hi:
                raise ConfigError("vs_dtau must satisfy 0 < min <= max")
        if self.mode not in ("direct", "circuit"):
            raise ConfigError(f"unknown mode {self.mode!r}")

    def for_potential(self) -> "PiteConfig":
        if self.potential_variant is None:
            return self
        return replace(self, variant=self.potential_variant, potential_variant=None,
                       vs_dtau=self.vs_dtau if self.potential_variant == "vs_apite" else None)


@dataclass(frozen=True)
class ThetaDiagonal(SpectralDiagonal):
    """Angles folded into ``[0, pi]``; ``over_range`` marks entries past ``pi/2``."""

    over_range: int = 0


def fold_angle(theta: np.ndarray) -> np.ndarray:
    """Map angles into ``[0, pi]`` without changing ``cos(theta)``."""
    t = np.mod(theta, 2 * np.pi)
    return np.where(t > np.pi, 2 * np.pi - t, t)


def apite_slope(m0: float) -> tuple:
    theta0 = float(np.arccos(m0))
    return theta0, m0 / np.sqrt(1 - m0 ** 2)


def theta_values(variant: str, y, m0: float = 1.0, order: int = 1) -> np.ndarray:
    """Raw (unfolded) angles for ``y = dtau * lambda >= 0``."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ValueError("PITE needs a non-negative spectrum")
    if variant == "exact":
        return np.arccos(m0 * np.exp(-y))
    if variant == "aapite":
        x = np.sqrt(y)
        r2 = np.sqrt(2.0)
        th = r2 * x
        if order >= 2:
            th = th - r2 * x ** 3 / 6
        if order >= 4:
            th = th + r2 * x ** 5 / 120 + r2 * x ** 7 / 336
        return th
    if variant in ("apite", "vs_apite"):
        theta0, s0 = apite_slope(m0)
        return theta0 + s0 * y
    raise ValueError(f"unknown variant {variant!r}")


def build_theta(cfg: PiteConfig, lam: SpectralDiagonal, dtau: float) -> ThetaDiagonal:
    """Angles for one block with eigenvalues ``lam`` and step ``dtau``."""
    m0 = cfg.m0 if cfg.variant != "aapite" else 1.0
    raw = theta_values(cfg.variant, dtau * lam.values, m0=m0, order=cfg.order)
    return ThetaDiagonal(fold_angle(raw), lam.basis,
                         over_range=int(np.count_nonzero(raw > np.pi / 2)))


def block_gain(cfg: PiteConfig) -> float:
    """Classical factor undoing the ``m0`` a block multiplies into every amplitude."""
    return 1.0 if cfg.variant == "aapite" else 1.0 / cfg.m0


def apite_hidden_constraint(m0: float, y) -> bool:
    """True when ``|cos(theta0 + s0 y) / m0| <= 1`` for every ``y``."""
    theta0, s0 = apite_slope(m0)
    return bool(np.all(np.abs(np.cos(theta0 + s0 * np.asarray(y))) <= m0 + 1e-15))


def vs_schedule(dtau_min: float, dtau_max: float, K: int) -> np.ndarray:
    """Linear ramp of ``K`` steps from ``dtau_min`` to ``dtau_max``."""
    if K < 1:
        raise ValueError("K must be at least 1")
    if K == 1:
        return np.array([dtau_min], dtype=float)
    j = np.arange(K)
    return dtau_min + j / (K - 1) * (dtau_max - dtau_min)


def vs_steps_for_time(dtau_min: float, dtau_max: float, T: float) -> int:
    """Number of ramp steps whose total is closest to ``T``."""
    return max(1, int(round(2 * T / (dtau_min + dtau_max))))


def underlying_function(method: str, y, m0: float = 0.9) -> np.ndarray:
    """Scalar maps the different schemes apply per eigenvalue, ``y = dtau * lambda``.

    ``exa``: exp(-y); ``hhl``: 1/(1+y); ``aap``: cos(sqrt(2y)); ``aap2`` and
    ``aap4``: cos of the order-2/4 series angle;
    ``oap``: cos(arccos(m0) + m0 y / sqrt(1 - m0^2)) / m0.  Names are
    case-insensitive.
    """
    y = np.asarray(y, dtype=float)
    key = method.lower()
    if key == "exa":
        return np.exp(-y)
    if key == "hhl":
        return 1.0 / (1.0 + y)
    if key in ("aap", "aap2", "aap4"):
        order = 1 if key == "aap" else int(key[-1])
        return np.cos(theta_values("aapite", y, order=order))
    if key == "oap":
        theta0, s0 = apite_slope(m0)
        return np.cos(theta0 + s0 * y) / m0
    raise ValueError(f"unknown method {method!r}")
