"""Marshall-Olkin bivariate exponential law.

The pair (X, Y) is built from three independent exponential shock clocks
``T1 ~ Exp(mu1)``, ``T2 ~ Exp(mu2)`` and ``T12 ~ Exp(mu12)``::

    X = min(T1, T12),    Y = min(T2, T12)

so that the joint survival function is

    P(X > x, Y > y) = exp(-(mu1*x + mu2*y + mu12*max(x, y))).

The law has an atom on the diagonal ``X == Y`` of mass
``mu12 / (mu1 + mu2 + mu12)``; densities on and off the diagonal are with
respect to different measures and are returned as tagged values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DomainError

__all__ = [
    "MOParams",
    "MOProperties",
    "ServicePair",
    "Density",
    "survival",
    "density",
    "derived_properties",
    "conditional_density",
    "diagonal_atom",
    "conditional_exceedance",
    "sample",
    "sample_many",
]


@dataclass(frozen=True)
class MOParams:
    """Shock rates: ``mu1`` kills server 1 only, ``mu2`` server 2 only, ``mu12`` both."""

    mu1: float
    mu2: float
    mu12: float

    def __post_init__(self) -> None:
        for name in ("mu1", "mu2", "mu12"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise DomainError(f"{name} must be finite and >= 0, got {v!r}")
        if self.mu1 + self.mu12 <= 0 or self.mu2 + self.mu12 <= 0:
            raise DomainError(
                "each marginal rate (mu1 + mu12, mu2 + mu12) must be positive, "
                f"got mu1={self.mu1}, mu2={self.mu2}, mu12={self.mu12}"
            )

    @property
    def total(self) -> float:
        """Rate of min(X, Y), i.e. ``mu1 + mu2 + mu12``."""
        return self.mu1 + self.mu2 + self.mu12


@dataclass(frozen=True)
class MOProperties:
    marginal_rate_1: float
    marginal_rate_2: float
    min_rate: float
    p_equal: float
    correlation: float
    p_x_less_y: float
    p_y_less_x: float


@dataclass(frozen=True)
class ServicePair:
    x1: float
    x2: float
    common_shock: bool


@dataclass(frozen=True)
class Density:
    """A density value tagged with the measure it refers to.

    ``off_diagonal`` values are per unit area (Lebesgue on the plane);
    ``diagonal`` values are per unit length along ``x == y``.
    """

    value: float
    measure: Literal["off_diagonal", "diagonal"]


def survival(params: MOParams, x, y):
    """Joint survival ``P(X > x, Y > y)``; broadcasts over array inputs."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x < 0) or np.any(y < 0):
        raise DomainError("survival is defined for x >= 0 and y >= 0")
    out = np.exp(-(params.mu1 * x + params.mu2 * y + params.mu12 * np.maximum(x, y)))
    return float(out) if out.ndim == 0 else out


def density(params: MOParams, x: float, y: float) -> Density:
    """Density of the pair at ``(x, y)``.

    Off the diagonal this is the mixed partial of the survival function::

        y < x:  mu2 (mu1 + mu12) exp(-(mu1 + mu12) x - mu2 y)
        x < y:  mu1 (mu2 + mu12) exp(-(mu2 + mu12) y - mu1 x)

    On the diagonal it is the one-dimensional density of the common value,
    ``mu12 exp(-(mu1 + mu2 + mu12) z)``.
    """
    if not (x > 0 and y > 0):
        raise DomainError(f"density needs x > 0 and y > 0, got ({x}, {y})")
    m1, m2, m12 = params.mu1, params.mu2, params.mu12
    if x == y:
        return Density(m12 * math.exp(-params.total * x), "diagonal")
    if y < x:
        v = m2 * (m1 + m12) * math.exp(-(m1 + m12) * x - m2 * y)
    else:
        v = m1 * (m2 + m12) * math.exp(-(m2 + m12) * y - m1 * x)
    return Density(v, "off_diagonal")


def derived_properties(params: MOParams) -> MOProperties:
    s = params.total
    p_eq = params.mu12 / s
    return MOProperties(
        marginal_rate_1=params.mu1 + params.mu12,
        marginal_rate_2=params.mu2 + params.mu12,
        min_rate=s,
        p_equal=p_eq,
        correlation=p_eq,
        p_x_less_y=params.mu1 / s,
        p_y_less_x=params.mu2 / s,
    )


def _orient(params: MOParams, given: int) -> tuple[float, float, float]:
    # (rate of the conditioning component's own shock, rate of the other's, common)
    if given == 1:
        return params.mu1, params.mu2, params.mu12
    if given == 2:
        return params.mu2, params.mu1, params.mu12
    raise DomainError(f"given must be 1 or 2, got {given!r}")


def conditional_density(params: MOParams, given: int, at: float, y: float) -> float:
    """Absolutely continuous part of the density of the other component.

    With ``given=1`` this is ``f_{Y|X}(y | X=at)``; ``given=2`` gives
    ``f_{X|Y}(y | Y=at)``. Obtained as joint density over marginal::

        y > at:  a (b + c) / (a + c) * exp(-(b + c) y + c at)
        y < at:  b exp(-b y)

    where ``a`` is the conditioning component's own shock rate, ``b`` the
    other's and ``c`` the common rate. The remaining mass sits on ``y == at``
    (see :func:`diagonal_atom`).
    """
    if not (at > 0 and y > 0):
        raise DomainError("conditional density needs at > 0 and y > 0")
    if y == at:
        raise DomainError("y == at carries a point mass, use diagonal_atom()")
    a, b, c = _orient(params, given)
    if y > at:
        return a * (b + c) / (a + c) * math.exp(-(b + c) * y + c * at)
    return b * math.exp(-b * y)


def diagonal_atom(params: MOParams, given: int, at: float) -> float:
    """``P(other == at | given component == at)``."""
    if not at > 0:
        raise DomainError("at must be > 0")
    a, b, c = _orient(params, given)
    return c / (a + c) * math.exp(-b * at)


def conditional_exceedance(params: MOParams, given: int, at: float) -> float:
    """``P(other > at | given component == at)``.

    With ``given=2`` this is ``P(S1 > t | S2 = t) = mu2 / (mu2 + mu12) * exp(-mu1 t)``.
    """
    if not at > 0:
        raise DomainError("at must be > 0")
    a, b, c = _orient(params, given)
    return a / (a + c) * math.exp(-b * at)


def _clock(rng: np.random.Generator, rate: float, size=None):
    if rate == 0.0:
        return math.inf if size is None else np.full(size, np.inf)
    return rng.exponential(1.0 / rate, size)


def sample(params: MOParams, rng: np.random.Generator) -> ServicePair:
    t1 = _clock(rng, params.mu1)
    t2 = _clock(rng, params.mu2)
    t12 = _clock(rng, params.mu12)
    common = t12 < t1 and t12 < t2
    return ServicePair(min(t1, t12), min(t2, t12), bool(common))


def sample_many(params: MOParams, rng: np.random.Generator, n: int):
    """Vectorised :func:`sample`; returns ``(x1, x2, common_shock)`` arrays.

    The stream is consumed clock by clock, not pair by pair, so results
    differ from ``n`` scalar calls on the same generator.
    """
    t1 = _clock(rng, params.mu1, n)
    t2 = _clock(rng, params.mu2, n)
    t12 = _clock(rng, params.mu12, n)
    common = (t12 < t1) & (t12 < t2)
    return np.minimum(t1, t12), np.minimum(t2, t12), common
