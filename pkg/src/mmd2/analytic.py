"""Closed-form stationary solutions.

All three chains have a geometric tail ``pi_k = C r**k`` where ``r`` is the
root in (0, 1) of::

    mu12 r^2 + (mu1 + mu2 + mu12) r - lam = 0

The boundary probabilities follow from the balance equations at the empty
and single-customer states. Every solution is checked against those balance
equations when it is built.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import ModelParams, het_labels
from .errors import DomainError, MisuseError, NumericalError
from .mo_bve import MOParams

__all__ = [
    "Stability",
    "ClosedFormSolution",
    "Moments",
    "ReferenceMM2",
    "stability",
    "tail_root",
    "negative_root",
    "solve_het",
    "solve_hom",
    "solve_bulk",
    "moments",
    "mm2_het_reference",
    "mm2_hom_moments",
    "balance_residual",
    "SMALL_MU12",
]

# below SMALL_MU12 * (mu1 + mu2) the tail root is taken from the linearised equation
SMALL_MU12 = 1e-12
SELF_CHECK_TOL = 1e-8


@dataclass(frozen=True)
class Stability:
    stable: bool
    rho: float

    def __bool__(self) -> bool:
        return self.stable


@dataclass(frozen=True)
class ClosedFormSolution:
    """Tail ratio, constants and boundary probabilities of a stationary law.

    ``kind`` is ``"het"`` (states 0, (1,0), (0,1), 2, ...), ``"hom"`` or
    ``"bulk"`` (states 0, 1, 2, ...). For the lumped kinds ``pi_10`` holds
    the single-customer probability and ``pi_01`` is ``None``.
    """

    kind: str
    r: float
    C: float
    pi0: float
    pi_10: float
    pi_01: float | None
    rho: float
    delta: float
    A: float | None = None
    B: float | None = None
    P_of_r: float | None = None

    @property
    def pi1(self) -> float:
        """Total probability of exactly one customer."""
        return self.pi_10 + (self.pi_01 or 0.0)

    def pi_level(self, k: int) -> float:
        if k == 0:
            return self.pi0
        if k == 1:
            return self.pi1
        return self.C * self.r**k

    def vector(self, levels: int) -> np.ndarray:
        """Probabilities in chain state order up to ``levels`` customers (no tail lumping)."""
        tail = self.C * self.r ** np.arange(2, levels + 1)
        if self.kind == "het":
            head = [self.pi0, self.pi_10, self.pi_01]
        else:
            head = [self.pi0, self.pi_10]
        return np.concatenate([head, tail])

    def labels(self, levels: int) -> tuple[str, ...]:
        if self.kind == "het":
            return het_labels(levels)
        return tuple(str(k) for k in range(levels + 1))


@dataclass(frozen=True)
class Moments:
    EL: float
    EQ: float


@dataclass(frozen=True)
class ReferenceMM2:
    """Independent heterogeneous M/M/2 with arrivals to an idle system sent to the faster server."""

    P0: float
    P_10: float
    P_01: float
    P1: float
    rho0: float
    C_star: float
    EL0: float
    EQ0: float

    def P(self, k: int) -> float:
        if k == 0:
            return self.P0
        return self.rho0 ** (k - 1) * self.P1


def stability(model: ModelParams) -> Stability:
    m = model.mo
    rho = model.lam / (m.mu1 + m.mu2 + 2 * m.mu12)
    return Stability(rho < 1.0, rho)


def _discriminant(mo: MOParams, lam: float) -> float:
    return mo.total**2 + 4 * lam * mo.mu12


def tail_root(mo: MOParams, lam: float) -> float:
    """Positive root of ``mu12 r^2 + (mu1 + mu2 + mu12) r - lam = 0``.

    Uses the conjugate form ``2 lam / (s + sqrt(s^2 + 4 lam mu12))`` which
    stays accurate as ``mu12 -> 0``; for negligible ``mu12`` the linear
    equation is refined by one fixed-point step from ``lam / (mu1 + mu2)``.
    """
    if not lam > 0:
        raise DomainError(f"lambda must be > 0, got {lam}")
    drift = mo.mu1 + mo.mu2 + 2 * mo.mu12
    if lam >= drift:
        raise DomainError(
            f"unstable: need lambda < mu1 + mu2 + 2*mu12 (lambda={lam:g}, mu1+mu2+2*mu12={drift:g})"
        )
    s = mo.total
    if mo.mu12 < SMALL_MU12 * (mo.mu1 + mo.mu2):
        r0 = lam / (mo.mu1 + mo.mu2)
        return (lam - mo.mu12 * r0 * r0) / s
    return 2 * lam / (s + math.sqrt(_discriminant(mo, lam)))


def negative_root(mo: MOParams, lam: float) -> float:
    """The discarded root ``r_-`` (``-inf`` when ``mu12 == 0``)."""
    if mo.mu12 == 0:
        return -math.inf
    return (-mo.total - math.sqrt(_discriminant(mo, lam))) / (2 * mo.mu12)


def _het_constants(model: ModelParams, r: float) -> tuple[float, float, float]:
    lam, p = model.lam, model.p
    m1, m2, m12 = model.mo.mu1, model.mo.mu2, model.mo.mu12
    A = lam - p * m1 + m1 - p * m12 * (r * r + r + 1) + m12 - m2 * r
    B = lam - p * m1 + m1 + m12 + p * m2
    P = (
        lam * m12 * r
        + lam * m12
        + lam * m2
        + m1 * m12 * p * r * r
        + m1 * m12 * r
        + m1 * m12
        + m1 * m2 * r
        + m1 * m2
        + m12 * m12 * r
        + m12 * m12
        - m12 * m2 * p * r * r
        + m12 * m2
        - m2 * m2 * r
    )
    return A, B, P


def solve_het(model: ModelParams, check: bool = True) -> ClosedFormSolution:
    """Stationary law of the heterogeneous chain.

    ``pi0 = C r P(r) / (lam B)``, ``pi_(0,1) = C r A / B``,
    ``pi_(1,0) = C r (B - A) / B`` and ``pi_k = C r^k`` for ``k >= 2``.
    """
    st = stability(model)
    r = tail_root(model.mo, model.lam)
    A, B, P = _het_constants(model, r)
    lam = model.lam
    C = 1.0 / (r * P / (lam * B) + r / (1 - r))
    sol = ClosedFormSolution(
        kind="het",
        r=r,
        C=C,
        pi0=C * r * P / (lam * B),
        pi_10=C * r * (B - A) / B,
        pi_01=C * r * A / B,
        rho=st.rho,
        delta=_discriminant(model.mo, lam),
        A=A,
        B=B,
        P_of_r=P,
    )
    if check:
        _self_check(model, sol)
    return sol


def solve_hom(model: ModelParams, check: bool = True) -> ClosedFormSolution:
    """Stationary law of the homogeneous chain (``mu1 == mu2 == mu``)."""
    if model.mo.mu1 != model.mo.mu2:
        raise MisuseError(f"solve_hom requires mu1 == mu2, got {model.mo.mu1} and {model.mo.mu2}")
    mu, m12, lam = model.mo.mu1, model.mo.mu12, model.lam
    rho = lam / (2 * (mu + m12))
    r = tail_root(model.mo, lam)
    head = ((mu + m12) * r + m12 * r * r) / lam
    C = 1.0 / (head + r / (1 - r))
    B = lam + mu + m12
    sol = ClosedFormSolution(
        kind="hom",
        r=r,
        C=C,
        pi0=C * head,
        pi_10=C * r,
        pi_01=None,
        rho=rho,
        delta=_discriminant(model.mo, lam),
        B=B,
        P_of_r=B * (m12 * (1 + r) + mu),
    )
    if check:
        _self_check(model, sol)
    return sol


def solve_bulk(lam: float, mu12: float) -> ClosedFormSolution:
    """Bulk service of size two: ``pi_k = (1 - r_b) r_b^k`` for all ``k >= 0``."""
    if not (lam > 0 and mu12 > 0):
        raise DomainError("bulk model needs lambda > 0 and mu12 > 0")
    rho = lam / (2 * mu12)
    if rho >= 1:
        raise DomainError(f"unstable: need lambda < 2*mu12 (lambda={lam:g}, 2*mu12={2 * mu12:g})")
    x = 4 * lam / mu12
    # conjugate of (-1 + sqrt(1 + x)) / 2
    r = x / (2 * (1 + math.sqrt(1 + x)))
    C = 1 - r
    return ClosedFormSolution(
        kind="bulk",
        r=r,
        C=C,
        pi0=C,
        pi_10=C * r,
        pi_01=None,
        rho=rho,
        delta=mu12 * mu12 + 4 * lam * mu12,
    )


def moments(sol: ClosedFormSolution) -> Moments:
    r, C = sol.r, sol.C
    d = (1 - r) ** 2
    return Moments(EL=C * r / d, EQ=C * r**3 / d)


def mm2_het_reference(lam: float, mu1: float, mu2: float) -> ReferenceMM2:
    """Independent two-server queue with ``mu1 > mu2``, idle arrivals to server 1."""
    if not mu1 > mu2:
        raise MisuseError(f"reference model assumes mu1 > mu2, got mu1={mu1}, mu2={mu2}")
    if not mu2 > 0:
        raise DomainError("mu2 must be > 0")
    rho0 = lam / (mu1 + mu2)
    if not 0 < rho0 < 1:
        raise DomainError(f"unstable: need 0 < lambda < mu1 + mu2 (rho0={rho0:g})")
    c_star = lam * (lam + mu2) / ((1 + 2 * rho0) * mu1 * mu2) / (1 - rho0)
    P0 = 1 / (1 + c_star)
    P10 = (1 + rho0) / (1 + 2 * rho0) * lam / mu1 * P0
    P01 = rho0 / (1 + 2 * rho0) * lam / mu2 * P0
    P1 = P10 + P01
    d = (1 - rho0) ** 2
    return ReferenceMM2(P0, P10, P01, P1, rho0, c_star, P1 / d, rho0 * rho0 * P1 / d)


def mm2_hom_moments(rho: float) -> Moments:
    """Standard M/M/2 with per-server utilisation ``rho = lam / (2 mu)``."""
    if not 0 <= rho < 1:
        raise DomainError(f"need 0 <= rho < 1, got {rho}")
    den = 1 - rho * rho
    return Moments(EL=2 * rho / den, EQ=2 * rho**3 / den)


def balance_residual(model: ModelParams, sol: ClosedFormSolution, levels: int = 12) -> np.ndarray:
    """Residuals of the global balance equations for states up to ``levels`` customers.

    Uses the exact geometric tail, so no truncation enters. For ``"het"``
    the five equation families of the heterogeneous chain are evaluated
    (including the redundant one at (1,0)); for ``"hom"``/``"bulk"`` the
    lumped chain with ``mu1 = mu2`` (bulk: ``mu = 0``).
    """
    lam = model.lam
    m1, m2, m12 = model.mo.mu1, model.mo.mu2, model.mo.mu12
    pk = lambda k: sol.C * sol.r**k  # noqa: E731
    theta = lam + m1 + m2 + m12
    if sol.kind == "het":
        p, q = model.p, model.q
        pi0, p10, p01 = sol.pi0, sol.pi_10, sol.pi_01
        res = [
            -lam * pi0 + (m1 + m12) * p10 + (m2 + m12) * p01 + m12 * pk(2),
            p * lam * pi0 - (lam + m1 + m12) * p10 + m2 * pk(2) + p * m12 * pk(3),
            q * lam * pi0 - (lam + m2 + m12) * p01 + m1 * pk(2) + q * m12 * pk(3),
            lam * (p10 + p01) - theta * pk(2) + (m1 + m2) * pk(3) + m12 * pk(4),
        ]
        res += [lam * pk(i - 1) - theta * pk(i) + (m1 + m2) * pk(i + 1) + m12 * pk(i + 2) for i in range(3, levels + 1)]
        return np.asarray(res)
    mu = m1
    pi0, pi1 = sol.pi0, sol.pi_10
    res = [
        -lam * pi0 + (mu + m12) * pi1 + m12 * pk(2),
        lam * pi0 - (lam + mu + m12) * pi1 + 2 * mu * pk(2) + m12 * pk(3),
        lam * pi1 - (lam + 2 * mu + m12) * pk(2) + 2 * mu * pk(3) + m12 * pk(4),
    ]
    res += [lam * pk(i - 1) - (lam + 2 * mu + m12) * pk(i) + 2 * mu * pk(i + 1) + m12 * pk(i + 2) for i in range(3, levels + 1)]
    return np.asarray(res)


def _self_check(model: ModelParams, sol: ClosedFormSolution) -> None:
    res = float(np.max(np.abs(balance_residual(model, sol))))
    scale = max(1.0, model.lam + model.mo.total)
    if not math.isfinite(res) or res > SELF_CHECK_TOL * scale:
        raise NumericalError(
            f"closed form fails its balance check: residual {res:.3e} "
            f"(kind={sol.kind}, r={sol.r:.6g}, C={sol.C:.6g}, pi0={sol.pi0:.6g})"
        )
