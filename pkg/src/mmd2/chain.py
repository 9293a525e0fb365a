"""Truncated generators of the queue-length chains and a direct stationary solver.

Three chains are covered:

* heterogeneous servers, states ``0, (1,0), (0,1), 2, 3, ...``
* homogeneous servers (``mu1 == mu2``), states ``0, 1, 2, ...``
* the bulk-service limit (``mu1 = mu2 = 0``), states ``0, 1, 2, ...``

``levels`` is always the largest customer count kept. The top level is
reflecting: its arrival rate is dropped and the diagonal re-balanced.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.csgraph

from .errors import ConfigError, DomainError, MisuseError, NumericalError
from .mo_bve import MOParams

__all__ = [
    "ModelParams",
    "GeneratorMatrix",
    "StationaryVector",
    "het_labels",
    "build_het",
    "build_hom",
    "build_bulk",
    "solve_truncated",
    "default_levels",
]


@dataclass(frozen=True)
class ModelParams:
    """Arrival rate, idle-system routing probability to server 1, and the shock rates."""

    lam: float
    p: float
    mo: MOParams

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise DomainError(f"lambda must be > 0, got {self.lam!r}")
        if not 0.0 <= self.p <= 1.0:
            raise DomainError(f"p must lie in [0, 1], got {self.p!r}")

    @classmethod
    def of(cls, lam: float, mu1: float, mu2: float, mu12: float, p: float = 0.5) -> "ModelParams":
        return cls(lam, p, MOParams(mu1, mu2, mu12))

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def homogeneous(self) -> bool:
        return self.mo.mu1 == self.mo.mu2


def het_labels(levels: int) -> tuple[str, ...]:
    return ("0", "(1,0)", "(0,1)") + tuple(str(k) for k in range(2, levels + 1))


@dataclass
class GeneratorMatrix:
    """Dense storage of a truncated generator plus state labels.

    ``level[i]`` is the number of customers in state ``i``; bandwidths are
    measured in levels, so ``(1,0)`` and ``(0,1)`` both sit at level 1.
    """

    matrix: np.ndarray
    labels: tuple[str, ...]
    level: np.ndarray
    truncation_mode: str = "reflecting-at-top"
    _index: dict = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._index = {lab: i for i, lab in enumerate(self.labels)}

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def index(self, label) -> int:
        return self._index[str(label)]

    def entry(self, row, col) -> float:
        return float(self.matrix[self.index(row), self.index(col)])

    def entries(self) -> dict[tuple[str, str], float]:
        """Nonzero entries keyed by ``(row_label, col_label)``."""
        rows, cols = np.nonzero(self.matrix)
        return {(self.labels[i], self.labels[j]): float(self.matrix[i, j]) for i, j in zip(rows, cols)}

    def bandwidth(self) -> tuple[int, int]:
        """(levels jumped down, levels jumped up) over all positive off-diagonal rates."""
        rows, cols = np.nonzero(self.matrix)
        off = rows != cols
        jumps = self.level[cols[off]] - self.level[rows[off]]
        if jumps.size == 0:
            return 0, 0
        return int(max(0, -jumps.min())), int(max(0, jumps.max()))

    def row_sums(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    def to_csv(self, path) -> None:
        """Debug dump: one ``row,col,rate`` line per nonzero entry."""
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row", "col", "rate"])
            for (r, c), v in self.entries().items():
                w.writerow([r, c, "%.12g" % v])


def _finish(g: np.ndarray, labels, level) -> GeneratorMatrix:
    np.fill_diagonal(g, 0.0)
    np.fill_diagonal(g, -g.sum(axis=1))
    return GeneratorMatrix(g, tuple(labels), np.asarray(level, dtype=int))


def build_het(model: ModelParams, levels: int) -> GeneratorMatrix:
    """Generator of the heterogeneous chain truncated at ``levels`` customers."""
    if levels < 5:
        raise ConfigError(f"heterogeneous truncation needs levels >= 5, got {levels}")
    lam, p, q = model.lam, model.p, model.q
    m1, m2, m12 = model.mo.mu1, model.mo.mu2, model.mo.mu12
    labels = het_labels(levels)
    n = len(labels)
    # index of level k >= 2 is k + 1
    g = np.zeros((n, n))
    g[0, 1], g[0, 2] = p * lam, q * lam
    g[1, 0], g[1, 3] = m1 + m12, lam
    g[2, 0], g[2, 3] = m2 + m12, lam
    g[3, 0], g[3, 1], g[3, 2], g[3, 4] = m12, m2, m1, lam
    g[4, 1], g[4, 2], g[4, 3] = p * m12, q * m12, m1 + m2
    for i in range(5, n):
        g[i, i - 2] = m12
        g[i, i - 1] = m1 + m2
    for i in range(4, n - 1):
        g[i, i + 1] = lam
    level = [0, 1, 1] + list(range(2, levels + 1))
    return _finish(g, labels, level)


def _birth_multi_death(lam: float, one: list[float], two: list[float], levels: int) -> np.ndarray:
    # one[k], two[k]: rates k -> k-1 and k -> k-2 (index clipped at the last given value)
    n = levels + 1
    g = np.zeros((n, n))
    for k in range(n):
        if k + 1 < n:
            g[k, k + 1] = lam
        if k >= 1:
            g[k, k - 1] = one[min(k, len(one) - 1)]
        if k >= 2:
            g[k, k - 2] = two[min(k, len(two) - 1)]
    return g


def build_hom(model: ModelParams, levels: int) -> GeneratorMatrix:
    """Generator of the homogeneous chain (states 0, 1, 2, ...)."""
    if model.mo.mu1 != model.mo.mu2:
        raise MisuseError("build_hom requires mu1 == mu2")
    if levels < 4:
        raise ConfigError(f"homogeneous truncation needs levels >= 4, got {levels}")
    mu, m12 = model.mo.mu1, model.mo.mu12
    g = _birth_multi_death(model.lam, [0.0, mu + m12, 2 * mu], [0.0, 0.0, m12], levels)
    return _finish(g, [str(k) for k in range(levels + 1)], range(levels + 1))


def build_bulk(lam: float, mu12: float, levels: int) -> GeneratorMatrix:
    """Generator of the bulk-service (batch size 2) single server queue."""
    if not (lam > 0 and mu12 > 0):
        raise DomainError("bulk chain needs lambda > 0 and mu12 > 0")
    if levels < 4:
        raise ConfigError(f"bulk truncation needs levels >= 4, got {levels}")
    g = _birth_multi_death(lam, [0.0, mu12, 0.0], [0.0, 0.0, mu12], levels)
    return _finish(g, [str(k) for k in range(levels + 1)], range(levels + 1))


def default_levels(r: float | None = None, floor: int = 60, eps: float = 1e-14) -> int:
    """Smallest level ``N >= floor`` with ``r**N < eps``."""
    if r is None or r <= 0:
        return floor
    if r >= 1:
        raise DomainError(f"tail ratio must be < 1 for truncation, got {r}")
    return max(floor, int(math.ceil(math.log(eps) / math.log(r))) + 1)


@dataclass
class StationaryVector:
    pi: np.ndarray
    labels: tuple[str, ...]
    residual: float
    zero_states: tuple[str, ...] = ()

    def __getitem__(self, label) -> float:
        return float(self.pi[self.labels.index(str(label))])

    def by_level(self, level: np.ndarray) -> np.ndarray:
        """Probabilities aggregated by customer count."""
        return np.bincount(level, weights=self.pi)


def solve_truncated(g: GeneratorMatrix, tol: float = 1e-12) -> StationaryVector:
    """Solve ``pi g = 0``, ``sum(pi) = 1`` by replacing one balance equation.

    Raises :class:`NumericalError` when LAPACK reports an ill-conditioned
    system or the achieved residual exceeds ``tol`` (scaled by the largest
    exit rate when that exceeds one).
    """
    q = g.matrix
    n = q.shape[0]
    a = q.copy()
    a[:, -1] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            pi = scipy.linalg.solve(a.T, b)
        except (scipy.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
            raise NumericalError(f"stationary solve failed on a {n}x{n} generator: {exc}") from exc
    residual = float(np.max(np.abs(pi @ q)))
    scale = max(1.0, float(np.max(-np.diag(q))))
    if not np.all(np.isfinite(pi)) or residual > tol * scale:
        raise NumericalError(f"stationary solve residual {residual:.3e} exceeds {tol * scale:.3e}")
    if pi.min() < -tol:
        raise NumericalError(f"stationary solve produced a negative probability {pi.min():.3e}")
    # round-off can leave tiny negatives deep in the tail
    pi = np.clip(pi, 0.0, None)
    unreachable = _unreachable(q)
    pi[unreachable] = 0.0
    zero = tuple(g.labels[i] for i in unreachable)
    return StationaryVector(pi, g.labels, residual, zero)


def _unreachable(q: np.ndarray) -> list[int]:
    """States that cannot be entered from the empty state."""
    adj = scipy.sparse.csr_matrix(q > 0)
    seen = scipy.sparse.csgraph.breadth_first_order(adj, 0, directed=True, return_predecessors=False)
    return sorted(set(range(q.shape[0])) - set(int(i) for i in seen))
