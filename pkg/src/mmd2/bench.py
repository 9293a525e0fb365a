"""Equal-load sweeps of the mean queue length against the common-shock rate.

All three models are held at the same load: with ``D`` the total rate at
which a full system drains (``drift_left``), ``lam = rho * D`` and

* dependent, homogeneous:   ``mu = D/2 - mu12``
* dependent, heterogeneous: ``mu2 = (D - 2 mu12) / (theta + 1)``, ``mu1 = theta mu2``
* independent reference:    ``mu12 = 0``
* bulk reference:           ``mu1 = mu2 = 0``, ``mu12 = D/2``
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import analytic
from .chain import ModelParams
from .errors import DomainError, MisuseError

__all__ = [
    "SweepConfig",
    "SweepRow",
    "RatioSummary",
    "CSV_HEADER",
    "sweep_hom",
    "sweep_het",
    "sweep",
    "ratio_summary",
    "monotonicity_violations",
    "to_csv",
    "to_svg",
    "emit",
]

CSV_HEADER = ("mu12", "mu1", "mu2", "eq_dep", "eq_indep", "eq_bulk", "ratio")


def default_grid(drift_left: float = 15.0, n: int = 151) -> tuple[float, ...]:
    g = np.linspace(0.0, drift_left / 2, n)
    g[-1] = drift_left / 2
    return tuple(float(x) for x in g)


@dataclass(frozen=True)
class SweepConfig:
    rho: float
    drift_left: float = 15.0
    theta: float = 1.0
    grid: tuple[float, ...] | None = None
    p: float = 1.0

    def __post_init__(self) -> None:
        if not 0 < self.rho < 1:
            raise DomainError(f"rho must lie in (0, 1), got {self.rho}")
        if not self.drift_left > 0:
            raise DomainError("drift_left must be > 0")
        if self.theta < 1:
            raise MisuseError(f"theta = mu1/mu2 must be >= 1, got {self.theta}")
        for x in self.mu12_grid:
            if not 0 <= x <= self.drift_left / 2:
                raise DomainError(f"grid value {x} outside [0, {self.drift_left / 2}]")

    @property
    def lam(self) -> float:
        return self.rho * self.drift_left

    @property
    def mu12_grid(self) -> tuple[float, ...]:
        return default_grid(self.drift_left) if self.grid is None else tuple(self.grid)


@dataclass(frozen=True)
class SweepRow:
    mu12: float
    mu1: float
    mu2: float
    EQ_dependent: float
    EQ_independent_ref: float
    EQ_bulk_ref: float
    ratio_to_independent: float

    def as_tuple(self) -> tuple[float, ...]:
        return (
            self.mu12,
            self.mu1,
            self.mu2,
            self.EQ_dependent,
            self.EQ_independent_ref,
            self.EQ_bulk_ref,
            self.ratio_to_independent,
        )


@dataclass(frozen=True)
class RatioSummary:
    max_ratio: float
    argmax_mu12: float


def _bulk_eq(cfg: SweepConfig) -> float:
    return analytic.moments(analytic.solve_bulk(cfg.lam, cfg.drift_left / 2)).EQ


def _row(mu12, mu1, mu2, eq_dep, eq_ind, eq_bulk) -> SweepRow:
    return SweepRow(mu12, mu1, mu2, eq_dep, eq_ind, eq_bulk, eq_dep / eq_ind)


def sweep_hom(cfg: SweepConfig) -> list[SweepRow]:
    """``mu1 = mu2 = D/2 - mu12``; the grid endpoints are the two reference models themselves."""
    if cfg.theta != 1:
        raise MisuseError("sweep_hom needs theta == 1")
    half = cfg.drift_left / 2
    eq_ind = analytic.mm2_hom_moments(cfg.rho).EQ
    eq_bulk = _bulk_eq(cfg)
    rows = []
    for mu12 in cfg.mu12_grid:
        mu = half - mu12
        if mu12 == 0:
            eq = eq_ind
        elif mu12 == half:
            eq = eq_bulk
            mu = 0.0
        else:
            eq = analytic.moments(analytic.solve_hom(ModelParams.of(cfg.lam, mu, mu, mu12, p=cfg.p))).EQ
        rows.append(_row(mu12, mu, mu, eq, eq_ind, eq_bulk))
    return rows


def sweep_het(cfg: SweepConfig) -> list[SweepRow]:
    """Heterogeneous split at fixed ``theta = mu1/mu2 > 1`` with idle arrivals routed by ``cfg.p``."""
    if not cfg.theta > 1:
        raise MisuseError(f"sweep_het needs theta > 1, got {cfg.theta}")
    d, th = cfg.drift_left, cfg.theta
    half = d / 2
    ref = analytic.mm2_het_reference(cfg.lam, th * d / (th + 1), d / (th + 1))
    eq_bulk = _bulk_eq(cfg)
    rows = []
    for mu12 in cfg.mu12_grid:
        mu2 = (d - 2 * mu12) / (th + 1)
        mu1 = th * mu2
        if mu12 == 0:
            eq = ref.EQ0
        elif mu12 == half:
            eq = eq_bulk
            mu1 = mu2 = 0.0
        else:
            eq = analytic.moments(analytic.solve_het(ModelParams.of(cfg.lam, mu1, mu2, mu12, p=cfg.p))).EQ
        rows.append(_row(mu12, mu1, mu2, eq, ref.EQ0, eq_bulk))
    return rows


def sweep(cfg: SweepConfig) -> list[SweepRow]:
    return sweep_hom(cfg) if cfg.theta == 1 else sweep_het(cfg)


def ratio_summary(rho: float, drift_left: float = 15.0, grid_n: int = 151) -> RatioSummary:
    """Largest dependent/independent ratio over the homogeneous sweep."""
    rows = sweep_hom(SweepConfig(rho, drift_left, grid=default_grid(drift_left, grid_n)))
    best = max(rows, key=lambda r: r.ratio_to_independent)
    return RatioSummary(best.ratio_to_independent, best.mu12)


def monotonicity_violations(rows: Sequence[SweepRow]) -> list[tuple[SweepRow, SweepRow]]:
    """Consecutive grid pairs where the dependent queue length decreases."""
    return [(a, b) for a, b in zip(rows, rows[1:]) if b.EQ_dependent < a.EQ_dependent]


def to_csv(rows: Iterable[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(["%.12g" % v for v in r.as_tuple()])
    return buf.getvalue()


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    out = []
    x = start
    while x <= hi + 1e-9 * step:
        out.append(round(x, 12))
        x += step
    return out


def to_svg(rows: Sequence[SweepRow], title: str = "") -> str:
    """Line chart: dependent curve plus independent and bulk reference lines."""
    W, H = 800, 600
    left, right, top, bottom = 80, 30, 50, 70
    xs = [r.mu12 for r in rows]
    series = [
        ("dependent", "#1f77b4", [r.EQ_dependent for r in rows]),
        ("independent", "#2ca02c", [r.EQ_independent_ref for r in rows]),
        ("bulk", "#d62728", [r.EQ_bulk_ref for r in rows]),
    ]
    ys = [y for _, _, s in series for y in s]
    x0, x1 = min(xs), max(xs)
    y0, y1 = 0.0, max(ys) * 1.05 if max(ys) > 0 else 1.0
    if x1 == x0:
        x1 = x0 + 1.0

    def px(x):
        return left + (x - x0) / (x1 - x0) * (W - left - right)

    def py(y):
        return H - bottom - (y - y0) / (y1 - y0) * (H - top - bottom)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<line x1="{left}" y1="{H - bottom}" x2="{W - right}" y2="{H - bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{H - bottom}" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        X = px(t)
        out.append(f'<line x1="{X:.2f}" y1="{H - bottom}" x2="{X:.2f}" y2="{H - bottom + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{H - bottom + 20}" font-size="12" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y0, y1):
        Y = py(t)
        out.append(f'<line x1="{left - 5}" y1="{Y:.2f}" x2="{left}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{Y + 4:.2f}" font-size="12" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{(left + W - right) / 2:.1f}" y="{H - 20}" font-size="14" text-anchor="middle">mu12</text>')
    out.append(
        f'<text x="20" y="{(top + H - bottom) / 2:.1f}" font-size="14" text-anchor="middle" '
        f'transform="rotate(-90 20 {(top + H - bottom) / 2:.1f})">E[Q]</text>'
    )
    if title:
        out.append(f'<text x="{W / 2:.1f}" y="30" font-size="16" text-anchor="middle">{title}</text>')
    for i, (name, colour, s) in enumerate(series):
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, s))
        dash = "" if name == "dependent" else ' stroke-dasharray="6,4"'
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="2"{dash} points="{pts}"/>')
        ly = top + 15 + 18 * i
        out.append(
            f'<text x="{W - right - 10}" y="{ly}" font-size="12" text-anchor="end" fill="{colour}">{name}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit(rows: Sequence[SweepRow], path, fmt: str | None = None, title: str = "") -> Path:
    """Write rows as CSV or SVG; the format defaults to the file suffix."""
    if not rows:
        raise DomainError("nothing to emit")
    path = Path(path)
    fmt = fmt or ("svg" if path.suffix.lower() == ".svg" else "csv")
    if fmt == "csv":
        text = to_csv(rows)
    elif fmt == "svg":
        text = to_svg(rows, title)
    else:
        raise DomainError(f"unknown format {fmt!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path
