"""Discrete-event simulation of the two-server queue with common-shock services.

Service is driven by three exponential clocks, stored as absolute firing
times: a per-server clock for each busy server and one common clock shared
by the busy servers. A per-server firing completes that server only; the
common firing completes every busy server at once. A clock is redrawn only
when its owner starts afresh:

* arrival to an empty system: routed to server 1 w.p. ``p``; fresh own clock
  and fresh common clock;
* arrival while one server is busy: the idle server gets a fresh own clock
  and joins the *running* common clock;
* single completion with customers waiting: fresh own clock for that server;
* common completion: both clocks restart for whoever is left. A lone
  survivor (three customers before the shock) is routed to server 1 w.p. ``p``.

The loop itself is compiled with numba; replications run on independent
seeds spawned from one :class:`numpy.random.SeedSequence`.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np
from scipy import stats

from .chain import ModelParams
from .errors import ConfigError

__all__ = ["SimConfig", "Interval", "SimCounters", "SimEstimate", "run", "replicate", "write_trace", "trace_csv", "state_label"]

# event kinds in the trace
ARRIVAL, SHOCK_1, SHOCK_2, SHOCK_12 = 0, 1, 2, 3
EVENT_NAMES = ("arrival", "shock1", "shock2", "shock12")
# embedded targets out of state 2
TO_0, TO_10, TO_01, TO_3 = 0, 1, 2, 3


@dataclass(frozen=True)
class SimConfig:
    model: ModelParams
    horizon: float
    warmup: float | None = None
    replications: int = 1
    seed: int = 0
    policy: str = "fcfs"
    level_cap: int = 1000
    trace_limit: int = 0

    def __post_init__(self) -> None:
        if self.policy != "fcfs":
            raise ConfigError(f"only FCFS is supported, got {self.policy!r}")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if not self.horizon > self.effective_warmup >= 0:
            raise ConfigError(f"need horizon > warmup >= 0 (horizon={self.horizon}, warmup={self.effective_warmup})")
        if self.level_cap < 3:
            raise ConfigError("level_cap must be >= 3")

    @property
    def effective_warmup(self) -> float:
        return 0.1 * self.horizon if self.warmup is None else self.warmup


@dataclass(frozen=True)
class Interval:
    mean: float
    halfwidth: float
    se: float = math.nan

    def covers(self, x: float) -> bool:
        return abs(x - self.mean) <= self.halfwidth

    def __str__(self) -> str:
        return f"{self.mean:.6g} ± {self.halfwidth:.2g}"


@dataclass
class SimCounters:
    """Raw post-warmup tallies, summed over replications."""

    from_2: np.ndarray  # transitions out of state 2 to 0, (1,0), (0,1), 3
    exits_ge2: int
    time_ge2: float
    departures_ge2_common: int
    departures_ge2_single: int
    arrivals_by_state: np.ndarray
    observed_time: float


@dataclass
class SimEstimate:
    pi_hat: dict[str, float]
    pi_halfwidth: dict[str, float]
    EL_hat: Interval
    EQ_hat: Interval
    common_departures: int
    single_departures: int
    replications: int
    counters: SimCounters
    pi_intervals: dict[str, Interval] = field(default_factory=dict)
    arrival_pi_hat: dict[str, Interval] = field(default_factory=dict)
    trace: list[tuple[float, str, str, str]] = field(default_factory=list)

    def interval(self, label: str) -> Interval:
        """Time-fraction interval for a state label ("1" lumps (1,0) and (0,1))."""
        return self.pi_intervals.get(label, Interval(0.0, math.inf))

    def level_interval(self, k: int) -> Interval:
        return self.interval(str(k))


def state_label(idx: int, cap: int) -> str:
    if idx == 0:
        return "0"
    if idx == 1:
        return "(1,0)"
    if idx == 2:
        return "(0,1)"
    k = idx - 1
    return f">={cap}" if k >= cap else str(k)


@numba.njit(cache=True)
def _exp(rate):
    if rate == 0.0:
        return np.inf
    return np.random.exponential(1.0 / rate)


@numba.njit(cache=True, nogil=True)
def _kernel(lam, mu1, mu2, mu12, p, horizon, warmup, seed, cap, trace_cap):
    np.random.seed(seed)
    nidx = cap + 2
    occ = np.zeros(nidx)
    arr_seen = np.zeros(nidx, dtype=np.int64)
    from2 = np.zeros(4, dtype=np.int64)
    # exits_ge2, dep_ge2_common, dep_ge2_single, common_all, single_all
    cnt = np.zeros(5, dtype=np.int64)
    sums = np.zeros(2)  # integral of n dt, integral of (n-2)^+ dt
    tr_t = np.zeros(trace_cap)
    tr_k = np.zeros(trace_cap, dtype=np.int64)
    tr_a = np.zeros(trace_cap, dtype=np.int64)
    tr_b = np.zeros(trace_cap, dtype=np.int64)
    ntr = 0

    inf = np.inf
    t = 0.0
    n = 0
    b1 = False
    b2 = False
    t_arr = _exp(lam)
    c1 = inf
    c2 = inf
    c12 = inf
    idx = 0
    while True:
        tn = t_arr
        kind = 0
        if c1 < tn:
            tn = c1
            kind = 1
        if c2 < tn:
            tn = c2
            kind = 2
        if c12 < tn:
            tn = c12
            kind = 3
        end = tn if tn < horizon else horizon
        lo = t if t > warmup else warmup
        if end > lo:
            dt = end - lo
            occ[idx] += dt
            sums[0] += n * dt
            if n > 2:
                sums[1] += (n - 2) * dt
        if tn >= horizon:
            break
        t = tn
        counting = t > warmup
        before = idx
        n_before = n
        if kind == 0:
            if counting:
                arr_seen[idx] += 1
            t_arr = t + _exp(lam)
            if n == 0:
                c12 = t + _exp(mu12)
                if np.random.random() < p:
                    b1 = True
                    c1 = t + _exp(mu1)
                else:
                    b2 = True
                    c2 = t + _exp(mu2)
            elif n == 1:
                # idle server joins the running common clock
                if b1:
                    b2 = True
                    c2 = t + _exp(mu2)
                else:
                    b1 = True
                    c1 = t + _exp(mu1)
            n += 1
        elif kind == 1 or kind == 2:
            n -= 1
            if n >= 2:
                if kind == 1:
                    c1 = t + _exp(mu1)
                else:
                    c2 = t + _exp(mu2)
            else:
                if kind == 1:
                    b1 = False
                    c1 = inf
                else:
                    b2 = False
                    c2 = inf
                if n == 0:
                    c12 = inf
            if counting:
                cnt[4] += 1
                if n_before >= 2:
                    cnt[2] += 1
        else:
            if n == 1:
                n = 0
                if counting:
                    cnt[4] += 1
            else:
                n -= 2
                if counting:
                    cnt[3] += 1
                    cnt[1] += 1
            b1 = False
            b2 = False
            c1 = inf
            c2 = inf
            c12 = inf
            if n == 1:
                c12 = t + _exp(mu12)
                if np.random.random() < p:
                    b1 = True
                    c1 = t + _exp(mu1)
                else:
                    b2 = True
                    c2 = t + _exp(mu2)
            elif n >= 2:
                b1 = True
                b2 = True
                c1 = t + _exp(mu1)
                c2 = t + _exp(mu2)
                c12 = t + _exp(mu12)

        if n == 0:
            idx = 0
        elif n == 1:
            idx = 1 if b1 else 2
        else:
            idx = n + 1 if n < cap else cap + 1
        if counting:
            if n_before >= 2:
                cnt[0] += 1
            if n_before == 2:
                if n == 0:
                    from2[0] += 1
                elif n == 1:
                    from2[1 if b1 else 2] += 1
                else:
                    from2[3] += 1
        if ntr < trace_cap:
            tr_t[ntr] = t
            tr_k[ntr] = kind
            tr_a[ntr] = before
            tr_b[ntr] = idx
            ntr += 1
    return occ, sums, arr_seen, from2, cnt, tr_t[:ntr], tr_k[:ntr], tr_a[:ntr], tr_b[:ntr]


def _seeds(seed: int, count: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(c.generate_state(1, dtype=np.uint32)[0]) for c in children]


def _one(cfg: SimConfig, seed: int) -> tuple:
    m = cfg.model
    return _kernel(
        m.lam,
        m.mo.mu1,
        m.mo.mu2,
        m.mo.mu12,
        m.p,
        float(cfg.horizon),
        float(cfg.effective_warmup),
        seed,
        cfg.level_cap,
        cfg.trace_limit,
    )


def _threads() -> int:
    env = os.environ.get("MODQ_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _aggregate(cfg: SimConfig, outs: list[tuple]) -> SimEstimate:
    span = cfg.horizon - cfg.effective_warmup
    R = len(outs)
    occ = np.array([o[0] for o in outs]) / span
    L = np.array([o[1][0] for o in outs]) / span
    Q = np.array([o[1][1] for o in outs]) / span
    lumped1 = occ[:, 1] + occ[:, 2]

    tq = stats.t.ppf(0.995, R - 1) if R > 1 else math.inf

    def iv(x: np.ndarray) -> Interval:
        if R == 1:
            return Interval(float(x.mean()), math.inf)
        se = float(x.std(ddof=1) / math.sqrt(R))
        return Interval(float(x.mean()), float(tq * se), se)

    last = int(np.max(np.nonzero(occ.sum(axis=0))[0], initial=2))
    cap = cfg.level_cap
    pi_hat, pi_hw, pi_iv, arr_iv = {}, {}, {}, {}
    arrivals = np.array([o[2] for o in outs], dtype=float)
    arrivals /= np.maximum(arrivals.sum(axis=1, keepdims=True), 1.0)
    for i in range(max(last + 1, 3)):
        lab = state_label(i, cap)
        pi_iv[lab] = iv(occ[:, i])
        pi_hat[lab] = pi_iv[lab].mean
        pi_hw[lab] = pi_iv[lab].halfwidth
        arr_iv[lab] = iv(arrivals[:, i])
    pi_iv["1"] = iv(lumped1)
    pi_hw["1"] = pi_iv["1"].halfwidth

    cnt = np.sum([o[4] for o in outs], axis=0)
    counters = SimCounters(
        from_2=np.sum([o[3] for o in outs], axis=0),
        exits_ge2=int(cnt[0]),
        time_ge2=float(occ[:, 3:].sum() * span),
        departures_ge2_common=int(cnt[1]),
        departures_ge2_single=int(cnt[2]),
        arrivals_by_state=np.sum([o[2] for o in outs], axis=0),
        observed_time=span * R,
    )
    trace = []
    tr_t, tr_k, tr_a, tr_b = outs[0][5:]
    for t, k, a, b in zip(tr_t, tr_k, tr_a, tr_b):
        trace.append((float(t), EVENT_NAMES[k], state_label(int(a), cap), state_label(int(b), cap)))
    return SimEstimate(
        pi_hat=pi_hat,
        pi_halfwidth=pi_hw,
        EL_hat=iv(L),
        EQ_hat=iv(Q),
        common_departures=int(cnt[3]),
        single_departures=int(cnt[4]),
        replications=R,
        counters=counters,
        pi_intervals=pi_iv,
        arrival_pi_hat=arr_iv,
        trace=trace,
    )


def run(config: SimConfig) -> SimEstimate:
    """A single replication on the first spawned seed; halfwidths are infinite."""
    return _aggregate(config, [_one(config, _seeds(config.seed, 1)[0])])


def replicate(config: SimConfig, threads: int | None = None) -> SimEstimate:
    """Independent replications with Student-t 99% halfwidths on the replication means.

    ``threads`` defaults to ``MODQ_THREADS`` or the CPU count; results do not
    depend on it.
    """
    seeds = _seeds(config.seed, config.replications)
    workers = min(threads or _threads(), len(seeds))
    if workers <= 1:
        outs = [_one(config, s) for s in seeds]
    else:
        with ThreadPoolExecutor(workers) as ex:
            outs = list(ex.map(lambda s: _one(config, s), seeds))
    return _aggregate(config, outs)


def trace_csv(est: SimEstimate) -> str:
    """Event trace of the first replication as ``time,event,state_before,state_after`` CSV text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time", "event", "state_before", "state_after"])
    for t, k, a, b in est.trace:
        w.writerow(["%.12g" % t, k, a, b])
    return buf.getvalue()


def write_trace(est: SimEstimate, path) -> None:
    Path(path).write_text(trace_csv(est), encoding="utf-8")
