"""Event-driven validation of the make-to-stock queue analytics.

The simulator tracks the outstanding-order count N of a single-server
FIFO queue (an order is placed at every demand epoch, the supplier works
them off one at a time) and derives inventory (s - N)^+ and backlog
(N - s)^+ from it.  Interarrival and service draws come from pluggable
distributions so the heavy-traffic approximation can be probed beyond
the exponential case.  Runs are deterministic for a fixed seed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx
from scipy.stats import t as t_dist

from .errors import ParameterError

_BATCHES = 20


@dataclass(frozen=True)
class Exponential:
    """Exponential law with the given rate."""

    rate: float

    def __post_init__(self):
        if self.rate <= 0:
            raise ParameterError(f"rate must be > 0, got {self.rate}")

    @property
    def kind(self) -> str:
        return "exponential"

    def mean_time(self) -> float:
        return 1.0 / self.rate

    def scv(self) -> float:
        return 1.0

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.exponential(1.0 / self.rate, size=n)


@dataclass(frozen=True)
class HyperExp2:
    """Two-phase hyperexponential: rate1 with probability prob, else rate2."""

    prob: float
    rate1: float
    rate2: float

    def __post_init__(self):
        if not 0.0 <= self.prob <= 1.0:
            raise ParameterError(f"prob must lie in [0, 1], got {self.prob}")
        if self.rate1 <= 0 or self.rate2 <= 0:
            raise ParameterError("rates must be > 0")

    @property
    def kind(self) -> str:
        return "hyperexp2"

    def mean_time(self) -> float:
        return self.prob / self.rate1 + (1.0 - self.prob) / self.rate2

    def scv(self) -> float:
        m1 = self.mean_time()
        m2 = 2.0 * self.prob / self.rate1**2 + 2.0 * (1.0 - self.prob) / self.rate2**2
        return (m2 - m1 * m1) / (m1 * m1)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        choose = rng.random(n) < self.prob
        return np.where(
            choose,
            rng.exponential(1.0 / self.rate1, size=n),
            rng.exponential(1.0 / self.rate2, size=n),
        )


def _norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def _norm_hazard(x: float) -> float:
    # pdf(x)/(1 - cdf(x)); the erfcx form stays accurate deep in the tail,
    # where erfc alone cancels to noise.
    return math.sqrt(2.0 / math.pi) / float(erfcx(x / math.sqrt(2.0)))


@dataclass(frozen=True)
class TruncatedNormal:
    """Left-truncated normal with the *requested* mean and cv.

    Sampling resamples below the floor (default 1e-6 * mean).  The base
    normal's parameters are solved so that the law after truncation hits
    the configured mean and cv exactly; otherwise truncating N(mean,
    cv*mean) would discard Phi(-1/cv) of its mass and bias the realized
    moments, which feed the kappa heavy-traffic correction.
    """

    mean: float
    cv: float = 0.5
    floor: float | None = None

    def __post_init__(self):
        if self.mean <= 0 or self.cv <= 0:
            raise ParameterError("mean and cv must be > 0")
        if self.floor is not None and self.floor <= 0:
            raise ParameterError(f"floor must be > 0, got {self.floor}")

    @property
    def kind(self) -> str:
        return "truncated-normal"

    def _floor(self) -> float:
        return self.floor if self.floor is not None else 1e-6 * self.mean

    def mean_time(self) -> float:
        return self.mean

    def scv(self) -> float:
        return self.cv * self.cv

    def _base_params(self) -> tuple[float, float]:
        # Solve for (mu0, sigma0) of the base normal: with a the standardized
        # truncation point, hazard h = pdf(a)/(1 - cdf(a)) and
        # delta = h*(h - a), the truncated law has
        #   mean = mu0 + sigma0*h,  var = sigma0^2 * (1 - delta),
        # so (mean - floor)/sd = (h - a)/sqrt(1 - delta), monotone in a.
        floor = self._floor()
        target = (self.mean - floor) / (self.cv * self.mean)

        def spread(a: float) -> float:
            h = _norm_hazard(a)
            delta = h * (h - a)
            return (h - a) / math.sqrt(max(1.0 - delta, 1e-15))

        lo, hi = -target - 6.0, 12.0
        if spread(hi) >= target:    # spread falls toward 1, so cv >= ~1 is out
            raise ParameterError(
                f"cv={self.cv} too large for a truncated normal with floor {floor}")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if spread(mid) > target:
                lo = mid
            else:
                hi = mid
        a = 0.5 * (lo + hi)
        if 1.0 - _norm_cdf(a) < 1e-8:
            raise ParameterError(
                f"cv={self.cv} needs truncation so deep that rejection "
                "sampling cannot terminate; lower cv or raise the floor")
        h = _norm_hazard(a)
        delta = h * (h - a)
        sigma0 = self.cv * self.mean / math.sqrt(1.0 - delta)
        return floor - a * sigma0, sigma0

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        mu0, sigma0 = self._base_params()
        floor = self._floor()
        out = rng.normal(mu0, sigma0, size=n)
        bad = out <= floor
        while bad.any():
            out[bad] = rng.normal(mu0, sigma0, size=int(bad.sum()))
            bad = out <= floor
        return out


DistSpec = Exponential | HyperExp2 | TruncatedNormal


@dataclass(frozen=True)
class SimConfig:
    """One simulation run: distributions, base stock, horizon in events."""

    arrival: DistSpec
    service: DistSpec
    base_stock: int = 0
    horizon: int = 2_000_000
    warmup: int | None = None      # defaults to horizon // 10
    seed: int = 0

    def __post_init__(self):
        if self.base_stock < 0 or int(self.base_stock) != self.base_stock:
            raise ParameterError(f"base_stock must be a nonnegative integer, got {self.base_stock}")
        warm = self.effective_warmup()
        if not 0 <= warm < self.horizon:
            raise ParameterError(
                f"need horizon > warmup >= 0, got horizon={self.horizon}, warmup={warm}")

    def effective_warmup(self) -> int:
        return self.horizon // 10 if self.warmup is None else self.warmup


@dataclass(frozen=True, eq=False)
class SimStats:
    """Time-weighted long-run averages over the post-warmup horizon.

    mean_outstanding counts every unfinished order (system count);
    mean_waiting excludes the one in service, so both readings of an
    "average queue length" are available.
    """

    mean_outstanding: float
    mean_waiting: float
    mean_inventory: float
    mean_backlog: float
    pdf: np.ndarray                 # empirical pmf of the outstanding count
    ci_halfwidth: float             # 95% batch-means half-width on mean_outstanding
    events: int
    sim_time: float


def simulate(config: SimConfig) -> SimStats:
    """Run one event-driven simulation of the make-to-stock queue.

    Arrivals place orders; a single server completes them FIFO.  The
    outstanding count N(t) is piecewise constant between events, so all
    averages are exact time-weighted sums over the post-warmup window.
    Deterministic for a fixed config (single RNG stream, fixed draw order).
    """
    lam_rate = 1.0 / config.arrival.mean_time()
    mu_rate = 1.0 / config.service.mean_time()
    if lam_rate >= mu_rate:
        if config.horizon > 100_000_000:
            raise ParameterError(
                "refusing an unstable configuration (arrival rate >= service rate) "
                f"with horizon {config.horizon} > 1e8 events")
        warnings.warn(
            f"unstable configuration: arrival rate {lam_rate:.6g} >= "
            f"service rate {mu_rate:.6g}; long-run averages will not settle",
            stacklevel=2)

    rng = np.random.default_rng(config.seed)
    n_cust = config.horizon // 2 + 2
    inter = config.arrival.sample(rng, n_cust)
    serv = config.service.sample(rng, n_cust)

    arrivals = np.cumsum(inter)
    cum_serv = np.cumsum(serv)
    # Departure recursion D_k = S_k + max(T_k, D_{k-1}) collapses to a
    # running maximum: D = cumsum(S) + max_{j<=k} (T_j - cumsum(S)_{j-1}).
    departures = cum_serv + np.maximum.accumulate(arrivals - (cum_serv - serv))

    times = np.concatenate([arrivals, departures])
    steps = np.concatenate([
        np.ones(n_cust, dtype=np.int64), -np.ones(n_cust, dtype=np.int64)])
    order = np.argsort(times, kind="stable")
    times = times[order][: config.horizon]
    steps = steps[order][: config.horizon]

    count = np.cumsum(steps)
    hold = np.diff(times)                 # N is count[k] during [t_k, t_{k+1})
    state = count[:-1]
    warm = config.effective_warmup()
    state = state[warm:]
    hold = hold[warm:]
    if state.size == 0:
        raise ParameterError("horizon too short: no post-warmup intervals")

    total = float(hold.sum())
    s = config.base_stock
    mean_out = float((state * hold).sum() / total)
    mean_wait = float((np.maximum(state - 1, 0) * hold).sum() / total)
    mean_inv = float((np.maximum(s - state, 0) * hold).sum() / total)
    mean_back = float((np.maximum(state - s, 0) * hold).sum() / total)
    pdf = np.bincount(state, weights=hold) / total

    # Batch means over 20 equal-count interval batches.
    usable = (state.size // _BATCHES) * _BATCHES
    if usable >= _BATCHES:
        bs_state = (state[:usable] * hold[:usable]).reshape(_BATCHES, -1).sum(axis=1)
        bs_time = hold[:usable].reshape(_BATCHES, -1).sum(axis=1)
        batch_means = bs_state / bs_time
        ci = float(t_dist.ppf(0.975, _BATCHES - 1)
                   * batch_means.std(ddof=1) / math.sqrt(_BATCHES))
    else:
        ci = math.inf

    return SimStats(
        mean_outstanding=mean_out,
        mean_waiting=mean_wait,
        mean_inventory=mean_inv,
        mean_backlog=mean_back,
        pdf=pdf,
        ci_halfwidth=ci,
        events=int(state.size),
        sim_time=total,
    )


def empirical_pdf_compare(stats: SimStats, rho: float) -> float:
    """Sup-distance between the empirical pmf of N and the geometric law
    (1 - rho) rho^j over the observed support."""
    if not 0.0 < rho < 1.0:
        raise ParameterError(f"rho must lie in (0, 1), got {rho}")
    if stats.pdf.size == 0:
        raise ParameterError("empty run: no empirical distribution to compare")
    j = np.arange(stats.pdf.size)
    geometric = (1.0 - rho) * rho ** j
    return float(np.abs(stats.pdf - geometric).max())


def replicate(config: SimConfig, n_reps: int) -> SimStats:
    """Pool n_reps independent runs; replicate k uses seed + k.

    Means are averaged with equal weights (equal horizons) and the 95%
    half-width comes from the spread of replicate means, so it tightens
    with n_reps.  Aggregation is a symmetric reduction: any execution
    order yields the same report.  n_reps = 1 returns simulate(config).
    """
    if n_reps < 1:
        raise ParameterError(f"n_reps must be >= 1, got {n_reps}")
    runs = []
    for k in range(n_reps):
        cfg = SimConfig(
            arrival=config.arrival,
            service=config.service,
            base_stock=config.base_stock,
            horizon=config.horizon,
            warmup=config.warmup,
            seed=config.seed + k,
        )
        runs.append(simulate(cfg))
    if n_reps == 1:
        return runs[0]

    outs = np.array([r.mean_outstanding for r in runs])
    width = max(r.pdf.size for r in runs)
    pooled_pdf = np.zeros(width)
    for r in runs:
        pooled_pdf[: r.pdf.size] += r.pdf
    pooled_pdf /= n_reps
    ci = float(t_dist.ppf(0.975, n_reps - 1) * outs.std(ddof=1) / math.sqrt(n_reps))
    return SimStats(
        mean_outstanding=float(outs.mean()),
        mean_waiting=float(np.mean([r.mean_waiting for r in runs])),
        mean_inventory=float(np.mean([r.mean_inventory for r in runs])),
        mean_backlog=float(np.mean([r.mean_backlog for r in runs])),
        pdf=pooled_pdf,
        ci_halfwidth=ci,
        events=sum(r.events for r in runs),
        sim_time=float(sum(r.sim_time for r in runs)),
    )
