"""Monte Carlo laboratory: path simulation and stopping-rule evaluation.

Simulation-based cross-checks for the analytic machinery.  Paths of the
drifted Brownian motion and its running maximum are generated on a time
grid with exact Gaussian increments; the running maximum applies an exact
within-step bridge-maximum draw by default, so the pair (grid skeleton of
B, terminal maximum S_T) is sampled from its true joint law rather than
the grid approximation.  Stopping rules are checked at grid times only —
no attempt is made to locate band crossings between grid points; the bias
this introduces is controlled empirically by halving the step size.

Reproducibility contract: paths are generated in fixed-size blocks, each
block keyed by (seed, block index) through a counter-based generator, and
per-block partial sums are combined in block order with compensated
summation.  Estimates are therefore bit-identical for a given
(seed, dt, n_paths) no matter how many workers evaluate the blocks.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, MismatchError
from .gain import gain_raw
from .kernels import philox_stream
from .problem import ProblemSpec
from .solver import BoundaryTable

__all__ = [
    "PATH_BLOCK",
    "PathBatch",
    "StoppingRule",
    "RuleEstimate",
    "RegretTable",
    "LemmaBin",
    "LemmaReport",
    "simulate",
    "evaluate_rule",
    "verify_lemma21",
    "regret_scan",
]

# Paths per generation block.  Fixed so that the (seed, block) -> stream
# mapping — and hence every estimate — is independent of worker count.
PATH_BLOCK = 4096

_MAX_MATERIALIZED = 1 << 26  # cap on n_paths * (n_steps + 1) for .paths()


@dataclass(frozen=True)
class PathBatch:
    """Grid-path ensemble defined by (spec, dt, n_paths, seed).

    The batch is a recipe, not an array: blocks of paths are regenerated
    deterministically on each pass, so a batch of a million paths costs no
    memory until consumed.  `bridge_max` selects whether the running
    maximum includes the exact within-step bridge maximum (default) or
    only the grid values of B.
    """

    spec: ProblemSpec
    dt: float
    n_paths: int
    seed: int
    bridge_max: bool = True

    def __post_init__(self) -> None:
        if not (np.isfinite(self.dt) and self.dt > 0.0):
            raise ConfigError(f"dt must be positive and finite, got {self.dt}")
        if self.dt > self.spec.T / 100.0 * (1.0 + 1e-12):
            raise ConfigError(
                f"dt={self.dt} too coarse: need dt <= T/100 = {self.spec.T / 100.0}"
            )
        steps = self.spec.T / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ConfigError(f"dt={self.dt} must divide the horizon T={self.spec.T}")
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ConfigError(f"n_paths must be a positive integer, got {self.n_paths}")
        if int(self.seed) != self.seed:
            raise ConfigError(f"seed must be an integer, got {self.seed}")

    @property
    def n_steps(self) -> int:
        return int(round(self.spec.T / self.dt))

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.spec.T, self.n_steps + 1)

    @property
    def n_blocks(self) -> int:
        return (self.n_paths + PATH_BLOCK - 1) // PATH_BLOCK

    def block_arrays(self, block: int) -> tuple[np.ndarray, np.ndarray]:
        """Generate (B, S) for one block, shape (m, n_steps + 1) each."""
        if not 0 <= block < self.n_blocks:
            raise ConfigError(f"block {block} out of range [0, {self.n_blocks})")
        m = min(PATH_BLOCK, self.n_paths - block * PATH_BLOCK)
        n = self.n_steps
        mu, dt = self.spec.mu, self.dt
        rng = philox_stream(self.seed, block)
        z = rng.standard_normal((m, n))
        b = np.empty((m, n + 1))
        b[:, 0] = 0.0
        np.cumsum(mu * dt + math.sqrt(dt) * z, axis=1, out=b[:, 1:])
        if self.bridge_max:
            # Exact max of the step bridge given its endpoints; the drift
            # drops out of the conditional law.  1 - U lies in (0, 1], so
            # the log term is <= 0 and the discriminant is nonnegative.
            u = rng.random((m, n))
            left, right = b[:, :-1], b[:, 1:]
            disc = (right - left) ** 2 - 2.0 * dt * np.log1p(-u)
            step_max = 0.5 * (left + right + np.sqrt(disc))
        else:
            step_max = b[:, 1:]
        s = np.empty_like(b)
        s[:, 0] = 0.0
        np.maximum.accumulate(step_max, axis=1, out=s[:, 1:])
        np.maximum(s, 0.0, out=s)
        return b, s

    def iter_blocks(self):
        """Yield (B, S) block arrays in deterministic block order."""
        for block in range(self.n_blocks):
            yield self.block_arrays(block)

    def paths(self) -> tuple[np.ndarray, np.ndarray]:
        """Materialize the full (B, S) arrays; refuses oversized batches."""
        total = self.n_paths * (self.n_steps + 1)
        if total > _MAX_MATERIALIZED:
            raise ConfigError(
                f"batch too large to materialize ({total} > {_MAX_MATERIALIZED} entries);"
                " consume it with iter_blocks() instead"
            )
        bs, ss = zip(*self.iter_blocks())
        return np.concatenate(bs, axis=0), np.concatenate(ss, axis=0)


def simulate(spec: ProblemSpec, dt: float, n_paths: int, seed: int,
             bridge_max: bool = True) -> PathBatch:
    """Define a reproducible path ensemble (validation happens here)."""
    return PathBatch(spec, float(dt), int(n_paths), int(seed), bridge_max)


@dataclass(frozen=True)
class StoppingRule:
    """Grid-time stopping rule: band, constant time, threshold, or never.

    - band(table): stop at the first grid time whose gap X = S - B lies in
      [b1(t), b2(t)]; never before the band exists, at T if never entered.
    - constant_time(t0): stop at the grid time nearest t0.
    - threshold(a): stop at the first grid time with X >= a.
    - never(): stop at T.
    """

    kind: str
    table: BoundaryTable | None = None
    t0: float | None = None
    level: float | None = None

    @classmethod
    def band(cls, table: BoundaryTable) -> "StoppingRule":
        return cls("band", table=table)

    @classmethod
    def constant_time(cls, t0: float) -> "StoppingRule":
        if not (np.isfinite(t0) and t0 >= 0.0):
            raise ConfigError(f"constant stopping time must be >= 0, got {t0}")
        return cls("constant", t0=float(t0))

    @classmethod
    def threshold(cls, level: float) -> "StoppingRule":
        if not (np.isfinite(level) and level >= 0.0):
            raise ConfigError(f"threshold level must be >= 0, got {level}")
        return cls("threshold", level=float(level))

    @classmethod
    def never(cls) -> "StoppingRule":
        return cls("never")

    @property
    def label(self) -> str:
        if self.kind == "band":
            return "band"
        if self.kind == "constant":
            return f"const@{self.t0:g}"
        if self.kind == "threshold":
            return f"thr@{self.level:g}"
        return "never"

    def check_against(self, batch: PathBatch) -> None:
        if self.kind == "band" and self.table.spec != batch.spec:
            raise MismatchError(
                f"boundary table solved for {self.table.spec} but batch uses {batch.spec}"
            )
        if self.kind == "constant" and self.t0 > batch.spec.T:
            raise ConfigError(f"constant stopping time {self.t0} exceeds horizon")

    def grid_bands(self, times: np.ndarray) -> tuple[np.ndarray, np.ndarray] | None:
        """Band edges sampled on the batch grid (band rules only)."""
        if self.kind != "band":
            return None
        b1g = np.empty(times.size)
        b2g = np.empty(times.size)
        for j, t in enumerate(times):
            b1g[j], b2g[j] = self.table.band_at(float(t))
        return b1g, b2g

    def stop_indices(
        self,
        times: np.ndarray,
        b: np.ndarray,
        s: np.ndarray,
        bands: tuple[np.ndarray, np.ndarray] | None = None,
    ) -> np.ndarray:
        """First grid index at which each path stops (n_steps if never)."""
        last = times.size - 1
        m = b.shape[0]
        if self.kind == "never":
            return np.full(m, last)
        if self.kind == "constant":
            j0 = int(np.argmin(np.abs(times - self.t0)))
            return np.full(m, j0)
        x = s - b
        if self.kind == "threshold":
            hit = x >= self.level
        else:
            b1g, b2g = bands if bands is not None else self.grid_bands(times)
            # NaN band (before the band exists) compares False on both sides.
            with np.errstate(invalid="ignore"):
                hit = (x >= b1g[None, :]) & (x <= b2g[None, :])
        idx = np.argmax(hit, axis=1)
        idx[~hit.any(axis=1)] = last
        return idx


@dataclass(frozen=True)
class RuleEstimate:
    """Mean-square stopping error of one rule on one batch."""

    rule: str
    estimate: float
    stderr: float
    n_paths: int
    dt: float
    seed: int


@dataclass(frozen=True)
class RegretTable:
    """Common-random-number comparison of several rules on one batch.

    `diffs` maps each rival label to (mean difference, standard error of
    the difference) against the first rule, computed pathwise so that the
    shared noise cancels.
    """

    rows: tuple[RuleEstimate, ...]
    diffs: dict


def _block_payoffs(batch: PathBatch, rules, bands_list, block: int) -> list[np.ndarray]:
    b, s = batch.block_arrays(block)
    times = batch.times
    rows = np.arange(b.shape[0])
    out = []
    for rule, bands in zip(rules, bands_list):
        j = rule.stop_indices(times, b, s, bands)
        out.append((b[rows, j] - s[:, -1]) ** 2)
    return out


def _scan(batch: PathBatch, rules, workers: int = 1):
    """Accumulate per-rule payoff sums block by block, in block order.

    Returns (per-rule (sum, sumsq), per-rival (dsum, dsumsq) vs rules[0]).
    Block partials are reduced with compensated summation in a fixed
    order, so the result is independent of worker scheduling.
    """
    for rule in rules:
        rule.check_against(batch)
    bands_list = [rule.grid_bands(batch.times) for rule in rules]
    n_rules = len(rules)
    sums = [[] for _ in range(n_rules)]
    sumsqs = [[] for _ in range(n_rules)]
    dsums = [[] for _ in range(n_rules)]
    dsumsqs = [[] for _ in range(n_rules)]

    def handle(payoffs: list[np.ndarray]) -> None:
        base = payoffs[0]
        for i, p in enumerate(payoffs):
            sums[i].append(float(np.add.reduce(p)))
            sumsqs[i].append(float(np.add.reduce(p * p)))
            if i > 0:
                d = p - base
                dsums[i].append(float(np.add.reduce(d)))
                dsumsqs[i].append(float(np.add.reduce(d * d)))

    blocks = range(batch.n_blocks)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            work = pool.map(lambda k: _block_payoffs(batch, rules, bands_list, k), blocks)
            for payoffs in work:
                handle(payoffs)
    else:
        for block in blocks:
            handle(_block_payoffs(batch, rules, bands_list, block))

    totals = [(math.fsum(sums[i]), math.fsum(sumsqs[i])) for i in range(n_rules)]
    dtotals = [
        (math.fsum(dsums[i]), math.fsum(dsumsqs[i])) if i > 0 else None
        for i in range(n_rules)
    ]
    return totals, dtotals


def _mean_se(total: float, total_sq: float, n: int) -> tuple[float, float]:
    mean = total / n
    if n < 2:
        return mean, float("inf")
    var = max(total_sq - n * mean * mean, 0.0) / (n - 1)
    return mean, math.sqrt(var / n)


def evaluate_rule(batch: PathBatch, rule: StoppingRule, workers: int = 1) -> RuleEstimate:
    """Mean and standard error of (B_tau - S_T)^2 under one rule."""
    totals, _ = _scan(batch, [rule], workers=workers)
    mean, se = _mean_se(*totals[0], batch.n_paths)
    return RuleEstimate(rule.label, mean, se, batch.n_paths, batch.dt, batch.seed)


def regret_scan(
    spec: ProblemSpec,
    table: BoundaryTable,
    rivals: list,
    batch: PathBatch,
    workers: int = 1,
) -> RegretTable:
    """Evaluate the band rule against rivals on shared paths."""
    if not rivals:
        raise ConfigError("regret_scan needs at least one rival rule")
    if table.spec != spec or batch.spec != spec:
        raise MismatchError("spec, table, and batch must agree for a regret scan")
    rules = [StoppingRule.band(table)] + list(rivals)
    totals, dtotals = _scan(batch, rules, workers=workers)
    rows = []
    diffs = {}
    for i, rule in enumerate(rules):
        mean, se = _mean_se(*totals[i], batch.n_paths)
        rows.append(RuleEstimate(rule.label, mean, se, batch.n_paths, batch.dt, batch.seed))
        if i > 0:
            dmean, dse = _mean_se(*dtotals[i], batch.n_paths)
            diffs[rule.label] = (dmean, dse)
    return RegretTable(tuple(rows), diffs)


@dataclass(frozen=True)
class LemmaBin:
    """One gap bin of the conditional mean-square identity check."""

    lo: float
    hi: float
    center: float
    count: int
    lhs_mean: float
    rhs: float
    stderr: float
    zscore: float
    low_occupancy: bool


@dataclass(frozen=True)
class LemmaReport:
    """Binned check that E[(S_T - B_t)^2 | X_t = x] matches the gain.

    The conditional mean over paths falling in each gap bin is compared
    with the closed-form gain at the bin's center of mass (the mean gap
    of the paths it holds — using the geometric midpoint instead would
    bias every bin by the within-bin density tilt, which at a million
    paths dwarfs the standard error).  `max_abs_z` is the worst
    discrepancy in units of the bin's standard error over bins with at
    least 1000 paths; thinner bins are flagged, not fatal.
    """

    t: float
    bins: tuple[LemmaBin, ...]
    max_abs_z: float
    coverage: float


def verify_lemma21(batch: PathBatch, t: float, n_bins: int = 16) -> LemmaReport:
    """Conditional-mean identity check at an interior time."""
    spec = batch.spec
    if not 0.0 < t < spec.T:
        raise ConfigError(f"need an interior time 0 < t < T, got {t}")
    times = batch.times
    j_t = int(np.argmin(np.abs(times - t)))
    if j_t == 0 or j_t == times.size - 1:
        raise ConfigError(f"time {t} snaps to an endpoint of the grid")
    t_snap = float(times[j_t])
    # Deterministic bin edges wide enough to cover all but the far tail.
    x_hi = 2.8 * math.sqrt(t_snap) + max(-spec.mu, 0.0) * t_snap
    edges = np.linspace(0.0, x_hi, n_bins + 1)

    counts = np.zeros(n_bins, dtype=np.int64)
    sums = [[] for _ in range(n_bins)]
    sumsqs = [[] for _ in range(n_bins)]
    xsums = [[] for _ in range(n_bins)]
    for b, s in batch.iter_blocks():
        x_t = s[:, j_t] - b[:, j_t]
        lhs = (s[:, -1] - b[:, j_t]) ** 2
        which = np.digitize(x_t, edges) - 1
        for k in range(n_bins):
            mask = which == k
            if mask.any():
                counts[k] += int(mask.sum())
                vals = lhs[mask]
                sums[k].append(float(np.add.reduce(vals)))
                sumsqs[k].append(float(np.add.reduce(vals * vals)))
                xsums[k].append(float(np.add.reduce(x_t[mask])))

    bins = []
    zmax = 0.0
    for k in range(n_bins):
        lo, hi = float(edges[k]), float(edges[k + 1])
        n = int(counts[k])
        if n == 0:
            bins.append(LemmaBin(lo, hi, 0.5 * (lo + hi), 0, math.nan, math.nan,
                                 math.nan, math.nan, True))
            continue
        center = math.fsum(xsums[k]) / n
        mean, se = _mean_se(math.fsum(sums[k]), math.fsum(sumsqs[k]), n)
        rhs = float(gain_raw(spec.mu, spec.T, t_snap, center))
        z = (mean - rhs) / se if se > 0 else math.inf
        low = n < 1000
        bins.append(LemmaBin(lo, hi, center, n, mean, rhs, se, z, low))
        if not low and abs(z) > zmax:
            zmax = abs(z)
    coverage = float(counts.sum()) / batch.n_paths
    return LemmaReport(t_snap, tuple(bins), zmax, coverage)
