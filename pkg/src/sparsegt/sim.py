"""Monte Carlo harness and exact error oracles.

Reproducibility contract: trial ``t`` of a run with master seed ``s`` uses the
generator ``numpy.random.default_rng(derive_trial_seed(s, t))`` and draws, in
order, (1) the defective set and (2) the noise flips when sigma > 0. Because
each trial derives its own seed from the pair ``(s, t)``, any partition of the
trial range across workers reproduces the sequential result bit for bit.
"""

from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import (
    DefectiveSet,
    DesignParams,
    IncompatibleDecoderError,
    InvalidParameterError,
    Outcomes,
    PRIOR_IID_BERNOULLI,
    PRIOR_UNIFORM_EXACT,
    Prior,
    ResourceCapError,
    TestMatrix,
)
from .decoders import make_plan

__all__ = [
    "SimConfig",
    "SimReport",
    "SIM_CSV_HEADER",
    "derive_trial_seed",
    "wilson_interval",
    "run_monte_carlo",
    "exhaustive_error_probability",
    "outcome_collision_groups",
    "bayes_optimal_error",
]

_MASK64 = (1 << 64) - 1
_GOLDEN64 = 0x9E3779B97F4A7C15

# z for a central 95% normal interval
_Z95 = 1.959963984540054

SIM_CSV_HEADER = (
    "design_tag,n,d,gamma,rho,sigma,T,trials,errors,error_rate,ci_low,ci_high,seed"
)


def derive_trial_seed(master_seed: int, trial: int) -> int:
    """Fixed 64-bit mix of (master seed, trial index): splitmix64 output of
    master + (trial+1) * golden-ratio increment. Part of the public
    reproducibility contract; do not change."""
    z = (master_seed + (trial + 1) * _GOLDEN64) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def wilson_interval(errors: int, trials: int) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials < 0 or errors < 0 or errors > trials:
        raise InvalidParameterError("need 0 <= errors <= trials")
    if trials == 0:
        return (0.0, 1.0)
    p = errors / trials
    z2 = _Z95 * _Z95
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    half = _Z95 * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials)) / denom
    low = 0.0 if errors == 0 else max(0.0, center - half)
    high = 1.0 if errors == trials else min(1.0, center + half)
    return (low, high)


@dataclass(frozen=True)
class SimConfig:
    """What to simulate: problem parameters, defective-set prior, trial count,
    master seed, and worker count (1 = in-process)."""

    params: DesignParams
    prior: Prior
    trials: int
    master_seed: int
    parallelism: int = 1

    def __post_init__(self) -> None:
        if self.trials < 0:
            raise InvalidParameterError("trials must be >= 0")
        if self.parallelism < 1:
            raise InvalidParameterError("parallelism must be >= 1")
        if self.master_seed < 0:
            raise InvalidParameterError("master_seed must be >= 0")


@dataclass(frozen=True)
class Breakdown:
    """Failure-mode tallies over a run. ``false_positive_items`` counts extra
    reported items, ``ambiguous_blocks`` counts blocks flagged ambiguous, and
    ``wrong_estimate`` counts trials missing a true defective; modes can
    co-occur within a trial, while ``SimReport.errors`` counts each failing
    trial once."""

    false_positive_items: int = 0
    ambiguous_blocks: int = 0
    wrong_estimate: int = 0


@dataclass(frozen=True)
class SimReport:
    design_tag: str
    num_items: int
    num_tests: int
    d: int
    gamma: int | None
    rho: int | None
    sigma: float
    trials: int
    errors: int
    error_rate: float
    ci_low: float
    ci_high: float
    breakdown: Breakdown
    master_seed: int
    wall_time: float

    def csv_row(self) -> str:
        gamma = "" if self.gamma is None else str(self.gamma)
        rho = "" if self.rho is None else str(self.rho)
        return (
            f"{self.design_tag},{self.num_items},{self.d},{gamma},{rho},"
            f"{self.sigma:.6g},{self.num_tests},{self.trials},{self.errors},"
            f"{self.error_rate:.6g},{self.ci_low:.6g},{self.ci_high:.6g},"
            f"{self.master_seed}"
        )


# ---------------------------------------------------------------------------
# trial execution
# ---------------------------------------------------------------------------


class _EvalContext:
    """Column adjacency of a matrix, for fast OR-channel evaluation."""

    def __init__(self, matrix: TestMatrix):
        self.num_tests = matrix.num_tests
        self.num_items = matrix.num_items
        cols: list[list[int]] = [[] for _ in range(matrix.num_items)]
        for t, row in enumerate(matrix.rows):
            for i in row:
                cols[i].append(t)
        self.cols = [np.asarray(c, dtype=np.int64) for c in cols]

    def outcome_bits(self, items: np.ndarray) -> np.ndarray:
        bits = np.zeros(self.num_tests, dtype=bool)
        if items.size:
            hit = np.concatenate([self.cols[int(i)] for i in items])
            bits[hit] = True
        return bits


def _draw_defectives(rng: np.random.Generator, prior: Prior, n: int) -> np.ndarray:
    if prior.kind == PRIOR_UNIFORM_EXACT:
        if prior.d > n:
            raise InvalidParameterError(f"prior d={prior.d} exceeds n={n}")
        picks = rng.choice(n, size=prior.d, replace=False)
        picks.sort()
        return picks.astype(np.int64)
    return np.flatnonzero(rng.random(n) < prior.d / n).astype(np.int64)


def _run_trial_range(
    matrix: TestMatrix,
    decoder: str,
    prior: Prior,
    sigma: float,
    master_seed: int,
    start: int,
    count: int,
) -> tuple[int, int, int, int]:
    plan = make_plan(matrix, decoder)
    ev = _EvalContext(matrix)
    n = matrix.num_items
    errors = fp_items = amb_blocks = wrong = 0
    for t in range(start, start + count):
        rng = np.random.default_rng(derive_trial_seed(master_seed, t))
        defect = _draw_defectives(rng, prior, n)
        bits = ev.outcome_bits(defect)
        if sigma > 0.0:
            bits = np.logical_xor(bits, rng.random(matrix.num_tests) < sigma)
        estimate, ambiguous, _ = plan.decode_bits(bits)
        exact = np.array_equal(estimate, defect)
        if ambiguous or not exact:
            errors += 1
            amb_blocks += len(ambiguous)
            if not exact:
                extra = np.setdiff1d(estimate, defect, assume_unique=True)
                missing = np.setdiff1d(defect, estimate, assume_unique=True)
                fp_items += int(extra.size)
                if missing.size:
                    wrong += 1
    return errors, fp_items, amb_blocks, wrong


def run_monte_carlo(matrix: TestMatrix, decoder: str, config: SimConfig) -> SimReport:
    """Estimate the decoding error rate over ``config.trials`` random trials.

    ``decoder`` is one of coma/hypergrid/binary/majority or ``auto`` (pick by
    design tag). A trial errs when the decoder reports any ambiguity or its
    estimate differs from the drawn defective set. Noise (``params.sigma`` > 0)
    is only ever paired with majority decoding; any other pairing is refused.
    """
    sigma = config.params.sigma or 0.0
    plan = make_plan(matrix, decoder)  # validates the pairing early
    if sigma > 0.0 and plan.kind != "majority":
        raise IncompatibleDecoderError(
            f"sigma={sigma:g} requires a repeated design with majority decoding; "
            f"got decoder {plan.kind!r}"
        )
    if config.params.n != matrix.num_items:
        raise InvalidParameterError(
            f"params.n={config.params.n} but matrix has {matrix.num_items} items"
        )
    started = time.perf_counter()
    jobs = min(config.parallelism, max(1, config.trials))
    if jobs > 1:
        bounds = [config.trials * j // jobs for j in range(jobs + 1)]
        chunks = [
            (matrix, plan.kind, config.prior, sigma, config.master_seed, a, b - a)
            for a, b in zip(bounds, bounds[1:])
            if b > a
        ]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_trial_range_star, chunks))
    else:
        parts = [
            _run_trial_range(
                matrix, plan.kind, config.prior, sigma, config.master_seed, 0,
                config.trials,
            )
        ]
    errors = sum(p[0] for p in parts)
    breakdown = Breakdown(
        false_positive_items=sum(p[1] for p in parts),
        ambiguous_blocks=sum(p[2] for p in parts),
        wrong_estimate=sum(p[3] for p in parts),
    )
    ci_low, ci_high = wilson_interval(errors, config.trials)
    return SimReport(
        design_tag=matrix.design_tag,
        num_items=matrix.num_items,
        num_tests=matrix.num_tests,
        d=config.prior.d,
        gamma=matrix.col_limit,
        rho=matrix.row_limit,
        sigma=sigma,
        trials=config.trials,
        errors=errors,
        error_rate=errors / config.trials if config.trials else 0.0,
        ci_low=ci_low,
        ci_high=ci_high,
        breakdown=breakdown,
        master_seed=config.master_seed,
        wall_time=time.perf_counter() - started,
    )


def _run_trial_range_star(args) -> tuple[int, int, int, int]:
    return _run_trial_range(*args)


# ---------------------------------------------------------------------------
# exact oracles
# ---------------------------------------------------------------------------


def exhaustive_error_probability(
    matrix: TestMatrix, decoder: str, d: int, cap: int = 10_000_000
) -> Fraction:
    """Exact error probability under a uniform size-d defective set.

    Enumerates all C(n, d) defective sets and counts decoding failures;
    refuses when the enumeration exceeds ``cap``.
    """
    n = matrix.num_items
    if not 0 <= d <= n:
        raise InvalidParameterError(f"d must lie in [0, {n}]")
    total = math.comb(n, d)
    if total > cap:
        raise ResourceCapError(
            f"C({n},{d}) = {total} defective sets exceeds the cap of {cap}"
        )
    plan = make_plan(matrix, decoder)
    ev = _EvalContext(matrix)
    errors = 0
    for combo in itertools.combinations(range(n), d):
        defect = np.asarray(combo, dtype=np.int64)
        estimate, ambiguous, _ = plan.decode_bits(ev.outcome_bits(defect))
        if ambiguous or not np.array_equal(estimate, defect):
            errors += 1
    return Fraction(errors, total)


def outcome_collision_groups(
    matrix: TestMatrix, d: int, cap: int = 1_000_000
) -> list[list[tuple[int, ...]]]:
    """Groups of size-d defective sets that produce identical outcomes.

    Such sets are mutually confusable: no decoder can tell them apart. Only
    groups with at least two members are returned, in first-seen order.
    """
    n = matrix.num_items
    if not 0 <= d <= n:
        raise InvalidParameterError(f"d must lie in [0, {n}]")
    total = math.comb(n, d)
    if total > cap:
        raise ResourceCapError(
            f"C({n},{d}) = {total} defective sets exceeds the cap of {cap}"
        )
    ev = _EvalContext(matrix)
    by_outcome: dict[bytes, list[tuple[int, ...]]] = {}
    for combo in itertools.combinations(range(n), d):
        key = np.packbits(ev.outcome_bits(np.asarray(combo, dtype=np.int64))).tobytes()
        by_outcome.setdefault(key, []).append(combo)
    return [group for group in by_outcome.values() if len(group) > 1]


_BAYES_MAX_ITEMS = 12
_BAYES_MAX_TESTS = 16


def bayes_optimal_error(matrix: TestMatrix, sigma: float, prior: Prior) -> float:
    """Exact error probability of the best possible decoder.

    Full enumeration over all 2^n inputs and 2^T observed outcome vectors of
    the bit-flip channel: the optimal rule picks, for each observation, the
    input maximizing prior times likelihood, and this function returns one
    minus the probability mass it captures. Capped at n <= 12 and T <= 16.
    """
    n, num_tests = matrix.num_items, matrix.num_tests
    if n > _BAYES_MAX_ITEMS or num_tests > _BAYES_MAX_TESTS:
        raise ResourceCapError(
            f"exact enumeration capped at n <= {_BAYES_MAX_ITEMS} and "
            f"T <= {_BAYES_MAX_TESTS}; got n={n}, T={num_tests}"
        )
    if not 0.0 <= sigma < 0.5:
        raise InvalidParameterError("sigma must lie in [0, 1/2)")

    col_mask = np.zeros(n, dtype=np.uint32)
    for t, row in enumerate(matrix.rows):
        for i in row:
            col_mask[i] |= np.uint32(1 << t)

    # outcome signature of every input set, via lowest-set-bit recursion
    num_inputs = 1 << n
    signatures = np.zeros(num_inputs, dtype=np.uint32)
    for x in range(1, num_inputs):
        low = x & (-x)
        signatures[x] = signatures[x ^ low] | col_mask[low.bit_length() - 1]

    popcount_inputs = np.array([bin(x).count("1") for x in range(num_inputs)])
    if prior.kind == PRIOR_IID_BERNOULLI:
        p = prior.d / n
        if not 0.0 <= p <= 1.0:
            raise InvalidParameterError(f"bernoulli rate d/n = {p:g} outside [0, 1]")
        weights = p**popcount_inputs * (1.0 - p) ** (n - popcount_inputs)
    else:
        weights = np.where(
            popcount_inputs == prior.d, 1.0 / math.comb(n, prior.d), 0.0
        )

    # likelihood of an observation depends only on its Hamming distance to
    # the noiseless signature
    flip_likelihood = sigma ** np.arange(num_tests + 1) * (1.0 - sigma) ** (
        num_tests - np.arange(num_tests + 1)
    )
    popcount16 = np.array([bin(v).count("1") for v in range(1 << num_tests)],
                          dtype=np.int64)

    captured = 0.0
    num_observations = 1 << num_tests
    # keep the (inputs x observations) work arrays around 16 MB
    chunk = max(256, (1 << 21) // num_inputs)
    for lo in range(0, num_observations, chunk):
        observed = np.arange(lo, min(lo + chunk, num_observations), dtype=np.uint32)
        distance = popcount16[np.bitwise_xor.outer(signatures, observed)]
        posterior = weights[:, None] * flip_likelihood[distance]
        captured += float(posterior.max(axis=0).sum())
    # captured can exceed 1 by a few ulp when the decoder is perfect
    return max(0.0, 1.0 - captured)


def evaluate_outcomes(matrix: TestMatrix, defectives: DefectiveSet) -> Outcomes:
    """Evaluation through the same fast path the harness uses (exposed for
    cross-checking against :func:`sparsegt.core.evaluate`)."""
    ev = _EvalContext(matrix)
    return Outcomes(ev.outcome_bits(np.asarray(defectives.items, dtype=np.int64)))
