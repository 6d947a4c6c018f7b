"""Test-count bounds and error floors for constrained group testing.

Each calculator returns a :class:`BoundReport` with the real-valued bound, its
ceiled integer form where meaningful, and the regime assumptions under which
the bound applies. All real arithmetic is float64 with logarithms taken before
exponentiation so large ``n`` does not overflow; ceilings snap within 1e-9
relative tolerance (see :func:`sparsegt.core.iceil`) so decimal-intended
integer boundaries land exactly.

The ``*_count`` helpers are the single source of the integer test counts; the
constructors in :mod:`sparsegt.designs` call them, which is what makes the
"bound equals constructed T" checks exact for the families that emit the
formula count directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import (
    DesignParams,
    InvalidParameterError,
    RegimeError,
    TAG_BLOCK_BINARY_RHO,
    TAG_BLOCK_HYPERGRID,
    TAG_PERMUTED_RHO,
    TAG_RANDOM_GAMMA,
    TAG_REPEATED,
    iceil,
)

__all__ = [
    "BoundReport",
    "gamma_lower_bound",
    "rho_lower_bound",
    "upper_bound_tests",
    "noisy_gamma_error_floor",
    "UPPER_BOUND_FAMILIES",
    "random_gamma_test_count",
    "permuted_constant",
    "repetition_count",
    "binary_regime",
    "hypergrid_block_count",
    "binary_block_count",
    "ceil_div",
]


@dataclass(frozen=True)
class BoundReport:
    """One evaluated bound.

    ``value`` is the real-valued expression; ``integer_value`` its ceiled form
    (None where the bound is a probability, not a test count); ``floor`` is
    only set by the noisy error floor and carries r/(1+r).
    """

    name: str
    value: float
    integer_value: int | None
    assumptions: tuple[str, ...]
    floor: float | None = None

    def render_text(self) -> str:
        lines = [f"name={self.name}", f"value={self.value:.6g}"]
        if self.integer_value is not None:
            lines.append(f"integer_value={self.integer_value}")
        if self.floor is not None:
            lines.append(f"floor={self.floor:.6g}")
        for note in self.assumptions:
            lines.append(f"assumes={note}")
        return "\n".join(lines)

    def render_csv(self) -> str:
        integer = "" if self.integer_value is None else str(self.integer_value)
        floor = "" if self.floor is None else f"{self.floor:.6g}"
        notes = ";".join(self.assumptions)
        return f"{self.name},{self.value:.6g},{integer},{floor},{notes}"


def ceil_div(a: int, b: int) -> int:
    """Exact integer ceiling of a/b for positive ints."""
    return -(-a // b)


# ---------------------------------------------------------------------------
# integer count helpers shared with the constructors
# ---------------------------------------------------------------------------


def random_gamma_test_count(n: int, d: int, gamma: int, epsilon: float) -> int:
    """ceil(e * gamma * d * (n/epsilon)^(1/gamma))."""
    value = _random_gamma_value(n, d, gamma, epsilon)
    return iceil(value)


def _random_gamma_value(n: int, d: int, gamma: int, epsilon: float) -> float:
    return math.exp(
        1.0 + math.log(gamma * d) + (math.log(n) - math.log(epsilon)) / gamma
    )


def permuted_constant(n: int, d: int, rho: int, zeta: float) -> int:
    """Number of pooling passes c = ceil((1+zeta) / ((1-alpha)(1-beta))).

    Uses the algebraically equivalent (1-alpha)(1-beta) = ln(n/(d*rho)) / ln(n),
    which is numerically stable where the factored form accumulates rounding
    that can push an exact integer just above itself.
    """
    if d * rho >= n:
        raise RegimeError(
            f"permuted design needs d*rho < n, got d*rho={d * rho} >= n={n}"
        )
    value = (1.0 + zeta) * math.log(n) / math.log(n / (d * rho))
    return iceil(value)


def repetition_count(n: int, sigma: float, zeta: float) -> int:
    """Repetitions per test k = ceil((1+zeta) * ln(n) / (1/2 - sigma)^2)."""
    if not 0.0 <= sigma < 0.5:
        raise InvalidParameterError("sigma must lie in [0, 1/2)")
    value = (1.0 + zeta) * math.log(n) / (0.5 - sigma) ** 2
    return iceil(value)


def binary_regime(n: int, d: int, rho: int, epsilon: float) -> int:
    """Which block budget binds for the binary block design.

    Regime 1 (rho strictly below n*epsilon/d^2): the test-size budget binds
    and blocks have size <= rho. Regime 2 (ties included): the error budget
    binds and there are ceil(d^2/epsilon) blocks.
    """
    threshold = n * epsilon / (d * d)
    if rho < threshold - 1e-9 * max(1.0, threshold):
        return 1
    return 2


def hypergrid_block_count(d: int, epsilon: float) -> int:
    """ceil(d^2/epsilon) blocks keep the collision probability below epsilon."""
    return iceil(d * d / epsilon)


def binary_block_count(n: int, d: int, rho: int, epsilon: float) -> int:
    if binary_regime(n, d, rho, epsilon) == 1:
        return ceil_div(n, rho)
    return iceil(d * d / epsilon)


# ---------------------------------------------------------------------------
# lower bounds
# ---------------------------------------------------------------------------


def gamma_lower_bound(params: DesignParams) -> BoundReport:
    """Minimum tests any epsilon-error design with column weights <= gamma needs.

    value = gamma * d * (n/d)^((1-5*epsilon)/gamma).
    """
    if params.gamma is None:
        raise InvalidParameterError("gamma_lower_bound requires gamma")
    if params.epsilon is None:
        raise InvalidParameterError("gamma_lower_bound requires epsilon")
    n, d, gamma, eps = params.n, params.d, params.gamma, params.epsilon
    exponent = (1.0 - 5.0 * eps) / gamma
    value = gamma * d * math.exp(exponent * math.log(n / d))
    notes = [
        "applies to every noiseless design with column weights at most gamma",
        "error criterion: exact recovery with probability at least 1-epsilon",
    ]
    if exponent <= 0.0:
        notes.append("epsilon >= 1/5 drives the exponent to zero; bound degenerates to gamma*d")
    return BoundReport(
        name="gamma-lower-bound",
        value=value,
        integer_value=iceil(value),
        assumptions=tuple(notes),
    )


def rho_lower_bound(params: DesignParams) -> BoundReport:
    """Minimum tests any epsilon-error design with row weights <= rho needs.

    value = ((1 - 6*epsilon) / (1 - beta)) * (n / rho), beta = ln(rho)/ln(n/d).
    """
    if params.rho is None:
        raise InvalidParameterError("rho_lower_bound requires rho")
    if params.epsilon is None:
        raise InvalidParameterError("rho_lower_bound requires epsilon")
    n, d, rho, eps = params.n, params.d, params.rho, params.epsilon
    beta = params.beta
    if beta >= 1.0:
        raise RegimeError(
            f"rho_lower_bound needs rho < n/d (beta < 1), got beta={beta:.6g}"
        )
    value = (1.0 - 6.0 * eps) / (1.0 - beta) * (n / rho)
    notes = [
        "applies to every noiseless design with row weights at most rho",
        "regime: rho < n/d so that beta = ln(rho)/ln(n/d) stays below 1",
    ]
    return BoundReport(
        name="rho-lower-bound",
        value=value,
        integer_value=iceil(value),
        assumptions=tuple(notes),
    )


# ---------------------------------------------------------------------------
# achievable upper bounds, one per constructor family
# ---------------------------------------------------------------------------

UPPER_BOUND_FAMILIES = (
    TAG_RANDOM_GAMMA,
    TAG_BLOCK_HYPERGRID,
    TAG_PERMUTED_RHO,
    TAG_BLOCK_BINARY_RHO,
    TAG_REPEATED,
)


def upper_bound_tests(params: DesignParams, family: str) -> BoundReport:
    """Achievable test count of the named constructor family.

    For random-gamma, permuted-rho and repeated the integer value equals the
    constructed matrix's T exactly. For the two block families the integer
    value is an upper bound: the constructions drop empty tests and use
    balanced blocks, so their T never exceeds it.
    """
    if family == TAG_RANDOM_GAMMA:
        return _upper_random_gamma(params)
    if family == TAG_BLOCK_HYPERGRID:
        return _upper_block_hypergrid(params)
    if family == TAG_PERMUTED_RHO:
        return _upper_permuted_rho(params)
    if family == TAG_BLOCK_BINARY_RHO:
        return _upper_block_binary(params)
    if family == TAG_REPEATED:
        return _upper_repeated_rho(params)
    raise InvalidParameterError(
        f"unknown family {family!r}; expected one of {sorted(UPPER_BOUND_FAMILIES)}"
    )


def _upper_random_gamma(params: DesignParams) -> BoundReport:
    if params.gamma is None or params.epsilon is None:
        raise InvalidParameterError("random-gamma bound requires gamma and epsilon")
    value = _random_gamma_value(params.n, params.d, params.gamma, params.epsilon)
    return BoundReport(
        name="random-gamma-tests",
        value=value,
        integer_value=iceil(value),
        assumptions=(
            "uniformly random size-gamma column supports",
            "decoded by the every-test-positive rule",
            "equals the constructed test count exactly",
        ),
    )


def _upper_block_hypergrid(params: DesignParams) -> BoundReport:
    if params.gamma is None or params.epsilon is None:
        raise InvalidParameterError("block-hypergrid bound requires gamma and epsilon")
    n, d, gamma, eps = params.n, params.d, params.gamma, params.epsilon
    block_size = n * eps / (d * d)
    value = (d * d * gamma / eps) * math.exp(math.log(block_size) / gamma)
    # gamma multiplies the ceiled block count: with the ceiling taken after
    # the product, a fractional d^2/eps can undercount the construction
    integer = gamma * iceil(d * d / eps) * max(1, iceil(block_size ** (1.0 / gamma)))
    notes = [
        "upper bound: construction drops empty tests so actual T can be lower",
        "at most one defective per block except with probability <= epsilon",
    ]
    if eps * n < d * d:
        notes.append("eps*n < d^2: blocks degenerate to single items; count is vacuous")
    return BoundReport(
        name="block-hypergrid-tests",
        value=value,
        integer_value=integer,
        assumptions=tuple(notes),
    )


def _upper_permuted_rho(params: DesignParams) -> BoundReport:
    if params.rho is None or params.zeta is None:
        raise InvalidParameterError("permuted-rho bound requires rho and zeta")
    n, d, rho, zeta = params.n, params.d, params.rho, params.zeta
    c = permuted_constant(n, d, rho, zeta)
    value = (1.0 + zeta) / ((1.0 - params.alpha) * (1.0 - params.beta)) * (n / rho)
    return BoundReport(
        name="permuted-rho-tests",
        value=value,
        integer_value=c * ceil_div(n, rho),
        assumptions=(
            "c independent random partitions of the items into tests of size <= rho",
            "target error epsilon = n^(-zeta)",
            "equals the constructed test count exactly",
            "doubling the passes handles every defective count d' in o(n/rho)",
        ),
    )


def _upper_block_binary(params: DesignParams) -> BoundReport:
    if params.rho is None or params.epsilon is None:
        raise InvalidParameterError("block-binary bound requires rho and epsilon")
    n, d, rho, eps = params.n, params.d, params.rho, params.epsilon
    if binary_regime(n, d, rho, eps) == 1:
        blocks = ceil_div(n, rho)
        per_block = rho.bit_length()  # ceil(log2(rho+1)), integer exact
        value = (n / rho) * math.log2(rho + 1)
        regime_note = "test-size budget binds: rho below n*epsilon/d^2"
    else:
        blocks = iceil(d * d / eps)
        block_size = n * eps / (d * d)
        per_block = iceil(math.log2(block_size + 1.0))
        value = (d * d / eps) * math.log2(block_size + 1.0)
        regime_note = "error budget binds: rho at or above n*epsilon/d^2"
    return BoundReport(
        name="block-binary-tests",
        value=value,
        integer_value=blocks * per_block,
        assumptions=(
            regime_note,
            "per block: one test per bit of the local item label",
            "equals the constructed test count when blocks are uniform",
        ),
    )


def _upper_repeated_rho(params: DesignParams) -> BoundReport:
    if params.rho is None or params.zeta is None or params.sigma is None:
        raise InvalidParameterError("repeated bound requires rho, zeta and sigma")
    n, d, rho, zeta, sigma = params.n, params.d, params.rho, params.zeta, params.sigma
    c = permuted_constant(n, d, rho, zeta)
    k = repetition_count(n, sigma, zeta)
    value = (
        (1.0 + zeta)
        / ((1.0 - params.alpha) * (1.0 - params.beta))
        * (n / rho)
        * ((1.0 + zeta) * math.log(n) / (0.5 - sigma) ** 2)
    )
    return BoundReport(
        name="repeated-rho-tests",
        value=value,
        integer_value=c * ceil_div(n, rho) * k,
        assumptions=(
            "each base test repeated k times through the bit-flip channel",
            "majority vote recovers each base outcome with high probability",
            "achieves error at most 2*n^(-zeta)",
            "equals the constructed test count exactly",
        ),
    )


# ---------------------------------------------------------------------------
# noisy error floor
# ---------------------------------------------------------------------------


def noisy_gamma_error_floor(d: int, gamma: int, sigma: float) -> BoundReport:
    """No decoder beats this error under bit-flip noise with column weights <= gamma.

    r = d * (sigma/(1-sigma))^gamma is an odds mass; every decoder errs with
    probability at least r/(1+r) when each item is defective independently
    with probability d/n and d < n/2.
    """
    if d < 1 or gamma < 1:
        raise InvalidParameterError("noisy floor requires d >= 1 and gamma >= 1")
    if not 0.0 < sigma < 0.5:
        raise InvalidParameterError("noisy floor requires 0 < sigma < 1/2")
    r = d * (sigma / (1.0 - sigma)) ** gamma
    return BoundReport(
        name="noisy-gamma-error-floor",
        value=r,
        integer_value=None,
        assumptions=(
            "items defective independently with probability d/n and d < n/2",
            "every column appears in at most gamma tests",
            "holds for every decoder including maximum a posteriori",
        ),
        floor=r / (1.0 + r),
    )
