"""Core types and operations for non-adaptive group testing.

A test design is a boolean incidence structure over ``n`` items: each test
(row) pools a subset of items, and a test comes back positive exactly when it
contains at least one defective item. This module holds the value types shared
by the rest of the package (test matrices, defective sets, outcome vectors,
parameter bundles), the OR-channel evaluation, the symmetric bit-flip noise
channel, structural validation, and the text serialization of designs.

Indices are 0-based everywhere in code and in files; the CLI additionally
prints 1-based test labels where it echoes per-test detail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

__all__ = [
    "GroupTestingError",
    "InvalidParameterError",
    "RegimeError",
    "ParseError",
    "ResourceCapError",
    "IncompatibleDecoderError",
    "TAG_RANDOM_GAMMA",
    "TAG_HYPERGRID",
    "TAG_BLOCK_HYPERGRID",
    "TAG_PERMUTED_RHO",
    "TAG_BLOCK_BINARY_RHO",
    "TAG_REPEATED",
    "TAG_CUSTOM",
    "DESIGN_TAGS",
    "PRIOR_UNIFORM_EXACT",
    "PRIOR_IID_BERNOULLI",
    "Prior",
    "DefectiveSet",
    "Outcomes",
    "TestMatrix",
    "DesignParams",
    "Violation",
    "evaluate",
    "apply_noise",
    "validate",
    "serialize",
    "parse",
    "serialize_outcomes",
    "parse_outcomes",
    "iceil",
]


# ---------------------------------------------------------------------------
# errors
# ---------------------------------------------------------------------------


class GroupTestingError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(GroupTestingError, ValueError):
    """An argument violates a documented precondition."""


class RegimeError(InvalidParameterError):
    """Parameters fall outside the regime where a construction or bound applies."""


class ParseError(GroupTestingError, ValueError):
    """A design or outcome file is malformed. Carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ResourceCapError(GroupTestingError, RuntimeError):
    """A requested computation exceeds a configured size cap."""


class IncompatibleDecoderError(GroupTestingError, ValueError):
    """The requested decoder cannot be applied to the given matrix/noise pairing."""


# ---------------------------------------------------------------------------
# design tags and priors
# ---------------------------------------------------------------------------

TAG_RANDOM_GAMMA = "random-gamma"
TAG_HYPERGRID = "hypergrid"
TAG_BLOCK_HYPERGRID = "block-hypergrid"
TAG_PERMUTED_RHO = "permuted-rho"
TAG_BLOCK_BINARY_RHO = "block-binary-rho"
TAG_REPEATED = "repeated"
TAG_CUSTOM = "custom"

DESIGN_TAGS = frozenset(
    {
        TAG_RANDOM_GAMMA,
        TAG_HYPERGRID,
        TAG_BLOCK_HYPERGRID,
        TAG_PERMUTED_RHO,
        TAG_BLOCK_BINARY_RHO,
        TAG_REPEATED,
        TAG_CUSTOM,
    }
)

PRIOR_UNIFORM_EXACT = "uniform-exact-d"
PRIOR_IID_BERNOULLI = "iid-bernoulli"


@dataclass(frozen=True)
class Prior:
    """Distribution of the defective set.

    ``uniform-exact-d`` draws a uniformly random size-``d`` subset of items;
    ``iid-bernoulli`` marks each item defective independently with probability
    ``d / n`` (so ``d`` is the expected number of defectives).
    """

    kind: str
    d: int

    def __post_init__(self) -> None:
        if self.kind not in (PRIOR_UNIFORM_EXACT, PRIOR_IID_BERNOULLI):
            raise InvalidParameterError(f"unknown prior kind: {self.kind!r}")
        if self.d < 0:
            raise InvalidParameterError("prior defective count d must be >= 0")


# ---------------------------------------------------------------------------
# value types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DefectiveSet:
    """A set of defective items inside a universe of ``universe`` items.

    Items are stored as a strictly increasing tuple; any iterable is accepted
    and normalized (duplicates collapse, order is ignored).
    """

    items: tuple[int, ...]
    universe: int

    def __init__(self, items: Iterable[int], universe: int):
        normalized = tuple(sorted({int(i) for i in items}))
        if universe < 0:
            raise InvalidParameterError("universe size must be >= 0")
        if normalized and (normalized[0] < 0 or normalized[-1] >= universe):
            raise InvalidParameterError(
                f"item indices must lie in [0, {universe}), got {normalized}"
            )
        object.__setattr__(self, "items", normalized)
        object.__setattr__(self, "universe", universe)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[int]:
        return iter(self.items)

    def __contains__(self, item: int) -> bool:
        return item in set(self.items)

    def as_mask(self) -> np.ndarray:
        mask = np.zeros(self.universe, dtype=bool)
        if self.items:
            mask[list(self.items)] = True
        return mask


@dataclass(frozen=True, eq=False)
class Outcomes:
    """An outcome vector: one boolean per test, True = positive.

    ``noisy`` records whether the vector passed through the bit-flip channel.
    The underlying array is write-locked; treat instances as immutable.
    """

    bits: np.ndarray
    noisy: bool = False

    def __post_init__(self) -> None:
        arr = np.array(self.bits, dtype=bool, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    @property
    def num_tests(self) -> int:
        return int(self.bits.shape[0])

    def positives(self) -> tuple[int, ...]:
        """Indices of positive tests, 0-based."""
        return tuple(int(i) for i in np.flatnonzero(self.bits))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Outcomes):
            return NotImplemented
        return self.noisy == other.noisy and np.array_equal(self.bits, other.bits)

    def __repr__(self) -> str:
        word = "".join("1" if b else "0" for b in self.bits)
        return f"Outcomes({word!r}, noisy={self.noisy})"


@dataclass(frozen=True)
class TestMatrix:
    """A pooling design: ``rows[t]`` lists the items pooled by test ``t``.

    ``col_limit`` caps how many tests any single item may appear in (item
    divisibility); ``row_limit`` caps how many items any single test may pool
    (test size). Either may be None when unconstrained. Block designs carry
    ``block_starts``, the start offsets of the contiguous item blocks (always
    beginning with 0). Repeated designs carry ``repeat_k`` > 1 and the
    ``base_tag`` of the design whose rows were duplicated.

    Construction performs only structural normalization; use :func:`validate`
    to obtain a report of invariant violations, which are representable on
    purpose so they can be reported rather than half-rejected.
    """

    __test__ = False  # keep pytest from collecting this as a test class

    rows: tuple[tuple[int, ...], ...]
    num_items: int
    col_limit: int | None = None
    row_limit: int | None = None
    design_tag: str = TAG_CUSTOM
    block_starts: tuple[int, ...] | None = None
    base_tag: str | None = None
    repeat_k: int = 1

    def __post_init__(self) -> None:
        rows = tuple(tuple(int(i) for i in row) for row in self.rows)
        object.__setattr__(self, "rows", rows)
        if self.num_items < 1:
            raise InvalidParameterError("num_items must be >= 1")
        if self.design_tag not in DESIGN_TAGS:
            raise InvalidParameterError(f"unknown design tag: {self.design_tag!r}")
        if self.repeat_k < 1:
            raise InvalidParameterError("repeat_k must be >= 1")
        if self.block_starts is not None:
            object.__setattr__(
                self, "block_starts", tuple(int(s) for s in self.block_starts)
            )

    @property
    def num_tests(self) -> int:
        return len(self.rows)

    def row_weights(self) -> np.ndarray:
        return np.array([len(r) for r in self.rows], dtype=np.int64)

    def column_weights(self) -> np.ndarray:
        weights = np.zeros(self.num_items, dtype=np.int64)
        for row in self.rows:
            for i in row:
                weights[i] += 1
        return weights

    def ones_count(self) -> int:
        return sum(len(r) for r in self.rows)

    def block_bounds(self) -> tuple[tuple[int, int], ...]:
        """(start, end) item ranges of the blocks; the whole item range
        counts as a single block when no block structure is recorded."""
        if self.block_starts is None:
            return ((0, self.num_items),)
        starts = list(self.block_starts) + [self.num_items]
        return tuple((starts[i], starts[i + 1]) for i in range(len(self.block_starts)))


@dataclass(frozen=True)
class DesignParams:
    """Problem parameters shared by constructions and bound calculators.

    ``n`` items of which ``d`` are defective, target error probability
    ``epsilon``, per-item test budget ``gamma``, per-test item budget ``rho``,
    channel flip probability ``sigma``, and rate exponent ``zeta`` (used where
    the target error is expressed as a power of n). ``alpha`` and ``beta`` are
    the derived sparsity exponents d = n^alpha and rho = (n/d)^beta.
    """

    n: int
    d: int
    epsilon: float | None = None
    gamma: int | None = None
    rho: int | None = None
    sigma: float | None = None
    zeta: float | None = None

    def __post_init__(self) -> None:
        if self.n < 2:
            raise InvalidParameterError("n must be >= 2")
        if not 1 <= self.d < self.n:
            raise InvalidParameterError("d must satisfy 1 <= d < n")
        if self.epsilon is not None and not 0.0 < self.epsilon < 0.5:
            raise InvalidParameterError("epsilon must lie in (0, 1/2)")
        if self.gamma is not None and self.gamma < 1:
            raise InvalidParameterError("gamma must be >= 1")
        if self.rho is not None and self.rho < 1:
            raise InvalidParameterError("rho must be >= 1")
        if self.sigma is not None and not 0.0 <= self.sigma < 0.5:
            raise InvalidParameterError("sigma must lie in [0, 1/2)")
        if self.zeta is not None and self.zeta <= 0.0:
            raise InvalidParameterError("zeta must be > 0")

    @property
    def alpha(self) -> float:
        """Defective-count exponent: d = n^alpha."""
        return math.log(self.d) / math.log(self.n)

    @property
    def beta(self) -> float:
        """Test-size exponent: rho = (n/d)^beta. Requires rho."""
        if self.rho is None:
            raise InvalidParameterError("beta requires rho to be set")
        return math.log(self.rho) / math.log(self.n / self.d)

    @property
    def effective_epsilon(self) -> float | None:
        """epsilon when given, else n^(-zeta) when zeta is given."""
        if self.epsilon is not None:
            return self.epsilon
        if self.zeta is not None:
            return float(self.n) ** (-self.zeta)
        return None


# ---------------------------------------------------------------------------
# numeric helpers
# ---------------------------------------------------------------------------


def iceil(x: float) -> int:
    """Ceiling with a 1e-9 relative snap.

    Formula values like d^2/eps are computed in float64 from decimal inputs;
    a hair above an exact integer boundary must not bump the ceiling up.
    """
    return math.ceil(x - 1e-9 * max(1.0, abs(x)))


def int_root_ceil(value: int, k: int) -> int:
    """Smallest integer b with b**k >= value, for value >= 1 (exact)."""
    if value < 1 or k < 1:
        raise InvalidParameterError("int_root_ceil requires value >= 1 and k >= 1")
    b = max(1, round(value ** (1.0 / k)))
    while b > 1 and (b - 1) ** k >= value:
        b -= 1
    while b**k < value:
        b += 1
    return b


# ---------------------------------------------------------------------------
# channel operations
# ---------------------------------------------------------------------------


def evaluate(matrix: TestMatrix, defectives: DefectiveSet) -> Outcomes:
    """Noiseless OR-channel outcomes: test t is positive iff it pools a defective."""
    if defectives.universe != matrix.num_items:
        raise InvalidParameterError(
            f"defective set is over {defectives.universe} items, "
            f"matrix has {matrix.num_items}"
        )
    mask = defectives.as_mask()
    bits = np.fromiter(
        (any(mask[i] for i in row) for row in matrix.rows),
        dtype=bool,
        count=matrix.num_tests,
    )
    return Outcomes(bits)


def apply_noise(outcomes: Outcomes, sigma: float, rng: np.random.Generator) -> Outcomes:
    """Flip each outcome bit independently with probability sigma.

    sigma = 0 returns the input unchanged and consumes no randomness.
    """
    if not 0.0 <= sigma < 0.5:
        raise InvalidParameterError("sigma must lie in [0, 1/2)")
    if sigma == 0.0:
        return outcomes
    flips = rng.random(outcomes.num_tests) < sigma
    return Outcomes(np.logical_xor(outcomes.bits, flips), noisy=True)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    """One structural invariant violation found by :func:`validate`."""

    kind: str
    subject: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind} at {self.subject}: {self.detail}"


def validate(matrix: TestMatrix) -> list[Violation]:
    """Check every structural invariant; empty report means the matrix is valid.

    Checks: row indices in range and strictly increasing, row weights within
    row_limit, column weights within col_limit, block offsets well formed, and
    repeated designs made of consecutive duplicate row groups.
    """
    report: list[Violation] = []
    n = matrix.num_items
    col_weight = np.zeros(n, dtype=np.int64)
    for t, row in enumerate(matrix.rows):
        in_range = True
        for i in row:
            if not 0 <= i < n:
                report.append(
                    Violation("index-range", f"row {t}", f"index {i} outside [0, {n})")
                )
                in_range = False
        if any(row[j] >= row[j + 1] for j in range(len(row) - 1)):
            report.append(
                Violation("row-order", f"row {t}", "indices not strictly increasing")
            )
        if matrix.row_limit is not None and len(row) > matrix.row_limit:
            report.append(
                Violation(
                    "row-weight",
                    f"row {t}",
                    f"weight {len(row)} exceeds limit {matrix.row_limit}",
                )
            )
        if in_range:
            for i in set(row):
                col_weight[i] += 1
    if matrix.col_limit is not None:
        for i in np.flatnonzero(col_weight > matrix.col_limit):
            report.append(
                Violation(
                    "col-weight",
                    f"column {int(i)}",
                    f"weight {int(col_weight[i])} exceeds limit {matrix.col_limit}",
                )
            )
    if matrix.block_starts is not None:
        starts = matrix.block_starts
        ok = len(starts) > 0 and starts[0] == 0 and starts[-1] < n
        ok = ok and all(starts[j] < starts[j + 1] for j in range(len(starts) - 1))
        if not ok:
            report.append(
                Violation(
                    "block-structure",
                    "block_starts",
                    "offsets must start at 0, increase strictly, and stay below n",
                )
            )
    if matrix.repeat_k > 1:
        k = matrix.repeat_k
        if matrix.num_tests % k != 0:
            report.append(
                Violation(
                    "repetition",
                    "rows",
                    f"{matrix.num_tests} rows not divisible by repeat_k={k}",
                )
            )
        else:
            for g in range(matrix.num_tests // k):
                group = matrix.rows[g * k : (g + 1) * k]
                if any(r != group[0] for r in group[1:]):
                    report.append(
                        Violation(
                            "repetition",
                            f"rows {g * k}..{(g + 1) * k - 1}",
                            "repeated design rows must be consecutive duplicates",
                        )
                    )
                    break
    return report


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------
#
# Design file: '#' lines are comments; the first content line is
#   "T n [gamma=G] [rho=R] [tag=NAME] [k=K] [base=TAG] [blocks=s0,s1,...]"
# followed by exactly T content lines "w i_1 ... i_w" with strictly increasing
# 0-based indices. Outcome file: one content line of T characters '0'/'1'.


def serialize(matrix: TestMatrix) -> str:
    header = [str(matrix.num_tests), str(matrix.num_items)]
    if matrix.col_limit is not None:
        header.append(f"gamma={matrix.col_limit}")
    if matrix.row_limit is not None:
        header.append(f"rho={matrix.row_limit}")
    if matrix.design_tag != TAG_CUSTOM:
        header.append(f"tag={matrix.design_tag}")
    if matrix.repeat_k > 1:
        header.append(f"k={matrix.repeat_k}")
    if matrix.base_tag is not None:
        header.append(f"base={matrix.base_tag}")
    if matrix.block_starts is not None:
        header.append("blocks=" + ",".join(str(s) for s in matrix.block_starts))
    lines = [" ".join(header)]
    for row in matrix.rows:
        lines.append(" ".join([str(len(row))] + [str(i) for i in row]))
    return "\n".join(lines) + "\n"


def _parse_positive_int(token: str, line_no: int, what: str) -> int:
    try:
        value = int(token)
    except ValueError:
        raise ParseError(line_no, f"{what} must be an integer, got {token!r}") from None
    if value < 1:
        raise ParseError(line_no, f"{what} must be >= 1, got {value}")
    return value


def parse(text: str) -> TestMatrix:
    """Inverse of :func:`serialize`; raises :class:`ParseError` with the
    offending 1-based line number on any malformation."""
    content: list[tuple[int, str]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        content.append((line_no, stripped))
    if not content:
        raise ParseError(1, "empty design file")

    header_no, header = content[0]
    tokens = header.split()
    if len(tokens) < 2:
        raise ParseError(header_no, "header needs at least 'T n'")
    try:
        num_tests = int(tokens[0])
    except ValueError:
        raise ParseError(header_no, f"test count T must be an integer, got {tokens[0]!r}") from None
    if num_tests < 0:
        raise ParseError(header_no, f"test count T must be >= 0, got {num_tests}")
    num_items = _parse_positive_int(tokens[1], header_no, "item count n")

    col_limit: int | None = None
    row_limit: int | None = None
    tag = TAG_CUSTOM
    base_tag: str | None = None
    repeat_k = 1
    block_starts: tuple[int, ...] | None = None
    for token in tokens[2:]:
        key, sep, value = token.partition("=")
        if not sep:
            raise ParseError(header_no, f"expected key=value, got {token!r}")
        if key == "gamma":
            col_limit = _parse_positive_int(value, header_no, "gamma")
        elif key == "rho":
            row_limit = _parse_positive_int(value, header_no, "rho")
        elif key == "tag":
            if value not in DESIGN_TAGS:
                raise ParseError(header_no, f"unknown design tag {value!r}")
            tag = value
        elif key == "base":
            if value not in DESIGN_TAGS:
                raise ParseError(header_no, f"unknown base tag {value!r}")
            base_tag = value
        elif key == "k":
            repeat_k = _parse_positive_int(value, header_no, "repetition count k")
        elif key == "blocks":
            try:
                starts = tuple(int(s) for s in value.split(","))
            except ValueError:
                raise ParseError(
                    header_no, f"blocks must be comma-separated integers, got {value!r}"
                ) from None
            if (
                not starts
                or starts[0] != 0
                or any(a >= b for a, b in zip(starts, starts[1:]))
                or starts[-1] >= num_items
            ):
                raise ParseError(
                    header_no,
                    "block offsets must start at 0, increase strictly, and stay below n",
                )
            block_starts = starts
        else:
            raise ParseError(header_no, f"unknown header key {key!r}")

    body = content[1:]
    if len(body) < num_tests:
        last = body[-1][0] if body else header_no
        raise ParseError(
            last, f"expected {num_tests} row lines, found only {len(body)}"
        )
    if len(body) > num_tests:
        raise ParseError(body[num_tests][0], "trailing content after last row")

    rows: list[tuple[int, ...]] = []
    for line_no, line in body:
        parts = line.split()
        try:
            numbers = [int(p) for p in parts]
        except ValueError:
            raise ParseError(line_no, f"row entries must be integers: {line!r}") from None
        weight = numbers[0]
        indices = numbers[1:]
        if weight < 0:
            raise ParseError(line_no, f"row weight must be >= 0, got {weight}")
        if len(indices) != weight:
            raise ParseError(
                line_no, f"row declares weight {weight} but lists {len(indices)} indices"
            )
        for i in indices:
            if not 0 <= i < num_items:
                raise ParseError(line_no, f"index {i} outside [0, {num_items})")
        if any(indices[j] >= indices[j + 1] for j in range(len(indices) - 1)):
            raise ParseError(line_no, "row indices must be strictly increasing")
        rows.append(tuple(indices))

    return TestMatrix(
        rows=tuple(rows),
        num_items=num_items,
        col_limit=col_limit,
        row_limit=row_limit,
        design_tag=tag,
        block_starts=block_starts,
        base_tag=base_tag,
        repeat_k=repeat_k,
    )


def serialize_outcomes(outcomes: Outcomes) -> str:
    return "".join("1" if b else "0" for b in outcomes.bits) + "\n"


def parse_outcomes(text: str, expected_tests: int | None = None) -> Outcomes:
    content = [
        (line_no, raw.strip())
        for line_no, raw in enumerate(text.splitlines(), start=1)
        if raw.strip() and not raw.strip().startswith("#")
    ]
    if not content:
        raise ParseError(1, "empty outcome file")
    if len(content) > 1:
        raise ParseError(content[1][0], "outcome file must contain a single line")
    line_no, word = content[0]
    if any(ch not in "01" for ch in word):
        raise ParseError(line_no, "outcome line may contain only '0' and '1'")
    if expected_tests is not None and len(word) != expected_tests:
        raise ParseError(
            line_no, f"expected {expected_tests} outcome bits, got {len(word)}"
        )
    return Outcomes(np.array([ch == "1" for ch in word], dtype=bool))
