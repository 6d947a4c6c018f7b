"""Constructors for constrained pooling designs.

Two resource constraints appear throughout: ``gamma`` caps how many tests any
item may join (item divisibility), ``rho`` caps how many items any test may
pool (test size). Each constructor returns a :class:`~sparsegt.core.TestMatrix`
that passes :func:`~sparsegt.core.validate` and, where the underlying count
formula is emitted exactly, agrees with the matching
:func:`~sparsegt.bounds.upper_bound_tests` report.

Randomized constructors take an explicit ``numpy.random.Generator``; equal
generators yield identical matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bounds import (
    binary_block_count,
    ceil_div,
    hypergrid_block_count,
    permuted_constant,
    random_gamma_test_count,
)
from .core import (
    InvalidParameterError,
    ResourceCapError,
    TAG_BLOCK_BINARY_RHO,
    TAG_BLOCK_HYPERGRID,
    TAG_HYPERGRID,
    TAG_PERMUTED_RHO,
    TAG_RANDOM_GAMMA,
    TAG_REPEATED,
    TestMatrix,
    int_root_ceil,
)

__all__ = [
    "HypergridShape",
    "hypergrid_shape",
    "balanced_block_starts",
    "random_gamma_design",
    "hypergrid_design",
    "block_hypergrid_design",
    "permuted_block_rho_design",
    "block_binary_rho_design",
    "repeat_design",
]


# ---------------------------------------------------------------------------
# hypergrid geometry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HypergridShape:
    """Geometry of one gamma-dimensional digit grid over ``size`` items.

    Item j (0-based, local to the grid) has digit (j // base**axis) % base on
    each axis. One test pools the items sharing a digit on an axis; tests are
    emitted axis-major (axis 0 digits first), and digits no item takes are
    omitted. ``axis_digits[a]`` is the number of tests emitted for axis ``a``;
    only a prefix of digits 0..axis_digits[a]-1 ever has support because local
    indices are consecutive.
    """

    size: int
    gamma: int
    base: int
    axis_digits: tuple[int, ...]

    @property
    def num_tests(self) -> int:
        return sum(self.axis_digits)


def hypergrid_shape(size: int, gamma: int) -> HypergridShape:
    if size < 1 or gamma < 1:
        raise InvalidParameterError("hypergrid needs size >= 1 and gamma >= 1")
    base = int_root_ceil(size, gamma)
    axis_digits = tuple(
        min(base, ceil_div(size, base**axis)) for axis in range(gamma)
    )
    return HypergridShape(size=size, gamma=gamma, base=base, axis_digits=axis_digits)


def _hypergrid_rows(start: int, shape: HypergridShape) -> list[tuple[int, ...]]:
    rows: list[tuple[int, ...]] = []
    b = shape.base
    for axis in range(shape.gamma):
        scale = b**axis
        for digit in range(shape.axis_digits[axis]):
            rows.append(
                tuple(
                    start + j
                    for j in range(shape.size)
                    if (j // scale) % b == digit
                )
            )
    return rows


# ---------------------------------------------------------------------------
# block partitioning
# ---------------------------------------------------------------------------


def balanced_block_starts(n: int, num_blocks: int) -> tuple[int, ...]:
    """Start offsets of a contiguous balanced partition of [0, n).

    Produces exactly min(num_blocks, n) non-empty blocks whose sizes differ by
    at most one; more blocks than items would force empty blocks, and a
    partition into singletons is already collision-free.
    """
    if n < 1 or num_blocks < 1:
        raise InvalidParameterError("partition needs n >= 1 and num_blocks >= 1")
    nb = min(num_blocks, n)
    return tuple(i * n // nb for i in range(nb))


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------


def random_gamma_design(
    n: int,
    d: int,
    gamma: int,
    epsilon: float,
    rng: np.random.Generator,
    max_tests: int = 10_000_000,
) -> TestMatrix:
    """Random design with every item in exactly gamma uniformly chosen tests.

    T = ceil(e * gamma * d * (n/epsilon)^(1/gamma)); each item independently
    joins a uniformly random size-gamma subset of the tests. Decoded by the
    every-test-positive rule with error probability at most epsilon when at
    most d items are defective.
    """
    _check_common(n, d)
    if gamma < 1:
        raise InvalidParameterError("gamma must be >= 1")
    if not 0.0 < epsilon < 0.5:
        raise InvalidParameterError("epsilon must lie in (0, 1/2)")
    num_tests = random_gamma_test_count(n, d, gamma, epsilon)
    if num_tests > max_tests:
        raise ResourceCapError(
            f"design needs {num_tests} tests, above the cap of {max_tests}"
        )
    rows: list[list[int]] = [[] for _ in range(num_tests)]
    for item in range(n):
        picks = rng.integers(0, num_tests, size=gamma)
        while len(set(int(p) for p in picks)) < gamma:
            picks = rng.integers(0, num_tests, size=gamma)
        for t in picks:
            rows[int(t)].append(item)
    # items were appended in increasing order, so each row is already sorted
    return TestMatrix(
        rows=tuple(tuple(r) for r in rows),
        num_items=n,
        col_limit=gamma,
        row_limit=None,
        design_tag=TAG_RANDOM_GAMMA,
    )


def hypergrid_design(n: int, gamma: int) -> TestMatrix:
    """One digit grid over all n items; at most gamma * ceil(n^(1/gamma)) tests.

    Every item joins exactly gamma tests (one per axis). Decodes exactly when
    at most one item is defective.
    """
    shape = hypergrid_shape(n, gamma)
    return TestMatrix(
        rows=tuple(_hypergrid_rows(0, shape)),
        num_items=n,
        col_limit=gamma,
        row_limit=None,
        design_tag=TAG_HYPERGRID,
    )


def block_hypergrid_design(n: int, d: int, gamma: int, epsilon: float) -> TestMatrix:
    """Balanced blocks, one digit grid per block.

    ceil(d^2/epsilon) contiguous blocks (capped at n) make two defectives
    sharing a block an epsilon-rare event; each block then only has to handle
    a single defective, which its grid does exactly.
    """
    _check_common(n, d)
    if gamma < 1:
        raise InvalidParameterError("gamma must be >= 1")
    if not 0.0 < epsilon < 1.0:
        raise InvalidParameterError("epsilon must lie in (0, 1)")
    starts = balanced_block_starts(n, hypergrid_block_count(d, epsilon))
    rows: list[tuple[int, ...]] = []
    bounds = list(starts[1:]) + [n]
    for start, end in zip(starts, bounds):
        rows.extend(_hypergrid_rows(start, hypergrid_shape(end - start, gamma)))
    return TestMatrix(
        rows=tuple(rows),
        num_items=n,
        col_limit=gamma,
        row_limit=None,
        design_tag=TAG_BLOCK_HYPERGRID,
        block_starts=starts,
    )


def permuted_block_rho_design(
    n: int, d: int, rho: int, zeta: float, rng: np.random.Generator
) -> TestMatrix:
    """c independent random partitions of the items into tests of size <= rho.

    Each pass shuffles the items and chops the shuffle into ceil(n/rho)
    consecutive chunks, so every item is pooled exactly once per pass and
    every test pools at most rho items. The pass count
    c = ceil((1+zeta)/((1-alpha)(1-beta))) makes the every-test-positive
    decoder err with probability at most n^(-zeta) for d defectives.
    """
    _check_common(n, d)
    if rho < 1:
        raise InvalidParameterError("rho must be >= 1")
    if zeta <= 0.0:
        raise InvalidParameterError("zeta must be > 0")
    c = permuted_constant(n, d, rho, zeta)
    rows: list[tuple[int, ...]] = []
    for _ in range(c):
        perm = rng.permutation(n)
        for j in range(0, n, rho):
            chunk = perm[j : j + rho]
            chunk.sort()
            rows.append(tuple(int(i) for i in chunk))
    return TestMatrix(
        rows=tuple(rows),
        num_items=n,
        col_limit=c,
        row_limit=rho,
        design_tag=TAG_PERMUTED_RHO,
    )


def block_binary_rho_design(n: int, d: int, rho: int, epsilon: float) -> TestMatrix:
    """Balanced blocks, one test per bit of the local item label in each block.

    Block count: ceil(n/rho) while rho stays below n*epsilon/d^2 (test-size
    budget binds), else ceil(d^2/epsilon) (error budget binds); both capped at
    n. Within a block of size m, local labels run 1..m and test r pools the
    labels whose bit r is set, so a lone defective reads off its own label.
    The all-zero pattern is reserved for "no defective in this block".
    """
    _check_common(n, d)
    if rho < 1:
        raise InvalidParameterError("rho must be >= 1")
    if not 0.0 < epsilon < 1.0:
        raise InvalidParameterError("epsilon must lie in (0, 1)")
    starts = balanced_block_starts(n, binary_block_count(n, d, rho, epsilon))
    rows: list[tuple[int, ...]] = []
    bounds = list(starts[1:]) + [n]
    for start, end in zip(starts, bounds):
        size = end - start
        for r in range(size.bit_length()):
            rows.append(
                tuple(start + j - 1 for j in range(1, size + 1) if (j >> r) & 1)
            )
    return TestMatrix(
        rows=tuple(rows),
        num_items=n,
        col_limit=None,
        row_limit=rho,
        design_tag=TAG_BLOCK_BINARY_RHO,
        block_starts=starts,
    )


def repeat_design(matrix: TestMatrix, k: int) -> TestMatrix:
    """Duplicate every test k times consecutively (for majority voting).

    k = 1 returns the matrix unchanged. The per-item budget scales to
    k * col_limit; the per-test budget is unchanged.
    """
    if k < 1:
        raise InvalidParameterError("repetition count k must be >= 1")
    if k == 1:
        return matrix
    if matrix.repeat_k > 1:
        raise InvalidParameterError("matrix is already a repeated design")
    rows = tuple(row for row in matrix.rows for _ in range(k))
    return TestMatrix(
        rows=rows,
        num_items=matrix.num_items,
        col_limit=None if matrix.col_limit is None else matrix.col_limit * k,
        row_limit=matrix.row_limit,
        design_tag=TAG_REPEATED,
        block_starts=matrix.block_starts,
        base_tag=matrix.design_tag,
        repeat_k=k,
    )


def _check_common(n: int, d: int) -> None:
    if n < 2:
        raise InvalidParameterError("n must be >= 2")
    if not 1 <= d < n:
        raise InvalidParameterError("d must satisfy 1 <= d < n")
