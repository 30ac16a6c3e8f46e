"""Peres-Mermin square over exact Gaussian-integer matrices.

Operators are 4x4 matrices stored as a pair of integer arrays (real part,
imaginary part). No floating point is used, so "commutes" and "equals the
identity" are exact comparisons.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import StructuralError


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    re: np.ndarray
    im: np.ndarray

    def __post_init__(self):
        re = np.array(self.re, dtype=np.int64)
        im = np.array(self.im, dtype=np.int64)
        if re.shape != im.shape or re.ndim != 2 or re.shape[0] != re.shape[1]:
            raise ValueError("operator must be a square matrix")
        re.setflags(write=False)
        im.setflags(write=False)
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)

    @classmethod
    def identity(cls, dim: int) -> "OperatorMatrix":
        return cls(np.eye(dim, dtype=np.int64), np.zeros((dim, dim), dtype=np.int64))

    @property
    def dim(self) -> int:
        return self.re.shape[0]

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(self.re @ other.re - self.im @ other.im, self.re @ other.im + self.im @ other.re)

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(self.re - other.re, self.im - other.im)

    def __neg__(self) -> "OperatorMatrix":
        return OperatorMatrix(-self.re, -self.im)

    def __eq__(self, other) -> bool:
        if not isinstance(other, OperatorMatrix):
            return NotImplemented
        return np.array_equal(self.re, other.re) and np.array_equal(self.im, other.im)

    def __hash__(self):
        return hash((self.re.tobytes(), self.im.tobytes()))

    def kron(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(
            np.kron(self.re, other.re) - np.kron(self.im, other.im),
            np.kron(self.re, other.im) + np.kron(self.im, other.re),
        )

    def dagger(self) -> "OperatorMatrix":
        return OperatorMatrix(self.re.T, -self.im.T)

    def is_zero(self) -> bool:
        return not self.re.any() and not self.im.any()

    def is_hermitian(self) -> bool:
        return self == self.dagger()

    def scalar_of_identity(self) -> tuple[int, int] | None:
        """(re, im) of c if this matrix is exactly c * I, else None."""
        c_re, c_im = int(self.re[0, 0]), int(self.im[0, 0])
        eye = np.eye(self.dim, dtype=np.int64)
        if np.array_equal(self.re, c_re * eye) and np.array_equal(self.im, c_im * eye):
            return c_re, c_im
        return None

    def to_complex(self) -> np.ndarray:
        """Float view for display and cross-checks only."""
        return self.re + 1j * self.im


I2 = OperatorMatrix.identity(2)
X = OperatorMatrix([[0, 1], [1, 0]], [[0, 0], [0, 0]])
Y = OperatorMatrix([[0, 0], [0, 0]], [[0, -1], [1, 0]])
Z = OperatorMatrix([[1, 0], [0, -1]], [[0, 0], [0, 0]])
I4 = OperatorMatrix.identity(4)

PAULI = {"x": X, "y": Y, "z": Z}
OBSERVABLES = ("x1", "y1", "z1", "x2", "y2", "z2")

# Each entry lists its single-particle factors, e.g. "x1" = sigma_x on particle 1.
SQUARE_FACTORS = (
    (("x1",), ("x2",), ("x1", "x2")),
    (("y2",), ("y1",), ("y1", "y2")),
    (("x1", "y2"), ("x2", "y1"), ("z1", "z2")),
)


def commutator(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    return a @ b - b @ a


def single_particle(name: str) -> OperatorMatrix:
    """sigma on particle 1 (first tensor slot) or particle 2 (second slot)."""
    pauli, particle = PAULI[name[0]], name[1]
    return pauli.kron(I2) if particle == "1" else I2.kron(pauli)


def entry_operator(factors) -> OperatorMatrix:
    op = I4
    for name in factors:
        op = op @ single_particle(name)
    return op


def _label(factors) -> str:
    return "".join(f"s{n[0]}^{n[1]}" for n in factors)


@dataclass(frozen=True)
class MerminSquare:
    ops: tuple[tuple[OperatorMatrix, ...], ...]
    labels: tuple[tuple[str, ...], ...]
    factors: tuple = SQUARE_FACTORS

    def entry(self, row: int, col: int) -> OperatorMatrix:
        return self.ops[row][col]

    def contexts(self):
        """Yield (name, [(row, col), ...]) for the three rows then the three columns."""
        for r in range(3):
            yield f"row{r}", [(r, c) for c in range(3)]
        for c in range(3):
            yield f"col{c}", [(r, c) for r in range(3)]


def build_square() -> MerminSquare:
    ops = tuple(tuple(entry_operator(f) for f in row) for row in SQUARE_FACTORS)
    labels = tuple(tuple(_label(f) for f in row) for row in SQUARE_FACTORS)
    sq = MerminSquare(ops, labels)
    for row in ops:
        for op in row:
            if not op.is_hermitian() or op @ op != I4:
                raise StructuralError("square entry is not a Hermitian involution")
    return sq


@dataclass(frozen=True)
class CommutationReport:
    pairs_checked: int
    all_commute: bool
    per_context: dict


def verify_contexts(sq: MerminSquare) -> CommutationReport:
    per_context = {}
    checked = 0
    for name, cells in sq.contexts():
        ok = True
        for p, q in itertools.combinations(cells, 2):
            checked += 1
            if not commutator(sq.entry(*p), sq.entry(*q)).is_zero():
                ok = False
        per_context[name] = ok
    report = CommutationReport(checked, all(per_context.values()), per_context)
    if not report.all_commute:
        bad = [k for k, v in per_context.items() if not v]
        raise StructuralError(f"non-commuting entries in contexts {bad}")
    return report


@dataclass(frozen=True)
class ParityReport:
    row_scalars: tuple[int, int, int]
    column_scalars: tuple[int, int, int]
    row_total: int
    column_total: int

    @property
    def context_scalars(self) -> dict:
        out = {f"row{i}": s for i, s in enumerate(self.row_scalars)}
        out.update({f"col{i}": s for i, s in enumerate(self.column_scalars)})
        return out


def _context_scalar(ops) -> int:
    prod = I4
    for op in ops:
        prod = prod @ op
    scalar = prod.scalar_of_identity()
    if scalar is None or scalar[1] != 0 or abs(scalar[0]) != 1:
        raise StructuralError(f"context product is not +/- identity: {scalar}")
    return scalar[0]


def product_parity(sq: MerminSquare) -> ParityReport:
    """Products of each row and column in display order, and the nine-fold totals."""
    rows = tuple(_context_scalar(sq.ops[r]) for r in range(3))
    cols = tuple(_context_scalar([sq.ops[r][c] for r in range(3)]) for c in range(3))
    row_total = _context_scalar([sq.ops[r][c] for r in range(3) for c in range(3)])
    col_total = _context_scalar([sq.ops[r][c] for c in range(3) for r in range(3)])
    if row_total != rows[0] * rows[1] * rows[2] or col_total != cols[0] * cols[1] * cols[2]:
        raise StructuralError("nine-fold products disagree with the per-context scalars")
    return ParityReport(rows, cols, row_total, col_total)


@dataclass(frozen=True)
class Certificate:
    assignments_checked: int
    consistent_count: int
    context_scalars: dict
    scalar_product: int
    value_product: int
    mode: str = "factor"

    @property
    def contradiction(self) -> bool:
        return self.consistent_count == 0 and self.scalar_product != self.value_product

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "assignments_checked": self.assignments_checked,
            "consistent_count": self.consistent_count,
            "context_scalars": dict(self.context_scalars),
            "product_of_context_scalars": self.scalar_product,
            "product_of_context_value_products": self.value_product,
            "contradiction": self.contradiction,
        }


def entry_values(assignment: dict) -> list[list[int]]:
    """Value of every square entry: the product of its factors' assigned +/-1."""
    return [[int(np.prod([assignment[n] for n in f])) for f in row] for row in SQUARE_FACTORS]


def _context_value_products(values) -> dict:
    out = {f"row{r}": values[r][0] * values[r][1] * values[r][2] for r in range(3)}
    out.update({f"col{c}": values[0][c] * values[1][c] * values[2][c] for c in range(3)})
    return out


def exhaustive_assignment_search(parity: ParityReport | None = None, flip: tuple[str, ...] = (),
                                 mode: str = "factor") -> Certificate:
    """Count value assignments that reproduce every context's operator-product sign.

    ``mode="factor"`` enumerates the 64 assignments to the six single-particle
    observables; ``mode="entry"`` enumerates all 512 assignments of nine
    independent entry values. ``flip`` negates the named context constraints,
    which is only useful as a sanity check that the search can succeed.
    """
    if parity is None:
        parity = product_parity(build_square())
    scalars = dict(parity.context_scalars)
    for name in flip:
        scalars[name] = -scalars[name]

    if mode == "factor":
        candidates = (
            entry_values(dict(zip(OBSERVABLES, signs)))
            for signs in itertools.product((1, -1), repeat=len(OBSERVABLES))
        )
    elif mode == "entry":
        candidates = (
            [list(signs[3 * r:3 * r + 3]) for r in range(3)]
            for signs in itertools.product((1, -1), repeat=9)
        )
    else:
        raise ValueError(f"unknown search mode {mode!r}")

    count = checked = 0
    value_products = set()
    for values in candidates:
        checked += 1
        products = _context_value_products(values)
        if all(products[k] == scalars[k] for k in scalars):
            count += 1
        value_products.add(int(np.prod(list(products.values()))))

    # Each entry sits in exactly one row and one column, so this is a product
    # of squares for every assignment.
    if value_products != {1}:
        raise StructuralError(f"context value-products multiply to {value_products}, expected {{1}}")
    scalar_product = int(np.prod(list(scalars.values())))
    return Certificate(checked, count, scalars, scalar_product, value_product=1, mode=mode)
