"""Dense matrices and column-span algebra over a FieldCtx.

An FqMatrix stores its entries as an integer array of shape (rows, cols, n).
Zero-column and zero-row matrices are ordinary values: rank 0, identity for
concatenation. Plain 2-D integer arrays over F_p go through the ``fp_*``
helpers, which wrap them as matrices over the prime field.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import CtxMismatch, NotSquare, RowMismatch, Singular
from .galois import FieldCtx, FqElem, make_field


@dataclass(frozen=True, eq=False)
class FqMatrix:
    field: FieldCtx
    data: np.ndarray

    def __post_init__(self):
        d = self.data
        if d.ndim != 3 or d.shape[2] != self.field.n:
            raise ValueError(f"matrix data must have shape (rows, cols, {self.field.n}), got {d.shape}")

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[:2]

    # constructors -----------------------------------------------------------

    @staticmethod
    def zeros(F: FieldCtx, rows: int, cols: int) -> "FqMatrix":
        return FqMatrix(F, np.zeros((rows, cols, F.n), dtype=F.dtype))

    @staticmethod
    def identity(F: FieldCtx, size: int) -> "FqMatrix":
        M = FqMatrix.zeros(F, size, size)
        M.data[np.arange(size), np.arange(size), 0] = 1
        return M

    @staticmethod
    def from_ints(F: FieldCtx, values) -> "FqMatrix":
        """Entries given as F_p integers (constants) or as coefficient arrays."""
        arr = np.asarray(values)
        if arr.ndim == 2:
            out = np.zeros(arr.shape + (F.n,), dtype=F.dtype)
            out[..., 0] = arr % F.p
            return FqMatrix(F, out)
        return FqMatrix(F, F.asarray(arr))

    @staticmethod
    def random(F: FieldCtx, rows: int, cols: int, rng: np.random.Generator) -> "FqMatrix":
        return FqMatrix(F, F.random(rng, (rows, cols)))

    # structure --------------------------------------------------------------

    def entry(self, i: int, j: int) -> FqElem:
        return FqElem.of(self.field, self.data[i, j])

    def columns(self, idx: Iterable[int]) -> "FqMatrix":
        idx = np.asarray(list(idx), dtype=np.int64)
        return FqMatrix(self.field, self.data[:, idx])

    def row_slice(self, idx) -> "FqMatrix":
        return FqMatrix(self.field, self.data[idx])

    @property
    def T(self) -> "FqMatrix":
        return FqMatrix(self.field, self.data.transpose(1, 0, 2).copy())

    def __matmul__(self, other: "FqMatrix") -> "FqMatrix":
        return matmul(self, other)

    def __add__(self, other: "FqMatrix") -> "FqMatrix":
        _same_field(self, other)
        return FqMatrix(self.field, self.field.add(self.data, other.data))

    def __sub__(self, other: "FqMatrix") -> "FqMatrix":
        _same_field(self, other)
        return FqMatrix(self.field, self.field.sub(self.data, other.data))

    def scale(self, c) -> "FqMatrix":
        c = c.vec if isinstance(c, FqElem) else np.asarray(c)
        return FqMatrix(self.field, self.field.mul(self.data, c))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FqMatrix)
            and other.field == self.field
            and other.data.shape == self.data.shape
            and bool(np.array_equal(other.data, self.data))
        )

    def is_zero(self) -> bool:
        return not np.any(self.data)

    def __repr__(self) -> str:
        return f"FqMatrix({self.rows}x{self.cols} over {self.field!r})"

    # serialization ----------------------------------------------------------

    def to_json(self) -> dict:
        return {"rows": self.rows, "cols": self.cols, "data": self.data.astype(object).tolist()}

    @staticmethod
    def from_json(obj: dict, F: FieldCtx) -> "FqMatrix":
        rows, cols = int(obj["rows"]), int(obj["cols"])
        data = np.array(obj["data"], dtype=object).reshape(rows, cols, F.n)
        return FqMatrix(F, F.asarray(data.astype(F.dtype) if F.dtype is not object else data))


def _same_field(*mats: FqMatrix) -> None:
    F = mats[0].field
    for M in mats[1:]:
        if M.field != F:
            raise CtxMismatch("matrices over different fields")


def hstack(mats: Sequence[FqMatrix], F: FieldCtx | None = None, rows: int | None = None) -> FqMatrix:
    """Column concatenation. Empty input needs F and rows."""
    mats = list(mats)
    if not mats:
        return FqMatrix.zeros(F, rows or 0, 0)
    _same_field(*mats)
    r = mats[0].rows
    for M in mats:
        if M.rows != r:
            raise RowMismatch(f"row counts differ: {r} vs {M.rows}")
    return FqMatrix(mats[0].field, np.concatenate([M.data for M in mats], axis=1))


def vstack(mats: Sequence[FqMatrix]) -> FqMatrix:
    _same_field(*mats)
    return FqMatrix(mats[0].field, np.concatenate([M.data for M in mats], axis=0))


def matmul(A: FqMatrix, B: FqMatrix) -> FqMatrix:
    _same_field(A, B)
    if A.cols != B.rows:
        raise RowMismatch(f"cannot multiply {A.shape} by {B.shape}")
    F = A.field
    if F.n == 1:
        return FqMatrix(F, fp_matmul(A.data[..., 0], B.data[..., 0], F.p)[..., None])
    out = F.zeros((A.rows, B.cols))
    for k in range(A.cols):
        out = F.add(out, F.mul(A.data[:, k, None, :], B.data[None, k, :, :]))
    return FqMatrix(F, out)


# ---------------------------------------------------------------------------
# Gaussian elimination


def _eliminate(F: FieldCtx, R: np.ndarray, pivot_limit: int, reduced: bool) -> list[int]:
    """In-place row reduction of R (rows, cols, n). Pivots are searched in
    columns < pivot_limit, first nonzero entry wins. Returns pivot columns."""
    rows = R.shape[0]
    pivots: list[int] = []
    r = 0
    for c in range(pivot_limit):
        if r == rows:
            break
        nz = np.flatnonzero(np.any(R[r:, c] != 0, axis=-1))
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            R[[r, piv]] = R[[piv, r]]
        R[r, c:] = F.mul(R[r, c:], F.inv(R[r, c]))
        lo = 0 if reduced else r + 1
        targets = lo + np.flatnonzero(np.any(R[lo:, c] != 0, axis=-1))
        targets = targets[targets != r]
        if targets.size:
            R[targets, c:] = F.sub(R[targets, c:], F.mul(R[targets, c, None, :], R[r, None, c:]))
        pivots.append(c)
        r += 1
    return pivots


def rref(M: FqMatrix, pivot_limit: int | None = None) -> tuple[FqMatrix, list[int]]:
    R = M.data.copy()
    pivots = _eliminate(M.field, R, M.cols if pivot_limit is None else pivot_limit, reduced=True)
    return FqMatrix(M.field, R), pivots


def rank(M: FqMatrix) -> int:
    if M.rows == 0 or M.cols == 0:
        return 0
    # eliminate along the shorter side
    R = (M.data if M.rows <= M.cols else M.data.transpose(1, 0, 2)).copy()
    return len(_eliminate(M.field, R, R.shape[1], reduced=False))


def det(M: FqMatrix) -> FqElem:
    if M.rows != M.cols:
        raise NotSquare(f"matrix is {M.rows}x{M.cols}")
    F = M.field
    R = M.data.copy()
    n = M.rows
    acc = F.one()
    for c in range(n):
        nz = np.flatnonzero(np.any(R[c:, c] != 0, axis=-1))
        if nz.size == 0:
            return FqElem.of(F, F.zeros())
        piv = c + int(nz[0])
        if piv != c:
            R[[c, piv]] = R[[piv, c]]
            acc = F.neg(acc)
        acc = F.mul(acc, R[c, c])
        inv = F.inv(R[c, c])
        below = c + 1 + np.flatnonzero(np.any(R[c + 1 :, c] != 0, axis=-1))
        if below.size:
            factor = F.mul(R[below, c], inv)
            R[below, c:] = F.sub(R[below, c:], F.mul(factor[:, None, :], R[c, None, c:]))
    return FqElem.of(F, acc)


def inverse(M: FqMatrix) -> FqMatrix:
    if M.rows != M.cols:
        raise NotSquare(f"matrix is {M.rows}x{M.cols}")
    n = M.rows
    aug = hstack([M, FqMatrix.identity(M.field, n)])
    R, pivots = rref(aug, pivot_limit=n)
    if len(pivots) < n:
        raise Singular("matrix is singular")
    return FqMatrix(M.field, R.data[:, n:])


def det_adjugate(M: FqMatrix) -> tuple[FqElem, FqMatrix]:
    """(det M, adj M) with M adj(M) = det(M) I checked before returning."""
    if M.rows != M.cols:
        raise NotSquare(f"matrix is {M.rows}x{M.cols}")
    F, n = M.field, M.rows
    dM = det(M)
    if not dM.is_zero():
        adj = inverse(M).scale(dM)
    elif n == 0:
        adj = FqMatrix.zeros(F, 0, 0)
    else:
        adj = FqMatrix.zeros(F, n, n)
        if rank(M) == n - 1:
            idx = np.arange(n)
            for i in range(n):
                for j in range(n):
                    minor = FqMatrix(F, M.data[np.ix_(idx != i, idx != j)])
                    c = det(minor).vec
                    adj.data[j, i] = c if (i + j) % 2 == 0 else F.neg(c)
    check = matmul(M, adj)
    expect = FqMatrix.identity(F, n).scale(dM)
    if check != expect:
        raise AssertionError("adjugate identity failed")
    return dM, adj


def solve(A: FqMatrix, B: FqMatrix) -> FqMatrix | None:
    """Some X with A X = B (free variables set to zero), or None."""
    if A.rows != B.rows:
        raise RowMismatch(f"row counts differ: {A.rows} vs {B.rows}")
    aug = hstack([A, B])
    R, pivots = rref(aug, pivot_limit=A.cols)
    k = len(pivots)
    if np.any(R.data[k:, A.cols :]):
        return None
    X = FqMatrix.zeros(A.field, A.cols, B.cols)
    for i, c in enumerate(pivots):
        X.data[c] = R.data[i, A.cols :]
    return X


def in_span(A: FqMatrix, B: FqMatrix) -> bool:
    """Whether every column of B lies in the column span of A."""
    return solve(A, B) is not None


def nullspace(M: FqMatrix) -> FqMatrix:
    """Columns form a basis of {y : M y = 0}."""
    F = M.field
    R, pivots = rref(M)
    free = [c for c in range(M.cols) if c not in set(pivots)]
    N = FqMatrix.zeros(F, M.cols, len(free))
    for k, f in enumerate(free):
        N.data[f, k] = F.one()
        for i, c in enumerate(pivots):
            N.data[c, k] = F.neg(R.data[i, f])
    return N


def conditional_indices(M1: FqMatrix, M2: FqMatrix) -> list[int]:
    """Columns of M1 picked greedily (lowest index first) to extend span(M2)."""
    if M1.rows != M2.rows:
        raise RowMismatch(f"row counts differ: {M1.rows} vs {M2.rows}")
    _, pivots = rref(hstack([M2, M1]))
    return [c - M2.cols for c in pivots if c >= M2.cols]


def conditional(M1: FqMatrix, M2: FqMatrix) -> FqMatrix:
    """The conditional matrix (M1|M2)."""
    return M1.columns(conditional_indices(M1, M2))


def column_basis(M: FqMatrix) -> FqMatrix:
    return conditional(M, FqMatrix.zeros(M.field, M.rows, 0))


def complete_to_basis(M: FqMatrix) -> FqMatrix:
    """(I | M): identity columns extending span(M) to the whole space."""
    return conditional(FqMatrix.identity(M.field, M.rows), M)


def solve_or_complete(M: FqMatrix, mode: str) -> FqMatrix:
    if mode == "nullspace":
        return nullspace(M)
    if mode == "complete_to_basis":
        return complete_to_basis(M)
    raise ValueError(f"unknown mode {mode!r}")


def intersect(M1: FqMatrix, M2: FqMatrix) -> FqMatrix:
    """Basis of span(M1) and span(M2) intersected, as columns in reduced echelon form.

    Zassenhaus: reduce [[M1^T, M1^T], [M2^T, 0]]; rows whose left half
    vanishes carry the intersection in their right half.
    """
    if M1.rows != M2.rows:
        raise RowMismatch(f"row counts differ: {M1.rows} vs {M2.rows}")
    _same_field(M1, M2)
    F, r = M1.field, M1.rows
    top = np.concatenate([M1.data.transpose(1, 0, 2)] * 2, axis=1)
    bottom = np.concatenate([M2.data.transpose(1, 0, 2), np.zeros((M2.cols, r, F.n), dtype=F.dtype)], axis=1)
    block = FqMatrix(F, np.concatenate([top, bottom], axis=0))
    R, pivots = rref(block)
    rows = [i for i, c in enumerate(pivots) if c >= r]
    return FqMatrix(F, R.data[rows, r:].transpose(1, 0, 2).copy())


def intersect_many(mats: Sequence[FqMatrix]) -> FqMatrix:
    out = mats[0]
    for M in mats[1:]:
        out = intersect(out, M)
    return out


# ---------------------------------------------------------------------------
# F_p helpers on 2-D integer arrays


def fp_matmul(A: np.ndarray, B: np.ndarray, p: int) -> np.ndarray:
    """A @ B mod p, chunking the inner dimension so int64 sums cannot overflow."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.dtype == object or B.dtype == object:
        return (A.astype(object) @ B.astype(object)) % p
    chunk = max(1, (2**63 - 1) // max(1, (p - 1) ** 2))
    inner = A.shape[-1]
    if inner <= chunk:
        return (A.astype(np.int64) @ B.astype(np.int64)) % p
    out = np.zeros(A.shape[:-1] + B.shape[-1:], dtype=np.int64)
    for s in range(0, inner, chunk):
        out = (out + (A[..., s : s + chunk].astype(np.int64) @ B[s : s + chunk].astype(np.int64)) % p) % p
    return out


def _wrap(A: np.ndarray, p: int) -> FqMatrix:
    F = make_field(p, 1)
    return FqMatrix(F, (np.asarray(A, dtype=F.dtype) % p)[..., None])


def fp_rank(A: np.ndarray, p: int) -> int:
    return rank(_wrap(A, p))


def fp_rref(A: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    R, piv = rref(_wrap(A, p))
    return R.data[..., 0], piv


def fp_inverse(A: np.ndarray, p: int) -> np.ndarray:
    return inverse(_wrap(A, p)).data[..., 0]


def fp_solve(A: np.ndarray, B: np.ndarray, p: int) -> np.ndarray | None:
    X = solve(_wrap(A, p), _wrap(B, p))
    return None if X is None else X.data[..., 0]


def fp_complete_to_basis(A: np.ndarray, p: int) -> np.ndarray:
    return complete_to_basis(_wrap(A, p)).data[..., 0]


def fp_block(M: FqMatrix) -> np.ndarray:
    """F_p form of M: block (i, j) is the transpose of the multiplication matrix
    of M_ij, so that rowvec(x) @ fp_block(M) = rowvec(x^T M)."""
    F = M.field
    reps = F.mat_repr(M.data).transpose(0, 1, 3, 2)  # (r, c, n, n), block = M(a)^T
    return reps.transpose(0, 2, 1, 3).reshape(M.rows * F.n, M.cols * F.n)


def to_fp_rows(x: np.ndarray) -> np.ndarray:
    """Flatten field vectors (..., k, n) into F_p rows (..., k*n)."""
    x = np.asarray(x)
    return x.reshape(x.shape[:-2] + (x.shape[-2] * x.shape[-1],))
