"""LCBC problem instances: K users, data x in F_q^d, user k knows x^T v'_k
and wants x^T v_k.

Sampling uses numpy's PCG64 generator seeded with the integer seed. For each
user k in order, the d x m'_k side-information matrix is drawn first, then the
d x m_k demand matrix, each as one ``integers(0, p, size=(d, cols, n))`` call.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BadDims, DimMismatch, FormatError
from .galois import FieldCtx, embed_array, make_field
from .sublinalg import FqMatrix, hstack


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    """PCG64 stream for (seed, *stream). Distinct streams never share state."""
    key = [int(seed)] + [int(s) for s in stream]
    return np.random.Generator(np.random.PCG64(key if stream else int(seed)))


@dataclass(frozen=True, eq=False)
class LcbcInstance:
    field: FieldCtx
    K: int
    d: int
    m: tuple[int, ...]
    mprime: tuple[int, ...]
    v: tuple[FqMatrix, ...]
    vprime: tuple[FqMatrix, ...]

    def __post_init__(self):
        if len(self.m) != self.K or len(self.mprime) != self.K:
            raise BadDims("width lists must have K entries")
        if len(self.v) != self.K or len(self.vprime) != self.K:
            raise BadDims("need K demand and K side-information matrices")
        for k in range(self.K):
            for M, w in ((self.v[k], self.m[k]), (self.vprime[k], self.mprime[k])):
                if M.shape != (self.d, w):
                    raise BadDims(f"user {k}: matrix shape {M.shape} != ({self.d}, {w})")
                if M.field != self.field:
                    raise BadDims(f"user {k}: matrix over a different field")

    def u(self, k: int) -> FqMatrix:
        return hstack([self.vprime[k], self.v[k]])

    @property
    def symmetric(self) -> bool:
        return len(set(self.m)) <= 1 and len(set(self.mprime)) <= 1

    def __eq__(self, other) -> bool:
        return isinstance(other, LcbcInstance) and self.to_json() == other.to_json()

    def to_json(self) -> dict:
        return {
            "field": self.field.to_dict(),
            "K": self.K,
            "d": self.d,
            "m": list(self.m),
            "mprime": list(self.mprime),
            "v": [M.to_json() for M in self.v],
            "vprime": [M.to_json() for M in self.vprime],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"), sort_keys=True)

    @staticmethod
    def from_json(obj: dict) -> "LcbcInstance":
        try:
            F = FieldCtx.from_dict(obj["field"])
            return LcbcInstance(
                F,
                int(obj["K"]),
                int(obj["d"]),
                tuple(int(x) for x in obj["m"]),
                tuple(int(x) for x in obj["mprime"]),
                tuple(FqMatrix.from_json(M, F) for M in obj["v"]),
                tuple(FqMatrix.from_json(M, F) for M in obj["vprime"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed instance: {exc}") from exc

    @staticmethod
    def loads(text: str) -> "LcbcInstance":
        return LcbcInstance.from_json(json.loads(text))


def _widths(w, K: int) -> tuple[int, ...]:
    if isinstance(w, (int, np.integer)):
        return (int(w),) * K
    w = tuple(int(x) for x in w)
    if len(w) != K:
        raise BadDims(f"expected {K} widths, got {len(w)}")
    return w


def sample_instance(
    field: FieldCtx,
    K: int,
    d: int,
    m: int | Sequence[int],
    mprime: int | Sequence[int],
    seed: int,
) -> LcbcInstance:
    if K < 0 or d < 1:
        raise BadDims(f"need K >= 0 and d >= 1, got K={K}, d={d}")
    m, mprime = _widths(m, K), _widths(mprime, K)
    if any(x < 0 for x in m + mprime):
        raise BadDims("widths must be nonnegative")
    rng = rng_for(seed)
    v, vp = [], []
    for k in range(K):
        vp.append(FqMatrix.random(field, d, mprime[k], rng))
        v.append(FqMatrix.random(field, d, m[k], rng))
    return LcbcInstance(field, K, d, m, mprime, tuple(v), tuple(vp))


def embed_instance(inst: LcbcInstance, big: FieldCtx) -> LcbcInstance:
    """The same instance with every coefficient mapped into a larger field."""
    if big == inst.field:
        return inst

    def lift(M: FqMatrix) -> FqMatrix:
        return FqMatrix(big, embed_array(M.data, inst.field, big))

    return LcbcInstance(
        big, inst.K, inst.d, inst.m, inst.mprime,
        tuple(lift(M) for M in inst.v), tuple(lift(M) for M in inst.vprime),
    )


@dataclass(frozen=True, eq=False)
class DataBatch:
    x: FqMatrix  # d x L

    def __post_init__(self):
        if self.x.cols < 1:
            raise BadDims("batch size L must be >= 1")


@dataclass(frozen=True, eq=False)
class DemandView:
    w: tuple[FqMatrix, ...]
    wprime: tuple[FqMatrix, ...]
    u: tuple[FqMatrix, ...] = field(default=())


def evaluate_demands(inst: LcbcInstance, x: DataBatch) -> DemandView:
    X = x.x
    if X.rows != inst.d or X.field != inst.field:
        raise DimMismatch(f"data must be {inst.d} x L over {inst.field!r}")
    Xt = X.T
    w = tuple(Xt @ inst.v[k] for k in range(inst.K))
    wp = tuple(Xt @ inst.vprime[k] for k in range(inst.K))
    return DemandView(w, wp, tuple(inst.u(k) for k in range(inst.K)))


def demands_batch(inst: LcbcInstance, xs: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Vectorised evaluation for many data vectors at once.

    xs has shape (T, d, n). Returns per-user arrays of shape (T, m_k, n) for
    the demands and (T, m'_k, n) for the side information.
    """
    F = inst.field

    def apply(M: FqMatrix) -> np.ndarray:
        out = F.zeros((xs.shape[0], M.cols))
        for i in range(inst.d):
            out = F.add(out, F.mul(xs[:, i, None, :], M.data[None, i]))
        return out

    return [apply(M) for M in inst.v], [apply(M) for M in inst.vprime]


# ---------------------------------------------------------------------------
# The four-user example over F_7 with data (A, B, C, D). Rows are users,
# entries are the coefficients of A, B, C, D.

TOY_SIDE = ((1, 1, 1, 1), (1, 3, 2, 5), (5, 4, 1, 3), (4, 1, 5, 6))
TOY_DEMAND = ((1, 2, 3, 4), (2, 1, 4, 6), (6, 3, 4, 1), (5, 2, 6, 3))
TOY_BROADCAST = ((2, 6, 3, 0), (4, 4, 1, 1))


def toy_base_instance(users: int = 3) -> LcbcInstance:
    """The F_7 example restricted to its first ``users`` users."""
    F = make_field(7, 1)
    col = lambda c: FqMatrix.from_ints(F, np.array(c).reshape(4, 1))
    return LcbcInstance(
        F, users, 4, (1,) * users, (1,) * users,
        tuple(col(TOY_DEMAND[k]) for k in range(users)),
        tuple(col(TOY_SIDE[k]) for k in range(users)),
    )


def toy_instance_f7():
    """The three-user F_7 instance together with its two-symbol scheme."""
    from .schemes import toy_scheme

    return toy_base_instance(3), toy_scheme()
