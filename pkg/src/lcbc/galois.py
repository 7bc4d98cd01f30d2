"""Arithmetic in F_p and F_{p^n}.

Elements are little-endian coefficient vectors over F_p in the power basis
{1, x, ..., x^(n-1)}. Every array routine is vectorised: an integer array of
shape (..., n) holds a batch of field elements. FqElem wraps a single element
for readable scalar code.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    CtxMismatch,
    DegreeZero,
    DivideByZero,
    FieldTooLarge,
    NoEmbedding,
    NonPrime,
)

MAX_P = 2**31
# Fixed seed for the random splitting step of root finding. The chosen root is
# the one with the smallest integer code, so the seed only affects run time.
EMBED_SEED = 0x1CBC


def is_prime(p: int) -> bool:
    """Deterministic Miller-Rabin, exact for p < 3.3e24."""
    if p < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
    for q in small:
        if p % q == 0:
            return p == q
    d, s = p - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in small:
        x = pow(a, d, p)
        if x in (1, p - 1):
            continue
        for _ in range(s - 1):
            x = x * x % p
            if x == p - 1:
                break
        else:
            return False
    return True


# ---------------------------------------------------------------------------
# Polynomials over F_p as little-endian int lists (used for modulus search).


def _trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _pmod(a: list[int], f: Sequence[int], p: int) -> list[int]:
    a = _trim([c % p for c in a])
    df = len(f) - 1
    inv = pow(f[-1], p - 2, p)
    while len(a) - 1 >= df and a:
        c = a[-1] * inv % p
        shift = len(a) - 1 - df
        for i, fc in enumerate(f):
            a[shift + i] = (a[shift + i] - c * fc) % p
        _trim(a)
    return a


def _pmul(a: list[int], b: list[int], p: int) -> list[int]:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return _trim(out)


def _ppowmod(base: list[int], e: int, f: Sequence[int], p: int) -> list[int]:
    result = [1]
    base = _pmod(base, f, p)
    while e:
        if e & 1:
            result = _pmod(_pmul(result, base, p), f, p)
        base = _pmod(_pmul(base, base, p), f, p)
        e >>= 1
    return result


def _pgcd(a: list[int], b: list[int], p: int) -> list[int]:
    a, b = _trim(list(a)), _trim(list(b))
    while b:
        a, b = b, _pmod(a, b, p)
    return a


def _psub(a: list[int], b: list[int], p: int) -> list[int]:
    k = max(len(a), len(b))
    a = list(a) + [0] * (k - len(a))
    b = list(b) + [0] * (k - len(b))
    return _trim([(x - y) % p for x, y in zip(a, b)])


def is_irreducible(f: Sequence[int], p: int) -> bool:
    """Ben-Or's test: gcd(x^(p^i) - x, f) = 1 for every i <= n/2.

    A reducible f has a factor of degree at most n/2, which the loop finds at
    its degree, so most candidates are rejected after a few squarings.
    """
    f = _trim([c % p for c in f])
    n = len(f) - 1
    if n < 1:
        return False
    if n == 1:
        return True
    if f[0] == 0:
        return False
    xp = [0, 1]
    for _ in range(n // 2):
        xp = _ppowmod(xp, p, f, p)
        if len(_pgcd(f, _psub(xp, [0, 1], p), p)) > 1:
            return False
    return True


def is_irreducible_bruteforce(f: Sequence[int], p: int) -> bool:
    """Trial division by every monic polynomial of degree 1..n//2."""
    f = list(f)
    n = len(f) - 1
    for deg in range(1, n // 2 + 1):
        for code in range(p**deg):
            g = [(code // p**i) % p for i in range(deg)] + [1]
            if not _pmod(f, g, p):
                return False
    return n >= 1


def smallest_irreducible(p: int, n: int) -> tuple[int, ...]:
    """Monic irreducible of degree n with the smallest base-p code."""
    for c in range(p**n):
        f = [(c // p**i) % p for i in range(n)] + [1]
        if is_irreducible(f, p):
            return tuple(f)
    raise AssertionError("no irreducible polynomial found")


def _shape(shape) -> tuple[int, ...]:
    return (int(shape),) if isinstance(shape, (int, np.integer)) else tuple(shape)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FieldCtx:
    """The field F_p[x]/(modulus). Immutable and shareable across threads."""

    p: int
    n: int
    modulus: tuple[int, ...]

    @property
    def q(self) -> int:
        return self.p**self.n

    @functools.cached_property
    def dtype(self):
        # a convolution sums n products of size < p^2 before reduction
        return np.int64 if 2 * self.n * (self.p - 1) ** 2 < 2**62 else object

    @functools.cached_property
    def _xpow(self) -> np.ndarray:
        """Row k is vec(x^k mod f) for k < 2n-1."""
        n, p = self.n, self.p
        rows = np.zeros((2 * n - 1, n), dtype=self.dtype)
        cur = [1]
        for k in range(2 * n - 1):
            cur = _pmod(cur, self.modulus, p)
            rows[k, : len(cur)] = cur
            cur = [0] + cur
        return rows

    @functools.cached_property
    def _mul_table(self) -> np.ndarray:
        n = self.n
        idx = np.add.outer(np.arange(n), np.arange(n)).reshape(-1)
        return self._xpow[idx]

    @functools.cached_property
    def _repr_table(self) -> np.ndarray:
        return self._mul_table.reshape(self.n, self.n, self.n)

    # construction helpers -------------------------------------------------

    def asarray(self, a) -> np.ndarray:
        arr = np.asarray(a)
        if arr.dtype != self.dtype:
            arr = arr.astype(self.dtype)
        return arr % self.p

    def zeros(self, shape=()) -> np.ndarray:
        return np.zeros(_shape(shape) + (self.n,), dtype=self.dtype)

    def one(self) -> np.ndarray:
        e = np.zeros(self.n, dtype=self.dtype)
        e[0] = 1
        return e

    def scalar(self, c: int) -> np.ndarray:
        e = np.zeros(self.n, dtype=self.dtype)
        e[0] = c % self.p
        return e

    def gen(self) -> np.ndarray:
        """The class of x (equal to 0 in the prime field, whose modulus is x)."""
        return self._xpow[1].copy() if self.n > 1 else self.zeros()

    def random(self, rng: np.random.Generator, shape=()) -> np.ndarray:
        return rng.integers(0, self.p, size=_shape(shape) + (self.n,)).astype(self.dtype)

    def from_int(self, code) -> np.ndarray:
        """Base-p digits of code, constant term least significant."""
        code = np.asarray(code, dtype=object if self.q >= 2**62 else np.int64)
        digits = [(code // self.p**i) % self.p for i in range(self.n)]
        return np.stack(digits, axis=-1).astype(self.dtype)

    def to_int(self, a) -> np.ndarray:
        a = np.asarray(a)
        weights = np.array([self.p**i for i in range(self.n)], dtype=object if self.q >= 2**62 else np.int64)
        return (a * weights).sum(axis=-1)

    def elements(self) -> np.ndarray:
        return self.from_int(np.arange(self.q))

    # arithmetic -------------------------------------------------------------

    def add(self, a, b) -> np.ndarray:
        return (np.asarray(a) + np.asarray(b)) % self.p

    def sub(self, a, b) -> np.ndarray:
        return (np.asarray(a) - np.asarray(b)) % self.p

    def neg(self, a) -> np.ndarray:
        return (-np.asarray(a)) % self.p

    def scale(self, a, c: int) -> np.ndarray:
        return (np.asarray(a) * (c % self.p)) % self.p

    def mul(self, a, b) -> np.ndarray:
        a = np.asarray(a, dtype=self.dtype)
        b = np.asarray(b, dtype=self.dtype)
        if self.n == 1:
            return (a * b) % self.p
        a, b = np.broadcast_arrays(a, b)
        n = self.n
        conv = np.zeros(a.shape[:-1] + (2 * n - 1,), dtype=self.dtype)
        for i in range(n):
            conv[..., i : i + n] += a[..., i : i + 1] * b
        conv %= self.p
        return (conv @ self._xpow) % self.p

    def mul_by(self, a, z) -> np.ndarray:
        """Multiply a batch by one fixed element z, via its matrix representation."""
        a = np.asarray(a, dtype=self.dtype)
        return (a @ self.mat_repr(z).T) % self.p

    def is_zero(self, a) -> np.ndarray:
        return ~np.any(np.asarray(a) != 0, axis=-1)

    def pow(self, a, e: int) -> np.ndarray:
        a = np.asarray(a, dtype=self.dtype)
        result = np.broadcast_to(self.one(), a.shape).copy()
        base = a.copy()
        while e:
            if e & 1:
                result = self.mul(result, base)
            e >>= 1
            if e:
                base = self.mul(base, base)
        return result

    def inv(self, a) -> np.ndarray:
        if np.any(self.is_zero(a)):
            raise DivideByZero("inverse of zero")
        return self.pow(a, self.q - 2)

    def div(self, a, b) -> np.ndarray:
        return self.mul(a, self.inv(b))

    def mat_repr(self, a) -> np.ndarray:
        """Multiplication-by-a matrices, column j = vec(a x^j). Shape (..., n, n)."""
        a = np.asarray(a, dtype=self.dtype)
        if self.n == 1:
            return a[..., None] % self.p
        out = np.einsum("...i,ijk->...kj", a, self._repr_table)
        return out % self.p

    def to_dict(self) -> dict:
        return {"p": self.p, "n": self.n, "modulus": list(self.modulus)}

    @staticmethod
    def from_dict(obj: dict) -> "FieldCtx":
        F = make_field(int(obj["p"]), int(obj["n"]))
        if "modulus" in obj and tuple(obj["modulus"]) != F.modulus:
            raise CtxMismatch("modulus in file differs from the canonical modulus")
        return F

    def __repr__(self) -> str:
        return f"FieldCtx(p={self.p}, n={self.n})"


@functools.lru_cache(maxsize=None)
def make_field(p: int, n: int) -> FieldCtx:
    p, n = int(p), int(n)
    if n < 1:
        raise DegreeZero(f"extension degree must be >= 1, got {n}")
    if not is_prime(p):
        raise NonPrime(f"{p} is not prime")
    if p >= MAX_P:
        raise FieldTooLarge(f"p must be < 2^31, got {p}")
    return FieldCtx(p, n, smallest_irreducible(p, n))


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FqElem:
    coeffs: tuple[int, ...]
    ctx: FieldCtx

    @staticmethod
    def of(ctx: FieldCtx, value) -> "FqElem":
        if isinstance(value, (int, np.integer)):
            arr = ctx.scalar(int(value))
        else:
            arr = ctx.asarray(value)
            if arr.shape != (ctx.n,):
                raise CtxMismatch(f"expected {ctx.n} coefficients, got shape {arr.shape}")
        return FqElem(tuple(int(c) for c in arr), ctx)

    @property
    def vec(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=self.ctx.dtype)

    def _check(self, other: "FqElem") -> None:
        if not isinstance(other, FqElem) or other.ctx != self.ctx:
            raise CtxMismatch("operands live in different fields")

    def __add__(self, other):
        return fq_arith(self, other, "add")

    def __sub__(self, other):
        return fq_arith(self, other, "sub")

    def __mul__(self, other):
        return fq_arith(self, other, "mul")

    def __truediv__(self, other):
        return fq_arith(self, other, "div")

    def __neg__(self):
        return FqElem.of(self.ctx, self.ctx.neg(self.vec))

    def inverse(self) -> "FqElem":
        return fq_arith(self, None, "inv")

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def to_json(self) -> list[int]:
        return list(self.coeffs)

    def __repr__(self) -> str:
        return f"FqElem({list(self.coeffs)}, p={self.ctx.p}, n={self.ctx.n})"


def fq_arith(a: FqElem, b: FqElem | None, op: str) -> FqElem:
    F = a.ctx
    if op == "inv":
        return FqElem.of(F, F.inv(a.vec))
    a._check(b)
    if op == "add":
        out = F.add(a.vec, b.vec)
    elif op == "sub":
        out = F.sub(a.vec, b.vec)
    elif op == "mul":
        out = F.mul(a.vec, b.vec)
    elif op == "div":
        out = F.div(a.vec, b.vec)
    else:
        raise ValueError(f"unknown op {op!r}")
    return FqElem.of(F, out)


def to_matrix_repr(a: FqElem) -> np.ndarray:
    return a.ctx.mat_repr(a.vec)


def vector_repr(a: FqElem) -> np.ndarray:
    return a.vec


# ---------------------------------------------------------------------------
# Embeddings F_{p^n} -> F_{p^N}, n | N.
# Polynomials over the big field are arrays of shape (deg+1, N).


def _ptrim_big(a: np.ndarray) -> np.ndarray:
    k = len(a)
    while k and not np.any(a[k - 1]):
        k -= 1
    return a[:k]


def _pmul_big(F: FieldCtx, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((len(a) + len(b) - 1, F.n), dtype=F.dtype)
    for i in range(len(a)):
        out[i : i + len(b)] = F.add(out[i : i + len(b)], F.mul(a[i], b))
    return out


def _pdivmod_big(F: FieldCtx, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    b = _ptrim_big(b)
    r = _ptrim_big(a.copy())
    lb = len(b)
    if len(r) < lb:
        return np.zeros((0, F.n), dtype=F.dtype), r
    q = np.zeros((len(r) - lb + 1, F.n), dtype=F.dtype)
    inv_lead = F.inv(b[-1])
    for k in range(len(r) - 1, lb - 2, -1):
        c = F.mul(r[k], inv_lead)
        q[k - lb + 1] = c
        r[k - lb + 1 : k + 1] = F.sub(r[k - lb + 1 : k + 1], F.mul(c, b))
    return q, _ptrim_big(r[: lb - 1])


def _pgcd_big(F: FieldCtx, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = _ptrim_big(a), _ptrim_big(b)
    while len(b):
        a, b = b, _pdivmod_big(F, a, b)[1]
    return F.mul(a, F.inv(a[-1]))


def _ppowmod_big(F: FieldCtx, base: np.ndarray, e: int, f: np.ndarray) -> np.ndarray:
    result = F.one()[None, :]
    base = _pdivmod_big(F, base, f)[1]
    while e:
        if e & 1:
            result = _pdivmod_big(F, _pmul_big(F, result, base), f)[1]
        e >>= 1
        if e:
            base = _pdivmod_big(F, _pmul_big(F, base, base), f)[1]
    return result


def _linear_roots(F: FieldCtx, f: np.ndarray, rng: np.random.Generator) -> list[np.ndarray]:
    """Roots of a monic squarefree f that splits into linear factors over F."""
    f = _ptrim_big(f)
    deg = len(f) - 1
    if deg <= 0:
        return []
    if deg == 1:
        return [F.neg(F.mul(f[0], F.inv(f[1])))]
    while True:
        delta = F.random(rng)
        if F.p == 2:
            # absolute trace of delta*X, reduced mod f
            term = np.stack([F.zeros(), delta])
            g = term.copy()
            for _ in range(F.n - 1):
                term = _pdivmod_big(F, _pmul_big(F, term, term), f)[1]
                k = max(len(g), len(term))
                g = F.add(np.pad(g, ((0, k - len(g)), (0, 0))), np.pad(term, ((0, k - len(term)), (0, 0))))
        else:
            lin = np.stack([delta, F.one()])
            g = _ppowmod_big(F, lin, (F.q - 1) // 2, f)
            if len(g) == 0:
                continue
            g = g.copy()
            g[0] = F.sub(g[0], F.one())
        g = _pdivmod_big(F, g, f)[1] if len(g) >= len(f) else _ptrim_big(g)
        if len(g) == 0:
            continue
        h = _pgcd_big(F, f, g)
        dh = len(h) - 1
        if 0 < dh < deg:
            q, _ = _pdivmod_big(F, f, h)
            return _linear_roots(F, h, rng) + _linear_roots(F, q, rng)


@functools.lru_cache(maxsize=None)
def _embedding_matrix(small: FieldCtx, big: FieldCtx) -> np.ndarray:
    if small.p != big.p or big.n % small.n != 0:
        raise NoEmbedding(f"F_{small.p}^{small.n} does not embed in F_{big.p}^{big.n}")
    if small == big:
        return np.eye(small.n, dtype=big.dtype)
    f = np.zeros((small.n + 1, big.n), dtype=big.dtype)
    f[:, 0] = small.modulus
    roots = _linear_roots(big, f, np.random.default_rng(EMBED_SEED))
    rho = min(roots, key=lambda r: int(big.to_int(r)))
    cols = [big.one()]
    for _ in range(small.n - 1):
        cols.append(big.mul(cols[-1], rho))
    return np.stack(cols, axis=1)


def embedding_matrix(small: FieldCtx, big: FieldCtx) -> np.ndarray:
    """F_p matrix Phi (big.n x small.n) with column j = phi(x^j)."""
    return _embedding_matrix(small, big).copy()


def embed_array(a, small: FieldCtx, big: FieldCtx) -> np.ndarray:
    phi = _embedding_matrix(small, big)
    return (np.asarray(a, dtype=big.dtype) @ phi.T) % big.p


def embed(a: FqElem, big: FieldCtx) -> FqElem:
    return FqElem.of(big, embed_array(a.vec, a.ctx, big))
