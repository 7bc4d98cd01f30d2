"""Executable linear schemes and the decoding simulator.

Everything is expressed over F_p. The data x in F_q^d becomes the row
X = (coefficients of x_1, ..., coefficients of x_d) of length d*n, the
broadcast is S = X @ E for a block-sparse encoder E, and user k computes

    w_k = S[support_k] @ D_k + w'_k @ G_k            (mod p)

where w'_k and w_k are flattened the same way as X.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from ._util import fmt, ordered_map
from .errors import (
    BadParams,
    BadRegime,
    DimMismatch,
    EnFailed,
    FormatError,
    MemoryGuard,
    NTooSmall,
    RankDeficient,
    SearchExhausted,
)
from .galois import FieldCtx, make_field
from .instance import (
    TOY_BROADCAST,
    LcbcInstance,
    demands_batch,
    embed_instance,
    rng_for,
    toy_base_instance as _toy_instance,
)
from .sublinalg import (
    FqMatrix,
    conditional_indices,
    fp_block,
    fp_complete_to_basis,
    fp_inverse,
    fp_matmul,
    fp_rank,
    hstack,
    inverse,
    rank,
    solve,
    to_fp_rows,
)

MEMORY_LIMIT = 2**26
SIM_CHUNK = 256
EXHAUSTIVE_LIMIT = 2**20


@dataclass
class Decoder:
    support: np.ndarray  # positions in S
    D: np.ndarray  # len(support) x out
    G: np.ndarray  # (m'_k n) x out

    def to_json(self) -> dict:
        return {"support": self.support.tolist(), "D": self.D.tolist(), "G": self.G.tolist()}

    @staticmethod
    def from_json(obj: dict) -> "Decoder":
        sup = np.array(obj["support"], dtype=np.int64)
        D = np.array(obj["D"], dtype=np.int64).reshape(len(sup), -1)
        G = np.array(obj["G"], dtype=np.int64)
        return Decoder(sup, D, G.reshape(G.shape[0] if G.ndim == 2 else 0, D.shape[1]))


@dataclass(eq=False)
class Scheme:
    kind: str
    p: int
    n: int
    d: int
    m: tuple[int, ...]
    mprime: tuple[int, ...]
    mats: list[np.ndarray]
    blocks: list[tuple[int, int, int]]  # (row offset, column offset, matrix id)
    broadcast_len_p: int
    decoders: list[Decoder | None]
    meta: dict = field(default_factory=dict)

    @property
    def cost_q(self) -> Fraction:
        return Fraction(self.broadcast_len_p, self.n)

    @property
    def K(self) -> int:
        return len(self.m)

    def encode(self, X: np.ndarray, cols: np.ndarray | None = None) -> np.ndarray:
        """S = X @ E for a batch of data rows X (T x d*n), optionally only at cols."""
        X = np.asarray(X, dtype=np.int64)
        T = X.shape[0]
        if cols is None:
            out = np.zeros((T, self.broadcast_len_p), dtype=np.int64)
            for r0, c0, mid in self.blocks:
                M = self.mats[mid]
                h, w = M.shape
                part = fp_matmul(X[:, r0 : r0 + h], M, self.p)
                out[:, c0 : c0 + w] = (out[:, c0 : c0 + w] + part) % self.p
            return out
        cols = np.asarray(cols, dtype=np.int64)
        out = np.zeros((T, len(cols)), dtype=np.int64)
        for r0, c0, mid in self.blocks:
            M = self.mats[mid]
            h, w = M.shape
            sel = np.flatnonzero((cols >= c0) & (cols < c0 + w))
            if sel.size:
                part = fp_matmul(X[:, r0 : r0 + h], M[:, cols[sel] - c0], self.p)
                out[:, sel] = (out[:, sel] + part) % self.p
        return out

    def decode(self, k: int, s_support: np.ndarray, wprime: np.ndarray) -> np.ndarray:
        dec = self.decoders[k]
        if dec is None:
            raise RankDeficient(f"user {k} has no decoder")
        return (fp_matmul(s_support, dec.D, self.p) + fp_matmul(wprime, dec.G, self.p)) % self.p

    # serialization ----------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "p": self.p,
            "n": self.n,
            "d": self.d,
            "m": list(self.m),
            "mprime": list(self.mprime),
            "broadcast_len_p": self.broadcast_len_p,
            "cost_q": fmt(self.cost_q),
            "mats": [M.tolist() for M in self.mats],
            "blocks": [list(b) for b in self.blocks],
            "decoders": [None if dec is None else dec.to_json() for dec in self.decoders],
            "meta": self.meta,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"), sort_keys=True)

    @staticmethod
    def from_json(obj: dict) -> "Scheme":
        try:
            mats = []
            for M in obj["mats"]:
                arr = np.array(M, dtype=np.int64)
                mats.append(arr.reshape(arr.shape[0], -1) if arr.ndim == 2 else arr.reshape(0, 0))
            return Scheme(
                obj["kind"], int(obj["p"]), int(obj["n"]), int(obj["d"]),
                tuple(obj["m"]), tuple(obj["mprime"]), mats,
                [tuple(int(v) for v in b) for b in obj["blocks"]],
                int(obj["broadcast_len_p"]),
                [None if dec is None else Decoder.from_json(dec) for dec in obj["decoders"]],
                obj.get("meta", {}),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed scheme: {exc}") from exc

    @staticmethod
    def loads(text: str) -> "Scheme":
        return Scheme.from_json(json.loads(text))


def _decoder_from_rows(F: FieldCtx, coef: FqMatrix, sources: Sequence[tuple[str, int]], mprime_k: int) -> Decoder:
    """Decoder for w = sum_i y_i coef[i, :], where y_i is broadcast symbol s
    (source ("S", s)) or side-information symbol j (source ("W", j))."""
    n = F.n
    out = coef.cols * n
    G = np.zeros((mprime_k * n, out), dtype=np.int64)
    sup, rows = [], []
    for i, (src, idx) in enumerate(sources):
        block = fp_block(coef.row_slice([i])).astype(np.int64)
        if src == "W":
            G[idx * n : (idx + 1) * n] = (G[idx * n : (idx + 1) * n] + block) % F.p
        else:
            sup.extend(range(idx * n, (idx + 1) * n))
            rows.append(block)
    D = np.concatenate(rows, axis=0) if rows else np.zeros((0, out), dtype=np.int64)
    return _compact(Decoder(np.array(sup, dtype=np.int64), D, G), F.p)


def _compact(dec: Decoder, p: int) -> Decoder:
    """Merge duplicate support entries and drop all-zero rows."""
    if dec.support.size == 0:
        return dec
    uniq, inv = np.unique(dec.support, return_inverse=True)
    D = np.zeros((len(uniq), dec.D.shape[1]), dtype=np.int64)
    np.add.at(D, inv, dec.D)
    D %= p
    keep = np.any(D != 0, axis=1)
    return Decoder(uniq[keep], D[keep], dec.G % p)


# ---------------------------------------------------------------------------
# Builders


def build_explicit(inst: LcbcInstance, enc: FqMatrix, coefs: Sequence[tuple[FqMatrix, FqMatrix]], kind: str = "explicit", meta: dict | None = None) -> Scheme:
    """Scheme from an F_q encoder (d x B) and per-user F_q decoders
    w_k = S @ Dk + w'_k @ Gk."""
    F = inst.field
    decs = []
    for k, (Dk, Gk) in enumerate(coefs):
        coef = FqMatrix(F, np.concatenate([Gk.data, Dk.data], axis=0))
        sources = [("W", j) for j in range(Gk.rows)] + [("S", s) for s in range(Dk.rows)]
        decs.append(_decoder_from_rows(F, coef, sources, inst.mprime[k]))
    E = fp_block(enc).astype(np.int64)
    return Scheme(kind, F.p, F.n, inst.d, inst.m, inst.mprime, [E], [(0, 0, 0)], enc.cols * F.n, decs, meta or {})


def toy_scheme() -> Scheme:
    """Broadcast (2A+6B+3C, 4A+4B+C+D) for the first three users of the F_7 example."""
    inst = _toy_instance(3)
    F = inst.field
    enc = FqMatrix.from_ints(F, np.array(TOY_BROADCAST).T)
    col = lambda vals: FqMatrix.from_ints(F, np.array(vals).reshape(-1, 1))
    coefs = [
        (col([2, 0]), col([-3])),  # w1 = 2 S1 - 3 w1'
        (col([0, 5]), col([-4])),  # w2 = 5 S2 - 4 w2'
        (col([1, 1]), col([0])),  # w3 = S1 + S2
    ]
    return build_explicit(inst, enc, coefs, kind="explicit")


def toy_pair() -> tuple[LcbcInstance, Scheme]:
    return _toy_instance(3), toy_scheme()


def build_separate(inst: LcbcInstance) -> Scheme:
    F = inst.field
    n = F.n
    V = hstack(list(inst.v), F=F, rows=inst.d)
    E = fp_block(V).astype(np.int64)
    decs, off = [], 0
    for k in range(inst.K):
        w = inst.m[k] * n
        decs.append(Decoder(np.arange(off, off + w), np.eye(w, dtype=np.int64), np.zeros((inst.mprime[k] * n, w), dtype=np.int64)))
        off += w
    return Scheme("separate", F.p, n, inst.d, inst.m, inst.mprime, [E], [(0, 0, 0)], off, decs)


def random_coding_z(q: int, K: int, gap: int) -> int:
    """Smallest z with q^z > K * gap."""
    z = 1
    while q**z <= K * max(gap, 0):
        z += 1
    return z


def build_random_coding(inst: LcbcInstance, max_tries: int = 16, seed: int = 0, max_z: int | None = None) -> Scheme:
    """Broadcast x^T u^c with u^c random, so every user can solve for x.

    u^c has d - min_k rk(v'_k) columns and is drawn over F_{q^z}, starting at
    z = 1 and growing z until [v'_k, u^c] has rank d for every k.
    """
    F, d = inst.field, inst.d
    rks = [rank(M) for M in inst.vprime]
    c = max(0, d - min(rks)) if inst.K else 0
    mp_min = min(inst.mprime) if inst.K else d
    z_guar = random_coding_z(F.q, inst.K, d - mp_min)
    max_z = z_guar + 3 if max_z is None else max_z
    for z in range(1, max_z + 1):
        big = make_field(F.p, F.n * z)
        E = embed_instance(inst, big)
        for t in range(max_tries if c else 1):
            uc = FqMatrix.random(big, d, c, rng_for(seed, z, t))
            mats = [hstack([E.vprime[k], uc]) for k in range(inst.K)]
            if all(rank(M) == d for M in mats):
                return _random_coding_scheme(E, uc, mats, {"z": z, "base_n": F.n, "z_guaranteed": z_guar, "tries": t + 1})
    raise SearchExhausted(f"no valid u^c found up to z={max_z}")


def _random_coding_scheme(E: LcbcInstance, uc: FqMatrix, mats: list[FqMatrix], meta: dict) -> Scheme:
    big = E.field
    decs = []
    for k, Mk in enumerate(mats):
        sel = conditional_indices(Mk, FqMatrix.zeros(big, E.d, 0))
        coef = inverse(Mk.columns(sel)) @ E.v[k]
        mpk = E.mprime[k]
        sources = [("W", s) if s < mpk else ("S", s - mpk) for s in sel]
        decs.append(_decoder_from_rows(big, coef, sources, mpk))
    if uc.cols:
        mats_out, blocks = [fp_block(uc).astype(np.int64)], [(0, 0, 0)]
    else:
        mats_out, blocks = [], []
    return Scheme("random_coding", big.p, big.n, E.d, E.m, E.mprime, mats_out, blocks, uc.cols * big.n, decs, meta)


def build_odd_d(inst: LcbcInstance) -> Scheme:
    """K-1 symbols for m = m' = 1 and d = 2K - 1."""
    F, K, d = inst.field, inst.K, inst.d
    if any(w != 1 for w in inst.m + inst.mprime) or d != 2 * K - 1 or K < 2:
        raise BadParams("odd-d scheme needs m_k = m'_k = 1, K >= 2 and d = 2K - 1")
    Mk = []
    for k in range(K):
        M = hstack(list(inst.vprime) + [inst.v[j] for j in range(K) if j != k])
        if rank(M) != d:
            raise RankDeficient(f"M_{k + 1} is singular")
        Mk.append(M)
    coeff = solve(Mk[K - 1], inst.v[K - 1])
    alpha_p = coeff.data[:K, 0]
    alpha = coeff.data[K:, 0]
    if np.any(F.is_zero(alpha)):
        raise AssertionError("alpha_k = 0 contradicts full rank of M_k")
    resid = inst.v[K - 1].data[:, 0]
    for k in range(K - 1):
        resid = F.sub(resid, F.mul(alpha[k], inst.v[k].data[:, 0]))
    for k in range(K):
        resid = F.sub(resid, F.mul(alpha_p[k], inst.vprime[k].data[:, 0]))
    if np.any(resid):
        raise AssertionError("coefficient identity failed")

    enc = FqMatrix.zeros(F, d, K - 1)
    for k in range(K - 1):
        enc.data[:, k] = F.add(F.mul(alpha[k], inst.v[k].data[:, 0]), F.mul(alpha_p[k], inst.vprime[k].data[:, 0]))
    coefs = []
    for k in range(K - 1):
        Dk = FqMatrix.zeros(F, K - 1, 1)
        inv = F.inv(alpha[k])
        Dk.data[k, 0] = inv
        Gk = FqMatrix(F, F.neg(F.mul(alpha_p[k], inv))[None, None, :])
        coefs.append((Dk, Gk))
    Dlast = FqMatrix(F, np.broadcast_to(F.one(), (K - 1, 1, F.n)).copy())
    coefs.append((Dlast, FqMatrix(F, alpha_p[K - 1][None, None, :].copy())))
    meta = {"alpha": alpha.tolist(), "alpha_prime": alpha_p.tolist()}
    return build_explicit(inst, enc, coefs, kind="odd_d", meta=meta)


# ---------------------------------------------------------------------------
# Interference alignment


def ia_num_vars(K: int, d: int, m: int, mp: int) -> int:
    return K * d * (m + mp)


def ia_N(n: int, K: int, d: int, m: int, mp: int) -> int:
    """Largest N with n - (m+m') N^P >= sqrt(n), P = Kd(m+m'). Exact integers."""
    P, s = ia_num_vars(K, d, m, mp), m + mp

    def ok(N: int) -> bool:
        slack = n - s * N**P
        return slack >= 0 and slack * slack >= n

    try:
        N = max(0, int(((n - math.isqrt(n)) / s) ** (1.0 / P)))
    except OverflowError:
        N = 0
    while ok(N + 1):
        N += 1
    while N > 0 and not ok(N):
        N -= 1
    return N


def ia_cost_formula(n: int, K: int, d: int, m: int, mp: int, N: int | None = None) -> tuple[Fraction, int]:
    """(m d (N+1)^P + K m (n - (m+m') N^P)) / n with N from ia_N unless given."""
    P = ia_num_vars(K, d, m, mp)
    N = ia_N(n, K, d, m, mp) if N is None else N
    return Fraction(m * d * (N + 1) ** P + K * m * (n - (m + mp) * N**P), n), N


def ia_en_bound(p: int, n: int, K: int, d: int, m: int, mp: int, N: int) -> float:
    """1 - Kd(2m'+m) N / p^(n - (m+m') eta), clamped at 0."""
    eta = N ** ia_num_vars(K, d, m, mp)
    expo = n - (m + mp) * eta
    val = 1 - Fraction(K * d * (2 * mp + m) * N) * Fraction(p) ** (-expo)
    return float(max(Fraction(0), val))


@dataclass(eq=False)
class IaScheme:
    N: int
    eta: int
    etabar: int
    r: np.ndarray  # (m', n) field elements
    theta: np.ndarray  # (m, n)
    t: np.ndarray  # (m, K, d, m', n): t[mu, k, i, j']
    H: list[np.ndarray]  # m arrays n x eta over F_p
    Hbar: list[np.ndarray] | None  # m arrays n x etabar
    Z: list[np.ndarray]
    en_holds: bool
    en_ranks: list[int]
    paper_bound: float
    instance: LcbcInstance  # the symmetrised instance the scheme runs on


def symmetrize(inst: LcbcInstance, seed: int = 0) -> LcbcInstance:
    """Pad demands with fresh random columns up to max m_k and keep the first
    min m'_k side-information columns."""
    if inst.symmetric:
        return inst
    F = inst.field
    m, mp = max(inst.m), min(inst.mprime)
    rng = rng_for(seed, 1)
    v, vp = [], []
    for k in range(inst.K):
        extra = FqMatrix.random(F, inst.d, m - inst.m[k], rng)
        v.append(hstack([inst.v[k], extra]))
        vp.append(inst.vprime[k].columns(range(mp)))
    return LcbcInstance(F, inst.K, inst.d, (m,) * inst.K, (mp,) * inst.K, tuple(v), tuple(vp))


def _monomials(F: FieldCtx, theta: np.ndarray, variables: np.ndarray, maxexp: int) -> np.ndarray:
    """theta * prod z_l^{e_l} for all e in {0..maxexp}^P, lexicographic with
    the first variable slowest. Returns (count, n) field elements."""
    arr = theta[None, :].astype(F.dtype)
    for l in range(len(variables) - 1, -1, -1):
        Mz = F.mat_repr(variables[l]).T
        pieces = [arr]
        for _ in range(maxexp):
            pieces.append(fp_matmul(pieces[-1], Mz, F.p))
        arr = np.concatenate(pieces, axis=0)
    return arr


def _ones_map(F: FieldCtx) -> np.ndarray:
    """W with vec(h) @ W = (A(h) 1)^T, A(h) the transposed multiplication matrix."""
    n = F.n
    idx = np.add.outer(np.arange(n), np.arange(n))
    return F._xpow[idx].sum(axis=-1) % F.p


def _digits(count: int, base: int, P: int) -> np.ndarray:
    """Base-`base` digits of 0..count-1, most significant first, shape (count, P)."""
    idx = np.arange(count, dtype=np.int64)
    out = np.zeros((count, P), dtype=np.int64)
    for l in range(P - 1, -1, -1):
        out[:, l] = idx % base
        idx //= base
    return out


def ia_artifacts(inst: LcbcInstance, N: int | None = None, seed: int = 0, with_hbar: bool = True, force: bool = False) -> IaScheme:
    sym = symmetrize(inst, seed)
    F, K, d = sym.field, sym.K, sym.d
    m, mp = (sym.m[0], sym.mprime[0]) if K else (0, 0)
    if m < 1 or mp < 1 or d <= m + mp:
        raise BadRegime(f"IA needs m, m' >= 1 and d > m+m'; got K={K}, d={d}, m={m}, m'={mp}")
    P = ia_num_vars(K, d, m, mp)
    if N is None:
        N = ia_N(F.n, K, d, m, mp)
        if N < 1:
            raise NTooSmall(f"n={F.n} gives N=0; pass an explicit N")
    if N < 1:
        raise NTooSmall("N must be >= 1")
    eta, etabar = N**P, (N + 1) ** P
    if with_hbar and m * d * etabar > MEMORY_LIMIT and not force:
        raise MemoryGuard(f"m*d*etabar = {m * d * etabar} exceeds {MEMORY_LIMIT}; use force")
    if not with_hbar and eta > MEMORY_LIMIT and not force:
        raise MemoryGuard(f"eta = {eta} exceeds {MEMORY_LIMIT}; use force")

    rng = rng_for(seed, 2)
    r = F.random(rng, mp)
    theta = F.random(rng, m)
    V = np.stack([M.data for M in sym.v])  # (K, d, m, n)
    Vp = np.stack([M.data for M in sym.vprime])  # (K, d, m', n)
    t = np.stack([F.sub(Vp, F.mul(V[:, :, mu, None, :], r[None, None, :, :])) for mu in range(m)])
    W = _ones_map(F)

    H, Hbar = [], [] if with_hbar else None
    for mu in range(m):
        variables = np.concatenate([V.reshape(-1, F.n), t[mu].reshape(-1, F.n)])
        if with_hbar:
            hb = fp_matmul(_monomials(F, theta[mu], variables, N), W, F.p).T
            Hbar.append(hb)
            pos = _digits(eta, N, P) @ ((N + 1) ** np.arange(P - 1, -1, -1, dtype=np.int64))
            H.append(hb[:, pos])
        else:
            H.append(fp_matmul(_monomials(F, theta[mu], variables, N - 1), W, F.p).T)

    Rm = [F.mat_repr(r[j]).T.astype(np.int64) for j in range(mp)]
    Z, ranks = [], []
    for mu in range(m):
        stack = np.concatenate(H + [fp_matmul(R, H[mu], F.p) for R in Rm], axis=1)
        ranks.append(fp_rank(stack, F.p))
        Z.append(fp_complete_to_basis(stack, F.p).astype(np.int64))
    en = all(rk == (m + mp) * eta for rk in ranks)
    bound = ia_en_bound(F.p, F.n, K, d, m, mp, N)
    return IaScheme(N, eta, etabar, r, theta, t, H, Hbar, Z, en, ranks, bound, sym)


def build_ia(inst: LcbcInstance, N_override: int | None = None, seed: int = 0, force: bool = False, strict: bool = False) -> tuple[IaScheme, Scheme]:
    ia = ia_artifacts(inst, N_override, seed, with_hbar=True, force=force)
    if strict and not ia.en_holds:
        raise EnFailed(f"rank event failed: ranks {ia.en_ranks}")
    sym = ia.instance
    F, K, d, n, p = sym.field, sym.K, sym.d, sym.field.n, sym.field.p
    m, mp = sym.m[0], sym.mprime[0]
    N, P, eta, etabar = ia.N, ia_num_vars(K, d, m, mp), ia.eta, ia.etabar

    # S_0 = X blockdiag(d copies of [Hbar_1 .. Hbar_m])
    mats = [np.concatenate(ia.Hbar, axis=1)]
    blocks = [(i * n, i * m * etabar, 0) for i in range(d)]
    off = m * d * etabar
    zoff = {}
    for k in range(K):
        for mu in range(m):
            zoff[k, mu] = off
            for i in range(d):
                Av = F.mat_repr(sym.v[k].data[i, mu]).T.astype(np.int64)
                mats.append(fp_matmul(Av, ia.Z[mu], p))
                blocks.append((i * n, off, len(mats) - 1))
            off += ia.Z[mu].shape[1]
    total = off

    decoders: list[Decoder | None] = [None] * inst.K
    if ia.en_holds:
        wbar = (N + 1) ** np.arange(P - 1, -1, -1, dtype=np.int64)
        eh = _digits(eta, N, P)
        base = eh @ wbar
        Rm = [F.mat_repr(ia.r[j]).T.astype(np.int64) for j in range(mp)]
        Binv = [fp_inverse(np.concatenate(ia.H + [fp_matmul(R, ia.H[mu], p) for R in Rm] + [ia.Z[mu]], axis=1), p).astype(np.int64) for mu in range(m)]
        for k in range(inst.K):
            decoders[k] = _ia_decoder(k, sym, ia, base, wbar, Binv, zoff, inst.m[k], inst.mprime[k])

    meta = {
        "N": N, "eta": eta, "etabar": etabar, "en_holds": ia.en_holds,
        "en_ranks": ia.en_ranks, "paper_bound": ia.paper_bound, "seed": seed,
        "symmetrized": not inst.symmetric,
    }
    scheme = Scheme("ia", p, n, d, inst.m, inst.mprime, mats, blocks, total, decoders, meta)
    return ia, scheme


def _ia_decoder(k, sym, ia, base, wbar, Binv, zoff, m_k, mprime_k) -> Decoder:
    F = sym.field
    p, n, K, d = F.p, F.n, sym.K, sym.d
    m, mp = sym.m[0], sym.mprime[0]
    eta, etabar = ia.eta, ia.etabar
    idx_s, idx_c, vals = [], [], []
    G_all = np.zeros((mp * n, m * n), dtype=np.int64)
    for mu in range(m):
        s_list, c_list, v_list = [], [], []
        # X V_k^mu H_nu[e] = sum_i S_0[i, nu, e + unit(k, i, mu)]
        for nu in range(m):
            for i in range(d):
                a = (k * d + i) * m + mu
                s_list.append(i * m * etabar + nu * etabar + base + wbar[a])
                c_list.append(nu * eta + np.arange(eta))
                v_list.append(np.ones(eta, dtype=np.int64))
        # X V_k^mu R_j' H_mu = w'_j' H_mu - sum_i S_0[i, mu, e + unit(t-variable)]
        Gf = np.zeros((mp * n, n), dtype=np.int64)
        for j in range(mp):
            col0 = m * eta + j * eta
            Gf[j * n : (j + 1) * n, col0 : col0 + eta] = ia.H[mu]
            for i in range(d):
                b = K * d * m + (k * d + i) * mp + j
                s_list.append(i * m * etabar + mu * etabar + base + wbar[b])
                c_list.append(col0 + np.arange(eta))
                v_list.append(np.full(eta, p - 1, dtype=np.int64))
        # X V_k^mu Z_mu is sent directly
        zc = ia.Z[mu].shape[1]
        s_list.append(zoff[k, mu] + np.arange(zc))
        c_list.append((m + mp) * eta + np.arange(zc))
        v_list.append(np.ones(zc, dtype=np.int64))
        s = np.concatenate(s_list)
        c = np.concatenate(c_list)
        v = np.concatenate(v_list)
        sup, inv = np.unique(s, return_inverse=True)
        Df = np.zeros((len(sup), n), dtype=np.int64)
        np.add.at(Df, (inv, c), v)
        Df %= p
        Dmu = fp_matmul(Df, Binv[mu], p)
        idx_s.append(sup)
        idx_c.append(mu)
        vals.append(Dmu)
        G_all[:, mu * n : (mu + 1) * n] = fp_matmul(Gf, Binv[mu], p)
    sup_all = np.unique(np.concatenate(idx_s))
    D = np.zeros((len(sup_all), m * n), dtype=np.int64)
    for sup, mu, Dmu in zip(idx_s, idx_c, vals):
        rows = np.searchsorted(sup_all, sup)
        D[rows, mu * n : (mu + 1) * n] = (D[rows, mu * n : (mu + 1) * n] + Dmu) % p
    out = m_k * n
    G = np.zeros((mprime_k * n, out), dtype=np.int64)
    G[: mp * n] = G_all[:, :out]
    return _compact(Decoder(sup_all, D[:, :out], G), p)


# ---------------------------------------------------------------------------
# Simulation


@dataclass
class SimReport:
    trials: int
    successes: int
    failures: int
    achieved_cost_q: Fraction
    broadcast_len_p: int
    declared_len_p: int
    user_failures: list[int]
    exhaustive: bool = False
    en_frequency: float | None = None

    HEADER = ("kind", "trials", "successes", "failures", "broadcast_len_p", "declared_len_p", "achieved_cost_q", "exhaustive", "en_frequency")

    def row(self, kind: str) -> list:
        return [kind, self.trials, self.successes, self.failures, self.broadcast_len_p, self.declared_len_p, self.achieved_cost_q, self.exhaustive, self.en_frequency]


def broadcast_support(scheme: Scheme) -> int:
    """Number of broadcast positions some encoder block actually writes."""
    covered = np.zeros(scheme.broadcast_len_p + 1, dtype=np.int64)
    end = 0
    for _, c0, mid in scheme.blocks:
        w = scheme.mats[mid].shape[1]
        covered[c0] += 1
        covered[min(c0 + w, len(covered) - 1)] -= 1
        end = max(end, c0 + w)
    if end > scheme.broadcast_len_p:
        return end
    return int(np.count_nonzero(np.cumsum(covered)[: scheme.broadcast_len_p]))


def simulate_decoding(inst: LcbcInstance, scheme: Scheme, trials: int = 100, seed: int = 0, exhaustive: bool = False) -> SimReport:
    """Run every decoder on random (or all) data vectors and compare with the
    demands computed directly over F_q."""
    if scheme.n != inst.field.n:
        inst = embed_instance(inst, make_field(inst.field.p, scheme.n))
    F = inst.field
    if scheme.p != F.p or scheme.d != inst.d or scheme.K != inst.K:
        raise DimMismatch("scheme was built for a different instance shape")
    dn = inst.d * F.n
    if exhaustive:
        if F.p**dn > EXHAUSTIVE_LIMIT:
            raise BadParams(f"exhaustive mode needs p^(dn) <= 2^20, got {F.p}^{dn}")
        trials = F.p**dn
    live = [k for k in range(inst.K) if scheme.decoders[k] is not None]
    union = np.unique(np.concatenate([scheme.decoders[k].support for k in live])) if live else np.zeros(0, dtype=np.int64)
    where = {k: np.searchsorted(union, scheme.decoders[k].support) for k in live}

    def run(span: tuple[int, int]) -> np.ndarray:
        lo, hi = span
        if exhaustive:
            codes = np.arange(lo, hi, dtype=np.int64)
            X = np.stack([(codes // F.p**j) % F.p for j in range(dn)], axis=1)
        else:
            X = rng_for(seed, lo // SIM_CHUNK).integers(0, F.p, size=(hi - lo, dn))
        xs = X.reshape(hi - lo, inst.d, F.n)
        w, wp = demands_batch(inst, xs)
        S = scheme.encode(X, union)
        bad = np.zeros((hi - lo, inst.K), dtype=bool)
        for k in range(inst.K):
            if k not in where:
                bad[:, k] = True
                continue
            got = scheme.decode(k, S[:, where[k]], to_fp_rows(wp[k]))
            bad[:, k] = np.any(got != to_fp_rows(w[k]), axis=1)
        return bad

    spans = [(s, min(trials, s + SIM_CHUNK)) for s in range(0, trials, SIM_CHUNK)]
    results = ordered_map(run, spans)
    bad = np.concatenate(results, axis=0) if results else np.zeros((0, inst.K), dtype=bool)
    failures = int(np.any(bad, axis=1).sum())
    measured = broadcast_support(scheme)
    en = scheme.meta.get("en_holds")
    return SimReport(
        trials, trials - failures, failures, Fraction(measured, scheme.n), measured,
        scheme.broadcast_len_p, bad.sum(axis=0).astype(int).tolist(), exhaustive,
        None if en is None else float(bool(en)),
    )
