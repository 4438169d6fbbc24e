"""Symmetric-group combinatorics and canonical Schur transforms.

The Schur basis of ``(C^d)^{(x)n}`` is built from matrix units of the Young
orthogonal representation, so the permutation register of every block carries
exactly the Young orthogonal basis whatever the local dimension ``d``. All
transforms are real orthogonal matrices.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from math import comb, factorial
from pathlib import Path
from typing import Sequence

import numpy as np

from .tensor_core import all_permutations, apply_permutation, compose

CONSTRUCTION_VERSION = "matrix-units/weight-gram-schmidt/v1"
MAX_N = 4
MAX_DIM = 4096

Partition = tuple[int, ...]
Tableau = tuple[tuple[int, ...], ...]


class SizeCapError(ValueError):
    pass


class DecompositionError(RuntimeError):
    """Raised when a Schur-basis reconstruction misses its tolerance."""


# -- partitions and tableaux ---------------------------------------------------

def partitions(n: int, max_rows: int | None = None) -> list[Partition]:
    """Partitions of ``n`` with at most ``max_rows`` parts, lexicographically descending."""
    max_rows = n if max_rows is None else max_rows

    def _gen(rest, largest, rows):
        if rest == 0:
            yield ()
            return
        if rows == 0:
            return
        for first in range(min(rest, largest), 0, -1):
            for tail in _gen(rest - first, first, rows - 1):
                yield (first,) + tail

    if n == 0:
        return [()]
    return list(_gen(n, n, max_rows))


def standard_tableaux(shape: Partition) -> list[Tableau]:
    """Standard Young tableaux of ``shape`` sorted by row-reading word."""
    n = sum(shape)
    found = []

    def _fill(rows, k):
        if k > n:
            found.append(tuple(tuple(r) for r in rows))
            return
        for i, length in enumerate(shape):
            if len(rows[i]) < length and (i == 0 or len(rows[i - 1]) > len(rows[i])):
                rows[i].append(k)
                _fill(rows, k + 1)
                rows[i].pop()

    _fill([[] for _ in shape], 1)
    return sorted(found, key=lambda t: sum(t, ()))


def semistandard_tableaux_count(shape: Partition, d: int) -> int:
    """Brute-force count of semistandard tableaux with entries in 1..d."""
    cells = [(i, j) for i, length in enumerate(shape) for j in range(length)]
    count = 0
    for fill in product(range(d), repeat=len(cells)):
        f = dict(zip(cells, fill))
        ok = all(
            (j == 0 or f[(i, j - 1)] <= f[(i, j)]) and (i == 0 or f[(i - 1, j)] < f[(i, j)])
            for i, j in cells
        )
        count += ok
    return count


def dim_sym(shape: Partition) -> int:
    """Hook-length formula."""
    n = sum(shape)
    conj = [sum(1 for r in shape if r > j) for j in range(shape[0])] if shape else []
    hooks = 1
    for i, length in enumerate(shape):
        for j in range(length):
            hooks *= (length - j - 1) + (conj[j] - i - 1) + 1
    return factorial(n) // hooks


def dim_unitary(shape: Partition, d: int) -> int:
    """Weyl dimension formula for the U(d) irrep labelled by ``shape``."""
    if len(shape) > d:
        return 0
    lam = list(shape) + [0] * (d - len(shape))
    num, den = 1, 1
    for i in range(d):
        for j in range(i + 1, d):
            num *= lam[i] - lam[j] + j - i
            den *= j - i
    return num // den


def _content(tab: Tableau, k: int) -> int:
    for i, row in enumerate(tab):
        if k in row:
            return row.index(k) - i
    raise KeyError(k)


def _swap(tab: Tableau, a: int, b: int) -> Tableau:
    return tuple(tuple(b if x == a else a if x == b else x for x in row) for row in tab)


@lru_cache(maxsize=None)
def young_orthogonal_matrix(shape: Partition, k: int) -> np.ndarray:
    """Young orthogonal matrix of the adjacent transposition (k, k+1), ``k`` 1-based."""
    shape = tuple(shape)
    tabs = standard_tableaux(shape)
    index = {t: i for i, t in enumerate(tabs)}
    m = np.zeros((len(tabs), len(tabs)))
    for t in tabs:
        i = index[t]
        axial = _content(t, k + 1) - _content(t, k)
        m[i, i] = 1.0 / axial
        if abs(axial) > 1:
            m[index[_swap(t, k, k + 1)], i] = np.sqrt(1.0 - 1.0 / axial**2)
    return m


@lru_cache(maxsize=None)
def young_representation(shape: Partition) -> dict[tuple[int, ...], np.ndarray]:
    """p_lambda(pi) for every pi in S_n (image-form 0-based permutations)."""
    shape = tuple(shape)
    n = sum(shape)
    ident = tuple(range(n))
    dim = dim_sym(shape)
    rep = {ident: np.eye(dim)}
    frontier = [ident]
    gens = []
    for k in range(1, n):
        s = list(range(n))
        s[k - 1], s[k] = s[k], s[k - 1]
        gens.append((tuple(s), young_orthogonal_matrix(shape, k)))
    while frontier:
        nxt = []
        for p in frontier:
            for s, ys in gens:
                q = compose(s, p)
                if q not in rep:
                    rep[q] = ys @ rep[p]
                    nxt.append(q)
        frontier = nxt
    return rep


# -- Schur transform -----------------------------------------------------------

@dataclass(frozen=True)
class Block:
    shape: Partition
    dim_p: int
    dim_q: int
    offset: int

    @property
    def size(self) -> int:
        return self.dim_p * self.dim_q


@dataclass(frozen=True)
class SchurTransform:
    """Columns of ``unitary`` are the Schur basis; ``S^T X S`` is block diagonal.

    Inside each block, the permutation index is major and the unitary index minor.
    """

    n: int
    d: int
    unitary: np.ndarray
    blocks: tuple[Block, ...]

    @property
    def layout(self) -> list[tuple[Partition, int, int]]:
        return [(b.shape, b.dim_p, b.dim_q) for b in self.blocks]

    def block(self, shape: Partition) -> Block | None:
        for b in self.blocks:
            if b.shape == tuple(shape):
                return b
        return None

    def columns(self, shape: Partition) -> np.ndarray:
        b = self.block(shape)
        return self.unitary[:, b.offset : b.offset + b.size]

    def to_schur(self, x: np.ndarray) -> np.ndarray:
        return self.unitary.T @ x @ self.unitary

    def from_schur(self, y: np.ndarray) -> np.ndarray:
        return self.unitary @ y @ self.unitary.T


def _check_caps(n: int, d: int, allow_large: bool):
    if n <= MAX_N and d**n <= MAX_DIM:
        return
    if not allow_large:
        raise SizeCapError(f"schur_transform(n={n}, d={d}) exceeds caps n<={MAX_N}, d^n<={MAX_DIM}")
    warnings.warn(f"building a Schur transform beyond the desk-scale caps (n={n}, d={d})")


def _weight_spaces(n: int, d: int) -> list[np.ndarray]:
    """Computational basis indices grouped by content, highest weight first."""
    strings = np.array(list(product(range(d), repeat=n)), dtype=np.int64).reshape(-1, n)
    counts = np.stack([(strings == a).sum(axis=1) for a in range(d)], axis=1)
    keys = {}
    for idx, c in enumerate(map(tuple, counts)):
        keys.setdefault(c, []).append(idx)
    return [np.array(keys[c]) for c in sorted(keys, reverse=True)]


def _gram_schmidt(cols: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    basis = []
    for v in cols.T:
        w = v.copy()
        for _ in range(2):
            for b in basis:
                w -= (b @ w) * b
        nrm = np.linalg.norm(w)
        if nrm > tol:
            basis.append(w / nrm)
    return np.array(basis).T if basis else np.zeros((cols.shape[0], 0))


def _build(n: int, d: int) -> SchurTransform:
    dim = d**n
    perms = all_permutations(n)
    nfact = factorial(n)
    weights = _weight_spaces(n, d)
    unitary = np.zeros((dim, dim))
    blocks = []
    offset = 0
    for shape in partitions(n, d):
        rep = young_representation(shape)
        dp = dim_sym(shape)
        dq = dim_unitary(shape, d)
        # Q-basis: orthonormal basis of range(e_{t0 t0}), weight space by weight space.
        qcols = []
        for idx in weights:
            sub = np.zeros((dim, idx.size))
            sub[idx, np.arange(idx.size)] = 1.0
            proj = sum(rep[p][0, 0] * apply_permutation(sub, n, d, p) for p in perms) * dp / nfact
            basis = _gram_schmidt(proj[idx])
            if basis.shape[1]:
                full = np.zeros((dim, basis.shape[1]))
                full[idx] = basis
                qcols.append(full)
        q = np.concatenate(qcols, axis=1)
        if q.shape[1] != dq:
            raise DecompositionError(f"found {q.shape[1]} Q-vectors for {shape}, expected {dq}")
        permuted = {p: apply_permutation(q, n, d, p) for p in perms}
        for t in range(dp):
            vecs = sum(rep[p][t, 0] * permuted[p] for p in perms) * dp / nfact
            unitary[:, offset + t * dq : offset + (t + 1) * dq] = vecs
        blocks.append(Block(tuple(shape), dp, dq, offset))
        offset += dp * dq
    if offset != dim:
        raise DecompositionError(f"block dimensions sum to {offset}, expected {dim}")
    return SchurTransform(n, d, unitary, tuple(blocks))


@lru_cache(maxsize=32)
def _cached(n: int, d: int) -> SchurTransform:
    return _build(n, d)


def cache_key(n: int, d: int) -> str:
    h = hashlib.sha256(CONSTRUCTION_VERSION.encode()).hexdigest()[:12]
    return f"schur_n{n}_d{d}_{h}"


def schur_transform(n: int, d: int, allow_large: bool = False,
                    cache_dir: str | Path | None = None) -> SchurTransform:
    """Canonical Schur transform of ``(C^d)^{(x)n}``.

    With ``cache_dir`` the transform is also persisted as ``.npz`` keyed by
    ``(n, d, construction version)``.
    """
    _check_caps(n, d, allow_large)
    if cache_dir is None:
        return _cached(n, d)
    path = Path(cache_dir) / f"{cache_key(n, d)}.npz"
    if path.exists():
        data = np.load(path)
        blocks = tuple(
            Block(tuple(int(x) for x in data[f"shape{i}"]), int(dp), int(dq), int(off))
            for i, (dp, dq, off) in enumerate(data["meta"])
        )
        return SchurTransform(n, d, data["unitary"], blocks)
    st = _cached(n, d)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = np.array([(b.dim_p, b.dim_q, b.offset) for b in st.blocks])
    np.savez(path, unitary=st.unitary, meta=meta,
             **{f"shape{i}": np.array(b.shape) for i, b in enumerate(st.blocks)})
    return st


def permutation_block(st: SchurTransform, shape: Partition, perm: Sequence[int]) -> np.ndarray:
    """The P-register action of ``perm`` read off from the transform."""
    b = st.block(shape)
    cols = st.columns(shape)
    img = apply_permutation(cols, st.n, st.d, perm)
    m = cols.T @ img  # (dp*dq, dp*dq) = p_lambda (x) I_Q
    m = m.reshape(b.dim_p, b.dim_q, b.dim_p, b.dim_q)
    return np.einsum("aibi->ab", m) / b.dim_q


def max_entangled_P(shape: Partition) -> np.ndarray:
    """|I_P> = sum_t |t>|t> over the Young orthogonal basis (unnormalized)."""
    dp = dim_sym(tuple(shape))
    return np.eye(dp).reshape(-1)


def symmetric_subspace_projector(n: int, d1: int, d2: int) -> np.ndarray:
    """(1/n!) sum_pi p_A(pi) (x) p_B(pi) on ``A1..An, B1..Bn``."""
    dim = (d1 * d2) ** n
    out = np.zeros((dim, dim))
    eye = np.eye(dim)
    for p in all_permutations(n):
        t = eye.reshape((d1,) * n + (d2,) * n + (dim,))
        inv = list(np.argsort(p))
        t = t.transpose(inv + [n + i for i in inv] + [2 * n])
        out += t.reshape(dim, dim)
    return out / factorial(n)


def regroup_power(psi: np.ndarray, d1: int, d2: int, n: int) -> np.ndarray:
    """psi^{(x)n} reordered from (A1 B1 A2 B2 ...) to (A1..An B1..Bn)."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    full = psi
    for _ in range(n - 1):
        full = np.kron(full, psi)
    t = full.reshape((d1, d2) * n)
    order = [2 * j for j in range(n)] + [2 * j + 1 for j in range(n)]
    return t.transpose(order).reshape(-1)


def bipartite_power_decompose(psi: np.ndarray, d1: int, d2: int, n: int,
                              tol: float = 1e-9) -> dict[Partition, np.ndarray]:
    """Split psi^{(x)n} as sum_lambda |I_P_lambda> (x) |psi_lambda>.

    Returns ``psi_lambda`` as a ``dim Q^{d1}_lambda x dim Q^{d2}_lambda`` matrix.
    """
    sa = schur_transform(n, d1)
    sb = schur_transform(n, d2)
    vec = regroup_power(psi, d1, d2, n).reshape(d1**n, d2**n)
    coef = sa.unitary.T @ vec @ sb.unitary
    out = {}
    recon = np.zeros_like(coef)
    for ba in sa.blocks:
        for bb in sb.blocks:
            blk = coef[ba.offset : ba.offset + ba.size, bb.offset : bb.offset + bb.size]
            if ba.shape != bb.shape:
                continue
            t = blk.reshape(ba.dim_p, ba.dim_q, bb.dim_p, bb.dim_q)
            comp = np.einsum("tatb->ab", t) / ba.dim_p
            out[ba.shape] = comp
            recon[ba.offset : ba.offset + ba.size, bb.offset : bb.offset + bb.size] = np.einsum(
                "tu,ab->taub", np.eye(ba.dim_p), comp
            ).reshape(ba.size, bb.size)
    residual = float(np.linalg.norm(recon - coef))
    if residual > tol:
        raise DecompositionError(f"power decomposition residual {residual:.2e} exceeds {tol:.0e}")
    s = min(d1, d2)
    return {k: v for k, v in out.items() if len(k) <= s}


def binom_sym_dim(n: int, d: int) -> int:
    return comb(n + d - 1, n)
