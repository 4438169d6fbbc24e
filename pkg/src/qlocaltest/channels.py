"""Quantum channels in Kraus, Choi and Stinespring form.

Conventions used throughout the package:

* Choi operators live on ``out (x) in`` and ``C = sum_i vec(E_i) vec(E_i)^dag``
  with row-major ``vec``.
* A Stinespring isometry maps ``C^{d_in}`` into ``anc (x) out`` with the
  ancilla as the leading factor, ``V = sum_i |i>_anc (x) E_i``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .tensor_core import LabeledOperator, partial_trace, vec_flatten

COMPLETENESS_TOL = 1e-10
RANK_TOL = 1e-9
PSD_TOL = 1e-8


class InvalidChoiError(ValueError):
    pass


@dataclass(frozen=True)
class QuantumChannel:
    kraus: tuple[np.ndarray, ...]
    d_in: int
    d_out: int
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        ks = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        if not ks:
            raise ValueError("a channel needs at least one Kraus operator")
        for k in ks:
            if k.shape != (self.d_out, self.d_in):
                raise ValueError(f"Kraus operator shape {k.shape} != ({self.d_out}, {self.d_in})")
        object.__setattr__(self, "kraus", ks)
        if self.check:
            s = sum(k.conj().T @ k for k in ks)
            err = np.max(np.abs(s - np.eye(self.d_in)))
            if err > COMPLETENESS_TOL:
                raise ValueError(f"Kraus operators are not trace preserving (error {err:.2e})")

    @property
    def kraus_rank(self) -> int:
        c = choi_matrix(self)
        return int(np.sum(np.linalg.eigvalsh(c) > RANK_TOL))

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return apply(self, rho)


@dataclass(frozen=True)
class Isometry:
    matrix: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.matrix, dtype=complex)
        if v.ndim != 2 or v.shape[0] < v.shape[1]:
            raise ValueError(f"isometry must be d2 x d1 with d1 <= d2, got {v.shape}")
        err = np.max(np.abs(v.conj().T @ v - np.eye(v.shape[1])))
        if err > 1e-10:
            raise ValueError(f"V^dag V deviates from identity by {err:.2e}")
        object.__setattr__(self, "matrix", v)

    @property
    def d_in(self) -> int:
        return self.matrix.shape[1]

    @property
    def d_out(self) -> int:
        return self.matrix.shape[0]

    def channel(self) -> QuantumChannel:
        return QuantumChannel((self.matrix,), self.d_in, self.d_out)


def choi_matrix(ch: QuantumChannel) -> np.ndarray:
    vs = np.stack([vec_flatten(k) for k in ch.kraus], axis=1)
    return vs @ vs.conj().T


def choi_from_kraus(ch: QuantumChannel, out_label: str = "B", in_label: str = "A") -> LabeledOperator:
    """Choi operator on ``(out_label, in_label)``."""
    return LabeledOperator(choi_matrix(ch), ((out_label, ch.d_out), (in_label, ch.d_in)))


def kraus_from_choi(c: LabeledOperator | np.ndarray, d_in: int | None = None,
                    d_out: int | None = None) -> QuantumChannel:
    """Orthogonal Kraus operators from the eigendecomposition of a Choi operator."""
    if isinstance(c, LabeledOperator):
        (_, d_out), (_, d_in) = c.rows
        mat = c.matrix
    else:
        mat = np.asarray(c, dtype=complex)
        if d_in is None or d_out is None:
            raise ValueError("dimensions are required for a bare Choi matrix")
    mat = (mat + mat.conj().T) / 2
    w, u = np.linalg.eigh(mat)
    if w[0] < -PSD_TOL:
        raise InvalidChoiError(f"Choi operator has negative eigenvalue {w[0]:.2e}")
    keep = np.nonzero(w > RANK_TOL)[0][::-1]
    kraus = [np.sqrt(w[i]) * u[:, i].reshape(d_out, d_in) for i in keep]
    return QuantumChannel(tuple(kraus), d_in, d_out)


def stinespring_dilate(ch: QuantumChannel, r: int | None = None) -> Isometry:
    """V = sum_i |i>_anc (x) E_i; zero blocks pad the ancilla up to ``r``."""
    ks = list(ch.kraus)
    r = len(ks) if r is None else r
    if len(ks) > r:
        ks = list(kraus_from_choi(choi_from_kraus(ch)).kraus)
        if len(ks) > r:
            raise ValueError(f"Kraus rank {len(ks)} exceeds ancilla dimension {r}")
    ks += [np.zeros((ch.d_out, ch.d_in), dtype=complex)] * (r - len(ks))
    return Isometry(np.concatenate(ks, axis=0))


def contract(v: Isometry | np.ndarray, anc_dim: int) -> QuantumChannel:
    """Trace out the leading ``anc_dim`` factor of the isometry's output."""
    mat = v.matrix if isinstance(v, Isometry) else np.asarray(v, dtype=complex)
    d2, d1 = mat.shape
    if d2 % anc_dim:
        raise ValueError(f"output dimension {d2} not divisible by ancilla dimension {anc_dim}")
    blocks = mat.reshape(anc_dim, d2 // anc_dim, d1)
    return QuantumChannel(tuple(blocks), d1, d2 // anc_dim)


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar unitary from a Ginibre matrix by QR with phase-fixed R diagonal."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def haar_unitaries(d: int, count: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((count, d, d)) + 1j * rng.standard_normal((count, d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=1, axis2=2)
    return q * (diag / np.abs(diag))[:, None, :]


def random_isometry(d1: int, d2: int, rng: np.random.Generator) -> Isometry:
    return Isometry(haar_unitary(d2, rng)[:, :d1])


def random_channel(d1: int, d2: int, r: int, rng: np.random.Generator) -> QuantumChannel:
    return contract(random_isometry(d1, r * d2, rng), r)


def random_state(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return z / np.linalg.norm(z)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    g = rng.standard_normal((d, rank or d)) + 1j * rng.standard_normal((d, rank or d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def sample_random_dilation(ch: QuantumChannel, r: int, rng: np.random.Generator,
                           base: Isometry | None = None) -> Isometry:
    """Draw from the Haar distribution on rank-``r`` dilations of ``ch``."""
    v0 = stinespring_dilate(ch, r) if base is None else base
    u = haar_unitary(r, rng)
    d2 = ch.d_out
    m = v0.matrix.reshape(r, d2, ch.d_in)
    return Isometry(np.einsum("ab,bjk->ajk", u, m).reshape(r * d2, ch.d_in))


def apply(ch: QuantumChannel, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    return sum(k @ rho @ k.conj().T for k in ch.kraus)


def compose(second: QuantumChannel, first: QuantumChannel) -> QuantumChannel:
    if first.d_out != second.d_in:
        raise ValueError("dimension mismatch in channel composition")
    ks = tuple(b @ a for b in second.kraus for a in first.kraus)
    return QuantumChannel(ks, first.d_in, second.d_out)


def apply_local(ch: QuantumChannel, op: LabeledOperator, label: str,
                out_label: str | None = None) -> LabeledOperator:
    """Apply ``ch`` to system ``label`` of a square labeled operator."""
    out_label = label if out_label is None else out_label
    names = op.labels
    k = names.index(label)
    if op.rows[k][1] != ch.d_in:
        raise ValueError(f"system {label!r} has dimension {op.rows[k][1]}, channel expects {ch.d_in}")
    t = op.tensor()
    nsys = len(names)
    res = 0
    for e in ch.kraus:
        a = np.moveaxis(np.tensordot(e, t, axes=([1], [k])), 0, k)
        a = np.moveaxis(np.tensordot(a, e.conj(), axes=([nsys + k], [1])), -1, nsys + k)
        res = res + a
    systems = list(op.rows)
    systems[k] = (out_label, ch.d_out)
    dim = int(np.prod([d for _, d in systems]))
    return LabeledOperator(np.asarray(res).reshape(dim, dim), tuple(systems))


def dilation_intertwiner(v1: Isometry, v2: Isometry, r: int) -> tuple[np.ndarray, float]:
    """Least-squares U with V2 = (U (x) I) V1; returns (U, residual)."""
    d2 = v1.d_out // r
    a = v1.matrix.reshape(r, d2 * v1.d_in)
    b = v2.matrix.reshape(r, d2 * v2.d_in)
    # Solve U a = b  <=>  a^T U^T = b^T.
    ut, *_ = np.linalg.lstsq(a.T, b.T, rcond=None)
    u = ut.T
    return u, float(np.linalg.norm(u @ a - b))


# -- JSON ---------------------------------------------------------------------

def matrix_to_json(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(data: list) -> np.ndarray:
    a = np.asarray(data, dtype=float)
    if a.ndim != 3 or a.shape[2] != 2:
        raise ValueError("matrices are encoded as rows of [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def channel_to_dict(ch: QuantumChannel) -> dict:
    return {"d_in": ch.d_in, "d_out": ch.d_out, "kraus": [matrix_to_json(k) for k in ch.kraus]}


def channel_from_dict(data: dict) -> QuantumChannel:
    ks = tuple(matrix_from_json(k) for k in data["kraus"])
    return QuantumChannel(ks, int(data["d_in"]), int(data["d_out"]))


def dumps_channel(ch: QuantumChannel) -> str:
    return json.dumps(channel_to_dict(ch))


def loads_channel(text: str) -> QuantumChannel:
    return channel_from_dict(json.loads(text))


def identity_channel(d: int) -> QuantumChannel:
    return QuantumChannel((np.eye(d),), d, d)


def unitary_channel(u: np.ndarray) -> QuantumChannel:
    u = np.asarray(u)
    return QuantumChannel((u,), u.shape[1], u.shape[0])


def mixture(channels: Sequence[QuantumChannel], probs: Sequence[float]) -> QuantumChannel:
    ks = tuple(np.sqrt(p) * k for ch, p in zip(channels, probs) for k in ch.kraus)
    return QuantumChannel(ks, channels[0].d_in, channels[0].d_out)
