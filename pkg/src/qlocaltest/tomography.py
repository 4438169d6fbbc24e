"""Isometry-channel tomography with a simulated pure-state tomography oracle,
and the reduction from general channels through random dilations.

The pure-state oracle returns ``phi sqrt(1 - eps) |v> + sqrt(eps) |w>`` with a
uniform phase ``phi``, ``w`` Haar-random orthogonal to ``v`` and
``eps = eps_max * Uniform[0, 1]`` where ``eps_max = c_copies * d / N`` for ``N``
copies. The rare tail event ``eps > eps_max`` is not modelled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import channels as chn
from . import metrics as mt

# Calibrated once by demos/calibrate_tomography.py (see README).
C_COPIES = 1.0
C_TOTAL = 16.0


class DegeneratePhaseError(RuntimeError):
    """Phase alignment could not determine a column phase."""


@dataclass
class StateTomoModel:
    copies_per_state: int
    c_copies: float = C_COPIES
    noiseless: bool = False

    def eps_max(self, d: int) -> float:
        if self.noiseless:
            return 0.0
        return float(min(1.0, max(0.0, self.c_copies * d / max(self.copies_per_state, 1))))


@dataclass
class IsometryEstimate:
    matrix: np.ndarray
    queries_used: int
    phase_matrix: np.ndarray | None = None
    dft: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def channel(self) -> chn.QuantumChannel:
        return chn.QuantumChannel((self.matrix,), self.matrix.shape[1], self.matrix.shape[0])


class IsometryOracle:
    """Black-box access to V: each query returns one copy of ``V|j>``; queries are counted."""

    def __init__(self, v: np.ndarray, pre: np.ndarray | None = None):
        self._v = np.asarray(v, dtype=complex)
        self._pre = None if pre is None else np.asarray(pre, dtype=complex)
        self.queries = 0

    @property
    def d_in(self) -> int:
        return self._v.shape[1]

    @property
    def d_out(self) -> int:
        return self._v.shape[0]

    def compose_input(self, u: np.ndarray) -> "IsometryOracle":
        """Oracle for ``V U`` sharing this oracle's query counter."""
        child = IsometryOracle(self._v, u if self._pre is None else self._pre @ u)
        child._parent = self
        return child

    def column_copies(self, j: int, copies: int) -> np.ndarray:
        self.queries += copies
        parent = getattr(self, "_parent", None)
        if parent is not None:
            parent.queries += copies
        col = np.zeros(self.d_in, dtype=complex)
        col[j] = 1.0
        if self._pre is not None:
            col = self._pre @ col
        return self._v @ col


def pure_state_oracle(v: np.ndarray, model: StateTomoModel, rng: np.random.Generator) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    if abs(np.linalg.norm(v) - 1) > 1e-9:
        raise ValueError("input must be a unit vector")
    d = v.size
    phase = np.exp(2j * np.pi * rng.random())
    eps = model.eps_max(d) * rng.random()
    if d == 1 or eps == 0.0:
        return phase * v
    w = chn.random_state(d, rng)
    w = w - (v.conj() @ w) * v
    w /= np.linalg.norm(w)
    return phase * np.sqrt(1 - eps) * v + np.sqrt(eps) * w


def snap_to_isometry(m: np.ndarray) -> np.ndarray:
    """Nearest isometry in operator norm: U_2 U_1 from the SVD U_2 diag(s) U_1."""
    u2, _, u1 = np.linalg.svd(m, full_matrices=False)
    return u2 @ u1


def weak_isometry_tomo(oracle: IsometryOracle, model: StateTomoModel,
                       rng: np.random.Generator) -> IsometryEstimate:
    """Estimate V up to column phases from per-column pure-state tomography."""
    d1, d2 = oracle.d_in, oracle.d_out
    cols = []
    for j in range(d1):
        v = oracle.column_copies(j, model.copies_per_state)
        cols.append(pure_state_oracle(v, model, rng))
    vt = np.stack(cols, axis=1)
    vh = snap_to_isometry(vt)
    return IsometryEstimate(vh, d1 * model.copies_per_state,
                            meta={"raw": vt, "singular_values": np.linalg.svd(vt, compute_uv=False)})


def dft(d: int) -> np.ndarray:
    k = np.arange(d)
    return np.exp(2j * np.pi * np.outer(k, k) / d) / np.sqrt(d)


def _lower_median(x: np.ndarray) -> float:
    s = np.sort(np.asarray(x))
    return float(s[(len(s) - 1) // 2])


def phase_align(v1: np.ndarray, v2: np.ndarray, f: np.ndarray | None = None) -> IsometryEstimate:
    """Fix the relative column phases of ``v2`` (estimate of V F) using ``v1`` (estimate of V)."""
    v1, v2 = np.asarray(v1), np.asarray(v2)
    d1 = v1.shape[1]
    f = dft(d1) if f is None else f
    phi3 = (v1.conj().T @ v2) / f
    keep = np.abs(phi3[:, 0]) >= 1 / (4 * np.sqrt(d1))
    if not keep.any():
        raise DegeneratePhaseError("no usable reference row for phase alignment")
    phases = np.empty(d1, dtype=complex)
    for j in range(d1):
        ratios = phi3[keep, j] / phi3[keep, 0]
        z = _lower_median(ratios.real) + 1j * _lower_median(ratios.imag)
        if abs(z) < 1e-12:
            raise DegeneratePhaseError(f"column {j}: median ratio vanishes")
        phases[j] = z / abs(z)
    phi = np.diag(phases)
    out = v2 @ phi.conj().T @ f.conj().T
    return IsometryEstimate(out, 0, phase_matrix=phi, dft=f, meta={"phi3": phi3})


def total_queries(d1: int, d2: int, eps: float, c_total: float = C_TOTAL) -> int:
    return int(np.ceil(c_total * d1 * d2 / eps**2))


def isometry_tomography(oracle: IsometryOracle, eps: float | None = None,
                        rng: np.random.Generator | None = None, *, queries: int | None = None,
                        c_copies: float = C_COPIES, c_total: float = C_TOTAL,
                        noiseless: bool = False) -> IsometryEstimate:
    """Two parallel weak tomography runs (on V and on V F) followed by phase alignment.

    The query budget is ``queries`` if given, else ``c_total d1 d2 / eps^2``;
    it is split evenly over the ``2 d1`` column estimations.
    """
    rng = np.random.default_rng() if rng is None else rng
    d1, d2 = oracle.d_in, oracle.d_out
    if queries is None:
        if eps is None:
            raise ValueError("give either eps or queries")
        queries = total_queries(d1, d2, eps, c_total)
    per_column = max(1, queries // (2 * d1))
    model = StateTomoModel(per_column, c_copies, noiseless)
    f = dft(d1)
    est1 = weak_isometry_tomo(oracle, model, rng)
    est2 = weak_isometry_tomo(oracle.compose_input(f), model, rng)
    aligned = phase_align(est1.matrix, est2.matrix, f)
    return IsometryEstimate(aligned.matrix, est1.queries_used + est2.queries_used,
                            aligned.phase_matrix, f,
                            meta={"eps_max": model.eps_max(d2), "copies_per_column": per_column,
                                  "weak": (est1.matrix, est2.matrix)})


@dataclass
class ChannelTomographyResult:
    estimate: chn.QuantumChannel
    dilation: chn.Isometry
    dilation_estimate: IsometryEstimate
    queries_used: int


def channel_tomography(ch: chn.QuantumChannel, r: int, eps: float | None,
                       rng: np.random.Generator, *, queries: int | None = None,
                       c_copies: float = C_COPIES, c_total: float = C_TOTAL,
                       noiseless: bool = False) -> ChannelTomographyResult:
    """Tomograph a Haar-random dilation of ``ch`` and contract the estimate."""
    w = chn.sample_random_dilation(ch, r, rng)
    oracle = IsometryOracle(w.matrix)
    if queries is None and eps is not None:
        queries = total_queries(ch.d_in, r * ch.d_out, eps, c_total)
    est = isometry_tomography(oracle, eps, rng, queries=queries, c_copies=c_copies,
                              c_total=c_total, noiseless=noiseless)
    return ChannelTomographyResult(chn.contract(est.matrix, r), w, est, est.queries_used)


def contract_estimate(w_est: np.ndarray, r: int, mode: str = "choi",
                      truth: np.ndarray | None = None) -> dict:
    """Reduction arithmetic for estimates of unitary dilations or dilated states.

    ``mode="choi"``: contract the estimated unitary/isometry; with ``truth`` also
    report the normalized-Choi trace distance and its bound ``sqrt(1 - F_ent)``.
    ``mode="state"``: ``w_est`` is a state vector on ``anc (x) out``; returns its
    reduced state on ``out``.
    """
    w_est = np.asarray(w_est, dtype=complex)
    if mode == "state":
        psi = w_est.reshape(r, -1)
        rho = psi.T @ psi.conj()
        return {"state": rho}
    if mode != "choi":
        raise ValueError(f"unknown mode {mode!r}")
    est = chn.contract(w_est, r)
    out = {"channel": est, "choi": chn.choi_matrix(est) / est.d_in}
    if truth is not None:
        truth = np.asarray(truth, dtype=complex)
        f_ent = mt.entanglement_fidelity(truth, w_est)
        true_ch = chn.contract(truth, r)
        out.update({
            "f_ent": f_ent,
            "bound": float(np.sqrt(max(0.0, 1 - f_ent))),
            "choi_distance": mt.choi_distance(est, true_ch),
            "dilation_choi_distance": mt.choi_distance(chn.unitary_channel(w_est), chn.unitary_channel(truth)),
        })
    return out
