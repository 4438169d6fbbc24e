"""Link product and parallel testers.

A parallel tester over ``n`` queries is a family of PSD operators ``T_i`` on
systems ``A1..An, B1..Bn`` (in that order) with ``sum_i T_i = rho_A (x) I_B``.
Outcome probabilities on a channel are ``p_i = tr(T_i^T C^{(x)n})``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import channels as chn
from .tensor_core import LabeledOperator, LabelError, kron, partial_trace, partial_transpose

BOT = "BOT"
PSD_TOL = 1e-9
NORM_TOL = 1e-9
PINV_RCOND = 1e-10


def a_labels(n: int) -> list[str]:
    return [f"A{j + 1}" for j in range(n)]


def b_labels(n: int) -> list[str]:
    return [f"B{j + 1}" for j in range(n)]


def anc_labels(n: int) -> list[str]:
    return [f"anc{j + 1}" for j in range(n)]


def link_product(x: LabeledOperator, y: LabeledOperator) -> LabeledOperator:
    """X * Y = tr_shared(X^{T_shared} Y), operators extended by identity.

    Result systems: X's private systems then Y's private systems.
    """
    if not (x.is_square_layout and y.is_square_layout):
        raise LabelError("link product needs square layouts")
    dx, dy = x.dims(), y.dims()
    shared = [lab for lab in x.labels if lab in dy]
    for lab in shared:
        if dx[lab] != dy[lab]:
            raise LabelError(f"system {lab!r} has dimension {dx[lab]} vs {dy[lab]}")
    x_priv = [lab for lab in x.labels if lab not in dy]
    y_priv = [lab for lab in y.labels if lab not in dx]
    xt = x.reorder(x_priv + shared)
    yt = y.reorder(shared + y_priv)
    px = int(np.prod([dx[lab] for lab in x_priv], dtype=np.int64))
    py = int(np.prod([dy[lab] for lab in y_priv], dtype=np.int64))
    s = int(np.prod([dx[lab] for lab in shared], dtype=np.int64))
    # result[x,y;x',y'] = sum_{p,q} X[x,p;x',q] Y[p,y;q,y']
    xt4 = xt.matrix.reshape(px, s, px, s)
    yt4 = yt.matrix.reshape(s, py, s, py)
    res = np.einsum("apbq,pcqd->acbd", xt4, yt4, optimize=True).reshape(px * py, px * py)
    systems = tuple((lab, dx[lab]) for lab in x_priv) + tuple((lab, dy[lab]) for lab in y_priv)
    return LabeledOperator(res, systems)


def choi_power(ch: chn.QuantumChannel, n: int) -> LabeledOperator:
    """C^{(x)n} on ``A1..An, B1..Bn``."""
    op = None
    for j in range(n):
        c = chn.choi_from_kraus(ch, out_label=f"B{j + 1}", in_label=f"A{j + 1}")
        op = c if op is None else kron(op, c)
    return op.reorder(a_labels(n) + b_labels(n))


def is_psd(m: np.ndarray, tol: float = PSD_TOL) -> bool:
    return min_eig(m) >= -tol


def min_eig(m: np.ndarray) -> float:
    m = np.asarray(m)
    return float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])


def psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, u = np.linalg.eigh((m + m.conj().T) / 2)
    return (u * np.sqrt(np.clip(w, 0, None))) @ u.conj().T


def psd_sqrt_pinv(m: np.ndarray, rcond: float = PINV_RCOND) -> np.ndarray:
    """Pseudo-inverse of sqrt(m); eigenvalues of ``m`` below ``rcond * max`` count as zero."""
    w, u = np.linalg.eigh((m + m.conj().T) / 2)
    keep = w > rcond * max(w[-1], 0.0)
    inv = np.zeros_like(w)
    inv[keep] = 1 / np.sqrt(w[keep])
    return (u * inv) @ u.conj().T


@dataclass
class ParallelTester:
    """Outcome-labelled PSD operators on ``A1..An, B1..Bn``."""

    outcomes: dict[str, LabeledOperator]
    n: int
    d_a: int
    d_b: int
    rho_a: np.ndarray

    def __post_init__(self):
        layout = self.layout()
        self.outcomes = {str(k): v.reorder([lab for lab, _ in layout]) for k, v in self.outcomes.items()}
        for k, v in self.outcomes.items():
            if v.rows != layout:
                raise LabelError(f"outcome {k!r} has layout {v.rows}, expected {layout}")
        self.rho_a = np.asarray(self.rho_a, dtype=complex)

    def layout(self) -> tuple[tuple[str, int], ...]:
        return tuple((lab, self.d_a) for lab in a_labels(self.n)) + tuple(
            (lab, self.d_b) for lab in b_labels(self.n)
        )

    @property
    def labels(self) -> list[str]:
        return list(self.outcomes)

    def normalization(self) -> np.ndarray:
        return np.kron(self.rho_a, np.eye(self.d_b**self.n))

    def validate(self, tol: float = NORM_TOL) -> dict:
        """Return {min_eig, norm_error, trace_error, ok}."""
        mins = min(min_eig(t.matrix) for t in self.outcomes.values())
        total = sum(t.matrix for t in self.outcomes.values())
        norm_err = float(np.max(np.abs(total - self.normalization())))
        tr_err = abs(np.trace(self.rho_a) - 1)
        ok = mins >= -PSD_TOL and norm_err <= tol and tr_err <= tol
        return {"min_eig": mins, "norm_error": norm_err, "trace_error": float(tr_err), "ok": bool(ok)}


def outcome_distribution(t: ParallelTester, ch: chn.QuantumChannel) -> dict[str, float]:
    """p_i = tr(T_i^T C^{(x)n})."""
    if ch.d_in != t.d_a or ch.d_out != t.d_b:
        raise ValueError("channel dimensions do not match the tester")
    c = choi_power(ch, t.n).matrix
    return {k: float(np.real(np.sum(op.matrix * c))) for k, op in t.outcomes.items()}


def realize(t: ParallelTester) -> tuple[LabeledOperator, dict[str, LabeledOperator]]:
    """Physical realization: input pure state on ``R1..Rn, A1..An`` and POVM on ``R1..Rn, B1..Bn``.

    The channel acts on the A systems; R is a reference copy of A.
    """
    n, da, db = t.n, t.d_a, t.d_b
    dim_a = da**n
    s = psd_sqrt(t.rho_a).T
    ket = np.kron(s, np.eye(dim_a)) @ np.eye(dim_a).reshape(-1)
    refs = [f"R{j + 1}" for j in range(n)]
    state = LabeledOperator(np.outer(ket, ket.conj()),
                            tuple((lab, da) for lab in refs + a_labels(n)))
    sinv = np.kron(psd_sqrt_pinv(t.rho_a).T, np.eye(db**n))
    povm_systems = tuple((lab, da) for lab in refs) + tuple((lab, db) for lab in b_labels(n))
    povm = {k: LabeledOperator(sinv @ op.matrix.T @ sinv, povm_systems) for k, op in t.outcomes.items()}
    return state, povm


def simulate(state: LabeledOperator, povm: dict[str, LabeledOperator], ch: chn.QuantumChannel,
             n: int) -> dict[str, float]:
    """Send the A systems of ``state`` through ``ch`` and measure ``povm``."""
    rho = state
    for j in range(n):
        rho = chn.apply_local(ch, rho, f"A{j + 1}", f"B{j + 1}")
    out = {}
    for k, e in povm.items():
        r = rho.reorder(e.labels)
        out[k] = float(np.real(np.trace(e.matrix @ r.matrix)))
    return out


def from_algorithm(rho: LabeledOperator, povm: dict[str, LabeledOperator], n: int) -> ParallelTester:
    """T_i = E_i^T * rho for an input state on ``A1..An`` + ancillas and a POVM on ``B1..Bn`` + ancillas."""
    a = a_labels(n)
    da = rho.dims()[a[0]]
    db = next(iter(povm.values())).dims()["B1"]
    outcomes = {}
    for k, e in povm.items():
        outcomes[k] = link_product(partial_transpose(e, e.labels), rho)
    anc = [lab for lab in rho.labels if lab not in a]
    rho_a = partial_trace(rho, anc).reorder(a).matrix
    return ParallelTester(outcomes, n, da, db, rho_a)


def random_povm(dim: int, k: int, rng: np.random.Generator) -> list[np.ndarray]:
    gs = []
    for _ in range(k):
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        gs.append(g @ g.conj().T)
    total = sum(gs)
    w, u = np.linalg.eigh(total)
    inv_sqrt = (u / np.sqrt(w)) @ u.conj().T
    return [inv_sqrt @ g @ inv_sqrt for g in gs]


def random_tester(n: int, d_a: int, d_b: int, k_outcomes: int, rng: np.random.Generator,
                  rho_rank: int | None = None) -> ParallelTester:
    dim_a = d_a**n
    rho = chn.random_density(dim_a, rng, rank=rho_rank)
    norm = np.kron(rho, np.eye(d_b**n))
    s = psd_sqrt(norm)
    povm = random_povm(dim_a * d_b**n, k_outcomes, rng)
    layout = tuple((lab, d_a) for lab in a_labels(n)) + tuple((lab, d_b) for lab in b_labels(n))
    outcomes = {str(i): LabeledOperator(s @ m @ s, layout) for i, m in enumerate(povm)}
    return ParallelTester(outcomes, n, d_a, d_b, rho)


def trivial_tester(n: int, d_a: int, d_b: int, rho_a: np.ndarray | None = None) -> ParallelTester:
    rho = np.eye(d_a**n) / d_a**n if rho_a is None else rho_a
    layout = tuple((lab, d_a) for lab in a_labels(n)) + tuple((lab, d_b) for lab in b_labels(n))
    return ParallelTester({"0": LabeledOperator(np.kron(rho, np.eye(d_b**n)), layout)}, n, d_a, d_b, rho)


# -- JSON ---------------------------------------------------------------------

def tester_to_dict(t: ParallelTester) -> dict:
    return {
        "n": t.n,
        "d_A": t.d_a,
        "d_B": t.d_b,
        "systems": [[lab, d] for lab, d in t.layout()],
        "rho_A": chn.matrix_to_json(t.rho_a),
        "outcomes": {k: chn.matrix_to_json(v.matrix) for k, v in t.outcomes.items()},
    }


def tester_from_dict(data: dict) -> ParallelTester:
    systems = tuple((lab, int(d)) for lab, d in data["systems"])
    outcomes = {k: LabeledOperator(chn.matrix_from_json(m), systems) for k, m in data["outcomes"].items()}
    return ParallelTester(outcomes, int(data["n"]), int(data["d_A"]), int(data["d_B"]),
                          chn.matrix_from_json(data["rho_A"]))


def dumps_tester(t: ParallelTester) -> str:
    return json.dumps(tester_to_dict(t))


def loads_tester(text: str) -> ParallelTester:
    return tester_from_dict(json.loads(text))
