"""Compile a tester for dilations into a tester that queries the channel itself.

Input: a parallel tester ``{T_i}`` for isometries ``C^{d1} -> C^r (x) C^{d2}``
(ancilla leading). Output: operators ``T~_i`` on ``A1..An, B1..Bn`` with
``B`` of dimension ``d2`` plus a completion ``T~_BOT`` such that, for every
channel of Kraus rank at most ``r``, ``T~_i * C^{(x)n}`` equals the average of
``T_i * C_W^{(x)n}`` over Haar-random dilations ``W``.

Pipeline: :func:`symmetrize` (twirl the ancillas), :func:`project` (pair the
permutation registers of the AB and ancilla Schur decompositions and drop the
ancilla), :func:`complete` (add the BOT outcome).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from . import channels as chn
from .schur_weyl import partitions, schur_transform
from .tensor_core import LabeledOperator, LabelError, all_permutations, permutation_matrix
from .testers import (
    BOT,
    NORM_TOL,
    PSD_TOL,
    ParallelTester,
    a_labels,
    anc_labels,
    b_labels,
    choi_power,
    min_eig,
    outcome_distribution,
)
from .twirl import exact_twirl

Z_MAX = 5.0
EXACT_TOL = 1e-8


class ConstructionError(RuntimeError):
    """A property guaranteed by construction failed numerically."""


@dataclass
class CompiledTester:
    outcomes: dict[str, LabeledOperator]
    n: int
    d1: int
    d2: int
    r: int
    rho_a: np.ndarray
    rho_prime: np.ndarray | None = None
    bot: LabeledOperator | None = None
    layout_info: dict = field(default_factory=dict)

    @property
    def s(self) -> int:
        return min(self.r, self.d1 * self.d2)

    def as_tester(self) -> ParallelTester:
        if self.bot is None:
            raise ConstructionError("tester is not completed; call complete() first")
        outs = dict(self.outcomes)
        outs[BOT] = self.bot
        return ParallelTester(outs, self.n, self.d1, self.d2, self.rho_prime)

    def validate(self) -> dict:
        ops = list(self.outcomes.values()) + ([self.bot] if self.bot is not None else [])
        mins = min(min_eig(op.matrix) for op in ops)
        total = sum(op.matrix for op in ops)
        norm = np.kron(self.rho_prime, np.eye(self.d2**self.n))
        norm_err = float(np.max(np.abs(total - norm)))
        return {"min_eig": mins, "norm_error": norm_err,
                "ok": bool(mins >= -PSD_TOL and norm_err <= NORM_TOL)}


def _split_dilation_layout(op: LabeledOperator, n: int, r: int, d2: int) -> LabeledOperator:
    for j in range(n):
        op = op.split(f"B{j + 1}", [(f"anc{j + 1}", r), (f"B{j + 1}", d2)])
    return op


def _merge_dilation_layout(op: LabeledOperator, n: int) -> LabeledOperator:
    order = a_labels(n) + [lab for j in range(n) for lab in (f"anc{j + 1}", f"B{j + 1}")]
    op = op.reorder(order)
    for j in range(n):
        op = op.merge([f"anc{j + 1}", f"B{j + 1}"], f"B{j + 1}")
    return op


def symmetrize(t: ParallelTester, r: int) -> ParallelTester:
    """Twirl every outcome over ``U^{(x)n}`` on the ancillas; rho_A is unchanged."""
    n = t.n
    if t.d_b % r:
        raise LabelError(f"output dimension {t.d_b} is not a multiple of r={r}")
    d2 = t.d_b // r
    st = schur_transform(n, r)
    outs = {}
    for k, op in t.outcomes.items():
        x = _split_dilation_layout(op, n, r, d2)
        tw = exact_twirl(x, anc_labels(n), r, st)
        outs[k] = _merge_dilation_layout(tw, n)
    return ParallelTester(outs, n, t.d_a, t.d_b, t.rho_a)


def _ab_anc_matrix(op: LabeledOperator, n: int, d1: int, d2: int, r: int) -> np.ndarray:
    """Operator on (AB)_1..(AB)_n (x) anc_1..anc_n with AB_j = A_j (x) B_j."""
    x = _split_dilation_layout(op, n, r, d2)
    order = [lab for j in range(n) for lab in (f"A{j + 1}", f"B{j + 1}")] + anc_labels(n)
    return x.reorder(order).matrix


def _paired_blocks(m: np.ndarray, n: int, d1: int, d2: int, r: int):
    """Yield (shape, block info, Q_AB x Q_AB matrix tr_Q^r <<I_P| M |I_P>>)."""
    s = min(r, d1 * d2)
    st_ab = schur_transform(n, d1 * d2)
    st_r = schur_transform(n, r)
    dab, dr = (d1 * d2) ** n, r**n
    y = m.reshape(dab, dr, dab, dr)
    y = np.einsum("ia,jb,abcd,ck,dl->ijkl", st_ab.unitary.T, st_r.unitary.T, y,
                  st_ab.unitary, st_r.unitary, optimize=True)
    for shape in partitions(n, s):
        ba, br = st_ab.block(shape), st_r.block(shape)
        sa = slice(ba.offset, ba.offset + ba.size)
        sr = slice(br.offset, br.offset + br.size)
        blk = y[sa, sr, sa, sr].reshape(ba.dim_p, ba.dim_q, br.dim_p, br.dim_q,
                                        ba.dim_p, ba.dim_q, br.dim_p, br.dim_q)
        red = np.einsum("tmtkunuk->mn", blk)
        yield shape, ba, br, red


def project(tbar: ParallelTester, r: int, d1: int, d2: int, n: int) -> CompiledTester:
    """T~_i = sum_lambda I_P (x) tr_Q^r(<<I_P| T-bar_i |I_P>>) / (dim P dim Q^r)."""
    if tbar.d_a != d1 or tbar.d_b != r * d2 or tbar.n != n:
        raise LabelError("tester layout does not match (n, d1, r*d2)")
    st_ab = schur_transform(n, d1 * d2)
    dab = (d1 * d2) ** n
    ab_layout = tuple((f"AB{j + 1}", d1 * d2) for j in range(n))
    outs = {}
    for k, op in tbar.outcomes.items():
        m = _ab_anc_matrix(op, n, d1, d2, r)
        z = np.zeros((dab, dab), dtype=complex)
        for shape, ba, br, red in _paired_blocks(m, n, d1, d2, r):
            sa = slice(ba.offset, ba.offset + ba.size)
            z[sa, sa] = np.kron(np.eye(ba.dim_p), red) / (ba.dim_p * br.dim_q)
        full = st_ab.unitary @ z @ st_ab.unitary.T
        lab = LabeledOperator(full, ab_layout)
        for j in range(n):
            lab = lab.split(f"AB{j + 1}", [(f"A{j + 1}", d1), (f"B{j + 1}", d2)])
        outs[k] = lab.reorder(a_labels(n) + b_labels(n))
    info = {
        "ab_regrouping": "A_j (x) B_j -> AB_j with index a*d2 + b, systems (AB_1..AB_n)",
        "ancilla_position": "leading factor of each query output",
        "s": min(r, d1 * d2),
        "shapes": [list(p) for p in partitions(n, min(r, d1 * d2))],
    }
    return CompiledTester(outs, n, d1, d2, r, tbar.rho_a, layout_info=info)


def symmetrized_state(rho_a: np.ndarray, n: int, d: int) -> np.ndarray:
    perms = all_permutations(n)
    acc = np.zeros_like(rho_a, dtype=complex)
    for p in perms:
        pm = permutation_matrix(n, d, p)
        acc += pm @ rho_a @ pm.T
    return acc / factorial(n)


def complete(ct: CompiledTester) -> CompiledTester:
    """Add T~_BOT = rho'_A (x) I_B - sum_i T~_i; raises if it is not PSD."""
    rho_p = symmetrized_state(ct.rho_a, ct.n, ct.d1)
    norm = np.kron(rho_p, np.eye(ct.d2**ct.n))
    bot = norm - sum(op.matrix for op in ct.outcomes.values())
    bot = (bot + bot.conj().T) / 2
    lo = min_eig(bot)
    if lo < -PSD_TOL:
        raise ConstructionError(f"completion operator has eigenvalue {lo:.3e} < -{PSD_TOL:.0e}")
    layout = next(iter(ct.outcomes.values())).rows
    return CompiledTester(dict(ct.outcomes), ct.n, ct.d1, ct.d2, ct.r, ct.rho_a, rho_p,
                          LabeledOperator(bot, layout), dict(ct.layout_info))


def compile_tester(t: ParallelTester, r: int, d2: int | None = None) -> CompiledTester:
    """symmetrize, then project, then complete."""
    if t.d_b % r:
        raise LabelError(f"tester output dimension {t.d_b} is not a multiple of r={r}")
    d2 = t.d_b // r if d2 is None else d2
    if r * d2 < t.d_a:
        raise ValueError(f"need r*d2 >= d1, got r={r}, d2={d2}, d1={t.d_a}")
    tbar = symmetrize(t, r)
    return complete(project(tbar, r, t.d_a, d2, t.n))


def isometry_vec_ab_anc(v: np.ndarray, d1: int, d2: int, r: int) -> np.ndarray:
    """|V>> regrouped as a vector in (A (x) B) (x) anc."""
    return np.asarray(v).reshape(r, d2, d1).transpose(2, 1, 0).reshape(-1)


def prob_via_blocks(tbar_i: LabeledOperator, v: chn.Isometry | np.ndarray, r: int, n: int,
                    d2: int | None = None) -> float:
    """sum_lambda tr(tr_Q^r<<I_P|T-bar^T|I_P>> . tr_Q^r|V_lambda><V_lambda|) / dim Q^r_lambda."""
    from .schur_weyl import bipartite_power_decompose

    vm = v.matrix if isinstance(v, chn.Isometry) else np.asarray(v)
    d1 = vm.shape[1]
    d2 = vm.shape[0] // r if d2 is None else d2
    psi = isometry_vec_ab_anc(vm, d1, d2, r)
    comps = bipartite_power_decompose(psi, d1 * d2, r, n)
    m = _ab_anc_matrix(tbar_i.transpose(), n, d1, d2, r)
    total = 0.0
    for shape, ba, br, red in _paired_blocks(m, n, d1, d2, r):
        vl = comps.get(shape)
        if vl is None:
            continue
        total += np.trace(red @ (vl @ vl.conj().T)) / br.dim_q
    return float(np.real(total))


def dilation_choi_vectors(v0: np.ndarray, us: np.ndarray, n: int, d1: int, d2: int,
                          r: int) -> np.ndarray:
    """Batch of |W>>^{(x)n} on A1..An, B1..Bn for W = (U (x) I) V0."""
    count = us.shape[0]
    w = np.einsum("sab,bjk->sajk", us, np.asarray(v0).reshape(r, d2, d1)).reshape(count, r * d2, d1)
    w = w.transpose(0, 2, 1)  # (s, a, b)
    out = w
    for _ in range(n - 1):
        k = out.ndim - 1
        out = np.einsum(out, list(range(k + 1)), w, [0, k + 1, k + 2],
                        list(range(k + 3)))
    # axes now (s, a1, b1, a2, b2, ...) -> (s, a1..an, b1..bn)
    order = [0] + [1 + 2 * j for j in range(n)] + [2 + 2 * j for j in range(n)]
    return out.transpose(order).reshape(count, -1)


def mc_dilation_average(t: ParallelTester, ch: chn.QuantumChannel, r: int, samples: int,
                        rng: np.random.Generator, base: chn.Isometry | None = None,
                        batch: int = 2000) -> dict[str, tuple[float, float]]:
    """Monte-Carlo E_W[T_i * C_W^{(x)n}] over Haar dilations; {label: (mean, stderr)}."""
    n, d1, d2 = t.n, ch.d_in, ch.d_out
    v0 = (chn.stinespring_dilate(ch, r) if base is None else base).matrix
    labels = list(t.outcomes)
    mats = np.stack([t.outcomes[k].matrix for k in labels])
    s1 = np.zeros(len(labels))
    s2 = np.zeros(len(labels))
    done = 0
    while done < samples:
        k = min(batch, samples - done)
        us = chn.haar_unitaries(r, k, rng)
        w = dilation_choi_vectors(v0, us, n, d1, d2, r)
        # <w| T^T |w> = w^T T w*
        vals = np.einsum("sb,kba,sa->ks", w, mats, w.conj(), optimize=True).real
        s1 += vals.sum(axis=1)
        s2 += (vals**2).sum(axis=1)
        done += k
    mean = s1 / samples
    var = np.clip(s2 / samples - mean**2, 0, None) * samples / max(samples - 1, 1)
    return {lab: (float(mean[i]), float(np.sqrt(var[i] / samples))) for i, lab in enumerate(labels)}


def verify_theorem(t: ParallelTester, compiled: CompiledTester, ch: chn.QuantumChannel,
                   mc_samples: int, rng: np.random.Generator, r: int | None = None) -> dict:
    """Compare the compiled tester with Monte-Carlo dilation averages and the block formula."""
    r = compiled.r if r is None else r
    n = t.n
    validity = compiled.validate()
    exact = outcome_distribution(compiled.as_tester(), ch)
    v0 = chn.stinespring_dilate(ch, r)
    tbar = symmetrize(t, r)
    mc = mc_dilation_average(t, ch, r, mc_samples, rng, base=v0)
    cv = choi_power(v0.channel(), n).matrix
    outcomes = {}
    worst_z = 0.0
    worst_exact = 0.0
    for lab in t.outcomes:
        mean, se = mc[lab]
        diff = exact[lab] - mean
        if se < 1e-12:
            z = 0.0 if abs(diff) <= EXACT_TOL else float("inf")
        else:
            z = diff / se
        blocks = prob_via_blocks(tbar.outcomes[lab], v0, r, n, ch.d_out)
        direct = float(np.real(np.sum(tbar.outcomes[lab].matrix * cv)))
        gap = max(abs(blocks - direct), abs(exact[lab] - blocks))
        worst_z = max(worst_z, abs(z))
        worst_exact = max(worst_exact, gap)
        outcomes[lab] = {"exact": exact[lab], "mc_mean": mean, "mc_stderr": se, "z": z,
                         "blocks": blocks, "direct": direct}
    outcomes[BOT] = {"exact": exact[BOT], "mc_mean": 0.0, "mc_stderr": 0.0,
                     "z": 0.0 if abs(exact[BOT]) <= EXACT_TOL else float("inf"),
                     "blocks": None, "direct": None}
    worst_z = max(worst_z, abs(outcomes[BOT]["z"]))
    passed = worst_z <= Z_MAX and worst_exact <= EXACT_TOL and validity["ok"]
    return {
        "pass": bool(passed),
        "max_abs_z": worst_z,
        "max_exact_gap": worst_exact,
        "validity": validity,
        "outcomes": outcomes,
        "layout": {"n": n, "d1": ch.d_in, "d2": ch.d_out, "r": r, "s": min(r, ch.d_in * ch.d_out),
                   **compiled.layout_info},
        "mc_samples": mc_samples,
    }
