"""Haar twirl ``E_U[U^{(x)n} X U^{dag (x)n}]`` over a set of ancilla systems."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .channels import haar_unitaries
from .schur_weyl import SchurTransform, schur_transform
from .tensor_core import LabeledOperator, LabelError


def _split_anc(x: LabeledOperator, anc_labels: Sequence[str], r: int):
    anc_labels = list(anc_labels)
    dims = x.dims()
    for lab in anc_labels:
        if dims.get(lab) != r:
            raise LabelError(f"ancilla {lab!r} must have dimension {r}, got {dims.get(lab)}")
    others = [lab for lab in x.labels if lab not in anc_labels]
    xr = x.reorder(others + anc_labels)
    d_o = xr.matrix.shape[0] // r ** len(anc_labels)
    return xr, others, d_o


def exact_twirl(x: LabeledOperator, anc_labels: Sequence[str], r: int,
                st: SchurTransform | None = None) -> LabeledOperator:
    """Exact twirl through Schur's lemma on the ancilla Schur blocks.

    Cross blocks between different shapes vanish and every Q factor is
    replaced by its normalized partial trace times the identity.
    """
    n = len(anc_labels)
    st = schur_transform(n, r) if st is None else st
    if st.n != n or st.d != r:
        raise LabelError(f"Schur transform is for (n={st.n}, d={st.d}), need ({n}, {r})")
    xr, others, d_o = _split_anc(x, anc_labels, r)
    da = r**n
    s = st.unitary
    y = xr.matrix.reshape(d_o, da, d_o, da)
    y = np.einsum("ia,xayb,bj->xiyj", s.T, y, s, optimize=True)
    out = np.zeros_like(y)
    for b in st.blocks:
        sl = slice(b.offset, b.offset + b.size)
        blk = y[:, sl, :, sl].reshape(d_o, b.dim_p, b.dim_q, d_o, b.dim_p, b.dim_q)
        red = np.einsum("xtmyum->xtyu", blk) / b.dim_q
        out[:, sl, :, sl] = np.einsum("xtyu,mk->xtmyuk", red, np.eye(b.dim_q)).reshape(
            d_o, b.size, d_o, b.size
        )
    out = np.einsum("ai,xiyj,jb->xayb", s, out, s.T, optimize=True)
    res = LabeledOperator(out.reshape(xr.matrix.shape), xr.rows)
    return res.reorder(x.labels)


def mc_twirl(x: LabeledOperator, anc_labels: Sequence[str], r: int, samples: int,
             rng: np.random.Generator, batch: int = 2000) -> tuple[LabeledOperator, np.ndarray]:
    """Monte-Carlo twirl: (mean, entrywise complex standard error)."""
    total = None
    total_sq_re = None
    total_sq_im = None
    done = 0
    xr = None
    while done < samples:
        k = min(batch, samples - done)
        us = haar_unitaries(r, k, rng)
        mats, xr = _conjugated(x, anc_labels, us)
        s1 = mats.sum(axis=0)
        s2r = (mats.real**2).sum(axis=0)
        s2i = (mats.imag**2).sum(axis=0)
        total = s1 if total is None else total + s1
        total_sq_re = s2r if total_sq_re is None else total_sq_re + s2r
        total_sq_im = s2i if total_sq_im is None else total_sq_im + s2i
        done += k
    mean = total / samples
    var_re = np.clip(total_sq_re / samples - mean.real**2, 0, None) * samples / max(samples - 1, 1)
    var_im = np.clip(total_sq_im / samples - mean.imag**2, 0, None) * samples / max(samples - 1, 1)
    stderr = np.sqrt(var_re / samples) + 1j * np.sqrt(var_im / samples)
    mean_op = LabeledOperator(mean, xr.rows).reorder(x.labels)
    stderr_op = LabeledOperator(stderr, xr.rows).reorder(x.labels)
    return mean_op, stderr_op.matrix


def _conjugated(x: LabeledOperator, anc_labels: Sequence[str], us: np.ndarray):
    n = len(anc_labels)
    r = us.shape[-1]
    xr, _, d_o = _split_anc(x, anc_labels, r)
    count = us.shape[0]
    # U^{(x)n} as a batch of r^n x r^n matrices
    big = us
    for _ in range(n - 1):
        big = np.einsum("sab,scd->sacbd", big, us).reshape(count, big.shape[1] * r, big.shape[2] * r)
    da = r**n
    m = xr.matrix.reshape(d_o, da, d_o, da)
    res = np.einsum("sab,xbyc,sdc->sxayd", big, m, big.conj(), optimize=True)
    return res.reshape(count, d_o * da, d_o * da), xr
