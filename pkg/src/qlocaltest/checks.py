"""Self-test suites for the Schur transform and the twirl, as plain check records.

Each check is a dict ``{"name", "case", "value", "tol", "ok"}``; ``value`` is the
measured error and ``ok`` is ``value <= tol``.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from . import channels as chn
from .schur_weyl import (
    bipartite_power_decompose,
    permutation_block,
    regroup_power,
    schur_transform,
    young_representation,
)
from .tensor_core import LabeledOperator, all_permutations, permutation_matrix, partial_trace
from .twirl import _conjugated, exact_twirl, mc_twirl


def check(name: str, case, value: float, tol: float) -> dict:
    value = float(value)
    return {"name": name, "case": case, "value": value, "tol": tol, "ok": bool(value <= tol)}


def _u_power(u: np.ndarray, n: int) -> np.ndarray:
    out = u
    for _ in range(n - 1):
        out = np.kron(out, u)
    return out


def power_reconstruction_error(psi: np.ndarray, d1: int, d2: int, n: int) -> float:
    """|| psi^{(x)n} - sum_lambda |I_P> (x) |psi_lambda> || rebuilt from the returned blocks."""
    comps = bipartite_power_decompose(psi, d1, d2, n)
    sa, sb = schur_transform(n, d1), schur_transform(n, d2)
    target = regroup_power(psi, d1, d2, n).reshape(d1**n, d2**n)
    recon = np.zeros_like(target)
    for shape, comp in comps.items():
        ba, bb = sa.block(shape), sb.block(shape)
        ca = sa.columns(shape).reshape(-1, ba.dim_p, ba.dim_q)
        cb = sb.columns(shape).reshape(-1, bb.dim_p, bb.dim_q)
        recon += np.einsum("xta,ab,ytb->xy", ca, comp, cb)
    return float(np.linalg.norm(recon - target))


def schur_checks(n: int, d: int, rng: np.random.Generator, states: int = 20,
                 tol: float = 1e-10, decomp_tol: float = 1e-9) -> list[dict]:
    st = schur_transform(n, d)
    s = st.unitary
    case = [n, d]
    out = [check("unitarity", case, np.max(np.abs(s.T @ s - np.eye(d**n))), tol)]

    perm_err = 0.0
    cross_err = 0.0
    for p in all_permutations(n):
        y = s.T @ permutation_matrix(n, d, p) @ s
        expect = np.zeros_like(y)
        for b in st.blocks:
            sl = slice(b.offset, b.offset + b.size)
            expect[sl, sl] = np.kron(young_representation(b.shape)[p], np.eye(b.dim_q))
            cross_err = max(cross_err, np.max(np.abs(
                permutation_block(st, b.shape, p) - young_representation(b.shape)[p])))
        perm_err = max(perm_err, np.max(np.abs(y - expect)))
    out.append(check("permutation_blocks", case, perm_err, tol))
    out.append(check("cross_dimension_P_basis", case, cross_err, tol))

    unit_err = 0.0
    for _ in range(3):
        y = s.T @ _u_power(chn.haar_unitary(d, rng), n) @ s
        mask = np.zeros(y.shape, dtype=bool)
        for b in st.blocks:
            sl = slice(b.offset, b.offset + b.size)
            mask[sl, sl] = True
            blk = y[sl, sl].reshape(b.dim_p, b.dim_q, b.dim_p, b.dim_q)
            q = blk[0, :, 0, :]
            unit_err = max(unit_err, np.max(np.abs(blk - np.einsum("tu,ab->taub", np.eye(b.dim_p), q))))
        unit_err = max(unit_err, np.max(np.abs(y[~mask])) if (~mask).any() else 0.0)
    out.append(check("unitary_blocks", case, unit_err, tol))

    dec_err = 0.0
    for _ in range(states):
        d2 = int(rng.integers(1, 4))
        psi = chn.random_state(d * d2, rng)
        dec_err = max(dec_err, power_reconstruction_error(psi, d, d2, n))
    out.append(check("power_decomposition", case, dec_err, decomp_tol))
    return out


def twirl_checks(n: int, r: int, d_other: int, samples: int, rng: np.random.Generator,
                 z_max: float = 5.0, tol: float = 1e-10) -> list[dict]:
    anc = [f"R{j + 1}" for j in range(n)]
    rows = (("X", d_other),) + tuple((lab, r) for lab in anc)
    dim = d_other * r**n
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    x = LabeledOperator(g, rows)
    case = [n, r]
    exact = exact_twirl(x, anc, r)
    mean, se = mc_twirl(x, anc, r, samples, rng)
    diff = exact.matrix - mean.matrix
    z_re = np.abs(diff.real) / np.maximum(se.real, 1e-15)
    z_im = np.abs(diff.imag) / np.maximum(se.imag, 1e-15)
    # entries with zero spread must agree exactly
    z_re[(se.real < 1e-12) & (np.abs(diff.real) <= 1e-8)] = 0.0
    z_im[(se.imag < 1e-12) & (np.abs(diff.imag) <= 1e-8)] = 0.0
    out = [check("twirl_mc_z", case, max(z_re.max(), z_im.max()), z_max)]
    out.append(check("twirl_idempotent", case,
                      np.max(np.abs(exact_twirl(exact, anc, r).matrix - exact.matrix)), tol))
    tr_err = np.max(np.abs(partial_trace(exact, anc).matrix - partial_trace(x, anc).matrix))
    out.append(check("twirl_trace", case, tr_err, tol))
    us = chn.haar_unitaries(r, 3, rng)
    conj, xr = _conjugated(exact, anc, us)
    ref = exact.reorder([lab for lab, _ in xr.rows]).matrix
    out.append(check("twirl_invariance", case, np.max(np.abs(conj - ref)), tol))
    return out


def summarize(checks: Iterable[dict]) -> tuple[bool, list[dict]]:
    checks = list(checks)
    failing = [c for c in checks if not c["ok"]]
    return not failing, failing
