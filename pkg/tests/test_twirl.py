import numpy as np
import pytest

from qlocaltest import channels as chn
from qlocaltest.checks import twirl_checks
from qlocaltest.schur_weyl import schur_transform
from qlocaltest.tensor_core import (
    LabeledOperator,
    LabelError,
    identity,
    kron,
    partial_trace,
    permutation_matrix,
)
from qlocaltest.twirl import _conjugated, exact_twirl, mc_twirl


def random_op(rng, rows, hermitian=False):
    dim = int(np.prod([d for _, d in rows]))
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    if hermitian:
        g = g @ g.conj().T
    return LabeledOperator(g, rows)


def test_single_copy_is_partial_trace(rng):
    x = random_op(rng, [("X", 3), ("R1", 2)])
    out = exact_twirl(x, ["R1"], 2)
    expect = kron(partial_trace(x, {"R1"}), identity([("R1", 2)])).scale(0.5)
    assert np.max(np.abs(out.matrix - expect.matrix)) < 1e-12


def test_invariant_operator_fixed(rng):
    p = LabeledOperator(permutation_matrix(3, 2, (2, 0, 1)), [("R1", 2), ("R2", 2), ("R3", 2)])
    y = kron(random_op(rng, [("X", 2)]), p)
    assert np.max(np.abs(exact_twirl(y, ["R1", "R2", "R3"], 2).matrix - y.matrix)) < 1e-12


def test_anc_order_and_position(rng):
    # ancillas interleaved with other systems
    x = random_op(rng, [("R1", 2), ("A", 2), ("R2", 2)])
    out = exact_twirl(x, ["R1", "R2"], 2)
    assert out.rows == x.rows
    us = chn.haar_unitaries(2, 2, rng)
    conj, xr = _conjugated(out, ["R1", "R2"], us)
    ref = out.reorder([lab for lab, _ in xr.rows]).matrix
    assert np.max(np.abs(conj - ref)) < 1e-10


@pytest.mark.parametrize("n", [2, 3])
def test_twirl_suite(rng, n):
    for c in twirl_checks(n, 2, 2, 20000, rng):
        assert c["ok"], c


def test_projection_trace_hermiticity_psd(rng):
    anc = ["R1", "R2"]
    x = random_op(rng, [("A", 2), ("R1", 3), ("R2", 3)], hermitian=True)
    t = exact_twirl(x, anc, 3)
    assert np.max(np.abs(exact_twirl(t, anc, 3).matrix - t.matrix)) < 1e-11
    assert abs(np.trace(t.matrix) - np.trace(x.matrix)) < 1e-11 * abs(np.trace(x.matrix))
    assert np.max(np.abs(t.matrix - t.matrix.conj().T)) < 1e-10
    assert np.linalg.eigvalsh(t.matrix)[0] > -1e-9


def test_mc_identity_exact(rng):
    x = identity([("R1", 2), ("R2", 2)])
    mean, se = mc_twirl(x, ["R1", "R2"], 2, 500, rng)
    assert np.max(np.abs(mean.matrix - np.eye(4))) < 1e-12


def test_mc_stderr_scaling(rng):
    x = random_op(rng, [("A", 2), ("R1", 2), ("R2", 2)])
    _, se1 = mc_twirl(x, ["R1", "R2"], 2, 1000, rng)
    _, se4 = mc_twirl(x, ["R1", "R2"], 2, 4000, rng)
    mask = se4.real > 1e-10
    ratio = np.median(se1.real[mask] / se4.real[mask])
    assert 1.6 <= ratio <= 2.5


def test_mc_seeded(rng):
    x = random_op(rng, [("A", 2), ("R1", 2)])
    a, _ = mc_twirl(x, ["R1"], 2, 300, np.random.default_rng(3))
    b, _ = mc_twirl(x, ["R1"], 2, 300, np.random.default_rng(3))
    assert np.array_equal(a.matrix, b.matrix)


def test_layout_errors(rng):
    x = random_op(rng, [("A", 2), ("R1", 3)])
    with pytest.raises(LabelError):
        exact_twirl(x, ["R1"], 2)
    with pytest.raises(LabelError):
        exact_twirl(random_op(rng, [("R1", 2), ("R2", 2)]), ["R1", "R2"], 2, st=schur_transform(2, 3))
