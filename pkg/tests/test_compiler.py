import numpy as np
import pytest

from qlocaltest import channels as chn
from qlocaltest import compiler as cp
from qlocaltest import testers as ts
from qlocaltest.tensor_core import LabeledOperator, kron, identity, partial_trace, permutation_matrix


def anc_free_tester(rng, n, d1, d2, r, k):
    """T_i = S_i (x) I_anc, a tester for isometries into C^r (x) C^d2 that ignores the ancilla."""
    base = ts.random_tester(n, d1, d2, k, rng)
    outs = {}
    for lab, op in base.outcomes.items():
        x = kron(op, identity([(f"anc{j + 1}", r) for j in range(n)]))
        x = cp._merge_dilation_layout(x, n)
        outs[lab] = x
    return base, ts.ParallelTester(outs, n, d1, r * d2, base.rho_a)


def test_symmetrize_fixed_point(rng):
    _, t = anc_free_tester(rng, 2, 2, 2, 2, 3)
    tbar = cp.symmetrize(t, 2)
    for k in t.outcomes:
        assert np.max(np.abs(tbar.outcomes[k].matrix - t.outcomes[k].matrix)) < 1e-12


def test_symmetrize_keeps_normalization(rng):
    for n in (1, 2):
        t = ts.random_tester(n, 2, 4, 3, rng)
        tbar = cp.symmetrize(t, 2)
        assert np.array_equal(tbar.rho_a, t.rho_a)
        assert tbar.validate()["ok"]


def test_symmetrized_tester_matches_redilation_average(rng):
    t = ts.random_tester(1, 2, 4, 3, rng)
    ch = chn.random_channel(2, 2, 2, rng)
    v0 = chn.stinespring_dilate(ch, 2)
    exact = ts.outcome_distribution(cp.symmetrize(t, 2), v0.channel())
    mc = cp.mc_dilation_average(t, ch, 2, 5000, rng, base=v0)
    for k, (mean, se) in mc.items():
        assert abs(exact[k] - mean) <= 5 * se


def test_project_single_copy_is_reduced_trace(rng):
    t = ts.random_tester(1, 2, 6, 2, rng)
    tbar = cp.symmetrize(t, 3)
    ct = cp.project(tbar, 3, 2, 2, 1)
    for k, op in tbar.outcomes.items():
        x = cp._split_dilation_layout(op, 1, 3, 2)
        expect = partial_trace(x, {"anc1"}).reorder(["A1", "B1"]).matrix / 3
        assert np.max(np.abs(ct.outcomes[k].matrix - expect)) < 1e-12


def test_project_output_psd(rng):
    t = ts.random_tester(2, 2, 4, 3, rng)
    ct = cp.project(cp.symmetrize(t, 2), 2, 2, 2, 2)
    for op in ct.outcomes.values():
        m = op.matrix
        assert np.max(np.abs(m - m.conj().T)) < 1e-12
        assert ts.min_eig(m) > -1e-9


def test_complete_symmetric_state_unchanged(rng):
    rho = chn.random_density(2, rng)
    rho2 = np.kron(rho, rho)
    assert np.allclose(cp.symmetrized_state(rho2, 2, 2), rho2)
    sigma = chn.random_density(4, rng)
    sym = cp.symmetrized_state(sigma, 2, 2)
    swap = permutation_matrix(2, 2, (1, 0))
    assert np.allclose(swap @ sym @ swap, sym)


def test_bot_zero_without_ancilla_dependence(rng):
    _, t = anc_free_tester(rng, 1, 2, 2, 2, 3)
    ct = cp.compile_tester(t, 2)
    assert np.max(np.abs(ct.bot.matrix)) < 1e-12
    p = ts.outcome_distribution(ct.as_tester(), chn.random_channel(2, 2, 2, rng))
    assert abs(p[ts.BOT]) < 1e-12


@pytest.mark.parametrize("n,d1,d2,r", [(1, 2, 1, 2), (1, 2, 2, 2), (2, 2, 2, 2), (1, 3, 2, 2), (2, 2, 1, 2)])
def test_verify_theorem_passes(rng, n, d1, d2, r):
    t = ts.random_tester(n, d1, r * d2, 3, rng)
    ch = chn.random_channel(d1, d2, r, rng)
    ct = cp.compile_tester(t, r, d2)
    rep = cp.verify_theorem(t, ct, ch, 10000, rng)
    assert rep["pass"], rep
    probs = [o["exact"] for o in rep["outcomes"].values()]
    assert abs(sum(probs) - 1) < 1e-9 and min(probs) > -1e-9
    assert rep["outcomes"][ts.BOT]["exact"] >= -1e-9
    assert rep["layout"]["s"] == min(r, d1 * d2)


def test_verify_identity_channel(rng):
    t = ts.random_tester(1, 2, 4, 4, rng)
    rep = cp.verify_theorem(t, cp.compile_tester(t, 2), chn.identity_channel(2), 10000, rng)
    assert rep["pass"]


def test_rank_above_d1d2(rng):
    # r > d1 d2: partitions with more than s rows are skipped
    t = ts.random_tester(2, 1, 3, 2, rng)
    ch = chn.random_channel(1, 1, 1, rng)
    ct = cp.compile_tester(t, 3, 1)
    assert ct.s == 1
    assert cp.verify_theorem(t, ct, ch, 5000, rng)["pass"]


def test_negative_control_fails(rng):
    t = ts.random_tester(1, 2, 4, 3, rng)
    ch = chn.random_channel(2, 2, 2, rng)
    ct = cp.compile_tester(t, 2)
    bad = dict(ct.outcomes)
    m = bad["0"].matrix.copy()
    m[0, 0] += 1e-3
    bad["0"] = LabeledOperator(m, bad["0"].rows)
    corrupted = cp.CompiledTester(bad, ct.n, ct.d1, ct.d2, ct.r, ct.rho_a, ct.rho_prime, ct.bot, ct.layout_info)
    rep = cp.verify_theorem(t, corrupted, ch, 10000, rng)
    assert not rep["pass"]
    assert not rep["validity"]["ok"]


def test_prob_via_blocks_matches_direct(rng):
    for n, r in [(1, 2), (2, 2), (2, 3)]:
        t = ts.random_tester(n, 2, 2 * r, 2, rng)
        tbar = cp.symmetrize(t, r)
        v = chn.random_isometry(2, 2 * r, rng)
        direct = ts.outcome_distribution(tbar, v.channel())
        for k, op in tbar.outcomes.items():
            blocks = cp.prob_via_blocks(op, v, r, n, 2)
            assert abs(blocks - direct[k]) < 1e-8
            assert -1e-9 <= blocks <= 1 + 1e-9


def test_mc_independent_of_base_dilation(rng):
    t = ts.random_tester(1, 2, 4, 3, rng)
    ch = chn.random_channel(2, 2, 2, rng)
    a = cp.mc_dilation_average(t, ch, 2, 5000, rng)
    other = chn.sample_random_dilation(ch, 2, rng)
    b = cp.mc_dilation_average(t, ch, 2, 5000, rng, base=other)
    for k in a:
        assert abs(a[k][0] - b[k][0]) <= 5 * np.hypot(a[k][1], b[k][1])


def test_sum_below_symmetrized_normalization(rng):
    t = ts.random_tester(2, 2, 4, 3, rng)
    ct = cp.compile_tester(t, 2)
    total = sum(op.matrix for op in ct.outcomes.values())
    gap = np.kron(ct.rho_prime, np.eye(4)) - total
    assert ts.min_eig(gap) >= -1e-9
    assert ct.validate()["ok"]


def test_r1_single_query_is_identity(rng):
    t = ts.random_tester(1, 2, 3, 3, rng)
    ct = cp.compile_tester(t, 1)
    for k, op in t.outcomes.items():
        assert np.max(np.abs(ct.outcomes[k].matrix - op.matrix)) < 1e-12
    assert np.max(np.abs(ct.bot.matrix)) < 1e-12


def test_r1_two_queries_same_probabilities(rng):
    t = ts.random_tester(2, 2, 2, 3, rng)
    ct = cp.compile_tester(t, 1)
    for _ in range(3):
        u = chn.unitary_channel(chn.haar_unitary(2, rng))
        p, q = ts.outcome_distribution(t, u), ts.outcome_distribution(ct.as_tester(), u)
        assert all(abs(p[k] - q[k]) < 1e-10 for k in p)
        assert abs(q[ts.BOT]) < 1e-10


def test_precondition_rd2_ge_d1(rng):
    t = ts.random_tester(1, 3, 2, 2, rng)
    with pytest.raises(ValueError):
        cp.compile_tester(t, 2, 1)


def test_layout_recorded(rng):
    ct = cp.compile_tester(ts.random_tester(2, 2, 4, 2, rng), 2)
    assert "ab_regrouping" in ct.layout_info and ct.layout_info["s"] == 2
    assert ct.as_tester().labels[-1] == ts.BOT
