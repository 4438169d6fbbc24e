import numpy as np
import pytest

from qlocaltest import channels as chn
from qlocaltest import metrics as mt
from qlocaltest import tomography as tm


def diag_phases(d, rng):
    return np.diag(np.exp(2j * np.pi * rng.random(d)))


# pure-state oracle

def test_oracle_noiseless_is_phase_only(rng):
    v = chn.random_state(5, rng)
    out = tm.pure_state_oracle(v, tm.StateTomoModel(10, noiseless=True), rng)
    assert abs(abs(v.conj() @ out) - 1) < 1e-14
    assert np.allclose(out / (v.conj() @ out), v, atol=1e-14)


def test_oracle_overlap_matches_eps(rng):
    model = tm.StateTomoModel(4, c_copies=1.0)
    for _ in range(50):
        v = chn.random_state(3, rng)
        state = rng.bit_generator.state
        out = tm.pure_state_oracle(v, model, rng)
        # replay the two draws taken before w to recover eps
        rng2 = np.random.default_rng()
        rng2.bit_generator.state = state
        rng2.random()
        eps = model.eps_max(3) * rng2.random()
        assert abs(np.linalg.norm(out) - 1) < 1e-12
        assert abs(abs(v.conj() @ out) ** 2 - (1 - eps)) < 1e-12


def test_oracle_mean_eps(rng):
    model = tm.StateTomoModel(8, c_copies=1.0)
    v = chn.random_state(4, rng)
    eps = np.array([1 - abs(v.conj() @ tm.pure_state_oracle(v, model, rng)) ** 2 for _ in range(10000)])
    target = model.eps_max(4) / 2
    assert abs(eps.mean() - target) <= 5 * eps.std(ddof=1) / np.sqrt(eps.size)


def test_oracle_rejects_non_unit(rng):
    with pytest.raises(ValueError):
        tm.pure_state_oracle(np.array([1.0, 1.0]), tm.StateTomoModel(10), rng)


def test_eps_max_clipped():
    assert tm.StateTomoModel(1, c_copies=5.0).eps_max(4) == 1.0
    assert tm.StateTomoModel(100).eps_max(4) == 0.04


# weak tomography

def test_weak_noiseless_recovers_up_to_column_phases(rng):
    v = chn.random_isometry(3, 5, rng).matrix
    est = tm.weak_isometry_tomo(tm.IsometryOracle(v), tm.StateTomoModel(10, noiseless=True), rng)
    phases = np.diag(v.conj().T @ est.matrix)
    assert np.allclose(np.abs(phases), 1, atol=1e-12)
    assert np.linalg.norm(v @ np.diag(phases) - est.matrix, 2) < 1e-9
    assert est.queries_used == 30


def test_snap_is_optimal_in_op_norm(rng):
    for _ in range(10):
        m = chn.haar_unitary(2, rng) + 0.3 * (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        snapped = tm.snap_to_isometry(m)
        s = np.linalg.svd(m, compute_uv=False)
        err = np.linalg.norm(m - snapped, 2)
        assert err <= np.max(np.abs(s - 1)) + 1e-12
        for _ in range(300):
            assert err <= np.linalg.norm(m - chn.haar_unitary(2, rng), 2) + 1e-12


def test_weak_estimate_is_isometry(rng):
    v = chn.random_isometry(2, 4, rng).matrix
    for copies in (1, 5, 100):
        est = tm.weak_isometry_tomo(tm.IsometryOracle(v), tm.StateTomoModel(copies), rng)
        assert np.max(np.abs(est.matrix.conj().T @ est.matrix - np.eye(2))) < 1e-10


# DFT

def test_dft_small_cases():
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    assert np.allclose(tm.dft(2), h, atol=1e-15)
    f5 = tm.dft(5)
    assert np.max(np.abs(f5.conj().T @ f5 - np.eye(5))) < 1e-12
    assert np.allclose(np.abs(f5), 1 / np.sqrt(5))
    assert np.allclose(np.linalg.matrix_power(tm.dft(2), 4), np.eye(2))


# phase alignment

def test_phase_align_noiseless_exact(rng):
    for d1, d2 in [(2, 4), (3, 3), (4, 6)]:
        v = chn.random_isometry(d1, d2, rng).matrix
        f = tm.dft(d1)
        out = tm.phase_align(v @ diag_phases(d1, rng), v @ f @ diag_phases(d1, rng), f)
        g = out.matrix[:, 0] @ v[:, 0].conj()
        assert abs(abs(g) - 1) < 1e-12
        assert np.max(np.abs(out.matrix - g * v)) < 1e-12
        assert mt.isometry_diamond_distance(v, out.matrix) < 1e-8


def _perturbed(m, size, rng):
    e = rng.normal(size=m.shape) + 1j * rng.normal(size=m.shape)
    return tm.snap_to_isometry(m + size * e / np.linalg.norm(e, 2))


def test_phase_align_robust_bound(rng):
    worst = 0.0
    for _ in range(50):
        d1 = int(rng.integers(2, 4))
        v = chn.random_isometry(d1, d1 + 2, rng).matrix
        f = tm.dft(d1)
        p1, p2 = diag_phases(d1, rng), diag_phases(d1, rng)
        v1, v2 = _perturbed(v @ p1, 0.004, rng), _perturbed(v @ f @ p2, 0.004, rng)
        assert np.linalg.norm(v @ p1 - v1, 2) <= 0.01
        assert np.linalg.norm(v @ f @ p2 - v2, 2) <= 0.01
        out = tm.phase_align(v1, v2, f)
        worst = max(worst, mt.isometry_diamond_distance(v, out.matrix))
    assert worst <= 98 * 0.01


def test_phase_align_single_column(rng):
    v = chn.random_isometry(1, 3, rng).matrix
    est = v * np.exp(0.7j)
    out = tm.phase_align(v, est)
    assert mt.isometry_diamond_distance(out.matrix, est) < 1e-12


def test_phase_align_invariant_under_reference_phases(rng):
    # right phases on the reference estimate only rescale rows of Phi_3
    for _ in range(10):
        v = chn.random_isometry(3, 4, rng).matrix
        f = tm.dft(3)
        v1, v2 = _perturbed(v, 0.05, rng), _perturbed(v @ f, 0.05, rng)
        base = tm.phase_align(v1, v2, f).matrix
        moved = tm.phase_align(v1 @ diag_phases(3, rng), v2, f).matrix
        assert mt.isometry_diamond_distance(base, moved) < 1e-8


def test_phase_align_second_estimate_phases(rng):
    # exact for noiseless input; with noise the componentwise median is not
    # rotation-equivariant, so only the robustness bound survives
    for _ in range(10):
        v = chn.random_isometry(3, 4, rng).matrix
        f = tm.dft(3)
        clean = tm.phase_align(v, v @ f, f).matrix
        moved = tm.phase_align(v, v @ f @ diag_phases(3, rng), f).matrix
        assert mt.isometry_diamond_distance(clean, moved) < 1e-8
        v1, v2 = _perturbed(v, 0.004, rng), _perturbed(v @ f, 0.004, rng)
        a = tm.phase_align(v1, v2, f).matrix
        b = tm.phase_align(v1, v2 @ diag_phases(3, rng), f).matrix
        assert mt.isometry_diamond_distance(a, b) <= 2 * 98 * 0.01


def test_phase_align_degenerate(rng):
    v = chn.random_isometry(2, 3, rng).matrix
    with pytest.raises(tm.DegeneratePhaseError):
        tm.phase_align(v, np.zeros((3, 2)))


# full isometry tomography

def test_isometry_tomography_noiseless(rng):
    v = chn.random_isometry(2, 4, rng).matrix
    est = tm.isometry_tomography(tm.IsometryOracle(v), 0.25, rng, noiseless=True)
    assert mt.isometry_diamond_distance(v, est.matrix) <= 1e-8
    assert np.max(np.abs(est.matrix.conj().T @ est.matrix - np.eye(2))) < 1e-9


def test_query_accounting(rng):
    v = chn.random_isometry(2, 4, rng).matrix
    oracle = tm.IsometryOracle(v)
    est = tm.isometry_tomography(oracle, 0.25, rng)
    n = tm.total_queries(2, 4, 0.25)
    assert n == int(np.ceil(tm.C_TOTAL * 8 * 16))
    per = n // 4
    assert est.queries_used == oracle.queries == 4 * per
    assert est.meta["copies_per_column"] == per


def test_isometry_tomography_error_shrinks(rng):
    v = chn.random_isometry(2, 3, rng).matrix
    errs = []
    for q in (100, 100000):
        e = [mt.isometry_diamond_distance(v, tm.isometry_tomography(tm.IsometryOracle(v), rng=rng, queries=q).matrix)
             for _ in range(10)]
        errs.append(np.median(e))
    assert errs[1] < errs[0] / 10


# channel tomography and reductions

def test_channel_tomography_r1_matches_isometry_tomography():
    ch = chn.QuantumChannel((chn.random_isometry(2, 3, np.random.default_rng(1)).matrix,), 2, 3)
    a = tm.channel_tomography(ch, 1, 0.3, np.random.default_rng(7))
    assert a.dilation.matrix.shape == (3, 2)
    rng = np.random.default_rng(7)
    w = chn.sample_random_dilation(ch, 1, rng)
    b = tm.isometry_tomography(tm.IsometryOracle(w.matrix), 0.3, rng)
    assert np.allclose(a.dilation_estimate.matrix, b.matrix)
    assert np.allclose(a.estimate.kraus[0], b.matrix)


def test_channel_tomography_contractive(rng):
    ch = chn.random_channel(2, 2, 2, rng)
    for _ in range(3):
        res = tm.channel_tomography(ch, 2, 0.25, rng)
        iso = mt.isometry_diamond_distance(res.dilation.matrix, res.dilation_estimate.matrix)
        got = mt.diamond_distance(res.estimate, ch, rng=rng).value
        assert got <= iso + 1e-6


def test_contract_estimate_truth_equals_estimate(rng):
    u = chn.haar_unitary(4, rng)
    out = tm.contract_estimate(u, 2, truth=u)
    assert abs(out["f_ent"] - 1) < 1e-12
    assert out["choi_distance"] < 1e-10 and out["bound"] < 1e-6


def test_contract_estimate_sign_flip():
    out = tm.contract_estimate(np.diag([1, -1]).astype(complex), 1, truth=np.eye(2))
    assert abs(out["f_ent"]) < 1e-14
    assert abs(out["dilation_choi_distance"] - 1) < 1e-10
    assert abs(out["bound"] - 1) < 1e-12


def test_contract_estimate_bound_holds(rng):
    for _ in range(10):
        u = chn.haar_unitary(4, rng)
        w = u @ tm.snap_to_isometry(np.eye(4) + 0.2 * rng.normal(size=(4, 4)))
        out = tm.contract_estimate(w, 2, truth=u)
        assert out["choi_distance"] <= out["bound"] + 1e-10


def test_contract_estimate_state_mode(rng):
    psi = chn.random_state(6, rng)
    rho = tm.contract_estimate(psi, 2, mode="state")["state"]
    assert rho.shape == (3, 3)
    assert abs(np.trace(rho) - 1) < 1e-12
    assert np.min(np.linalg.eigvalsh(rho)) > -1e-12
    full = np.outer(psi, psi.conj()).reshape(2, 3, 2, 3)
    assert np.allclose(rho, np.einsum("aiaj->ij", full))


def test_contract_estimate_bad_mode(rng):
    with pytest.raises(ValueError):
        tm.contract_estimate(np.eye(2), 1, mode="nope")
