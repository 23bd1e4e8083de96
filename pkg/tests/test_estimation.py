import numpy as np
import pytest

from dichannel.channels import DEPOLARIZING, IDENTITY, QubitChannel, amplitude_damping, is_cp_choi, random_physical_d2
from dichannel.linalg import rot_exp
from dichannel.optimize import InfeasibleError, ObjectiveProblem, constrained_maximize, multistart
from dichannel.simulate import exact_frequencies, frequencies, simulate_counts, tomography_settings
from dichannel.tomography import (
    D2Objective,
    GeneralObjective,
    choi_fidelity,
    d2_starts,
    fit_d2,
    fit_general,
    loglik_for,
    mle_d2,
    mle_general,
)

AD04 = (np.sqrt(0.6), 0.6, 0.4)


def exact_table(ch):
    return exact_frequencies(ch, tomography_settings())


# --- optimizer -------------------------------------------------------------


def test_maximize_unconstrained_box():
    p = ObjectiveProblem(3, lambda x: -float(x @ x), np.array([0.7, -0.3, 0.9]), bounds=[(-1, 1)] * 3)
    r = constrained_maximize(p)
    assert r.success and r.value == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(r.x, 0.0, atol=1e-6)


def test_maximize_on_disc():
    p = ObjectiveProblem(
        2,
        lambda x: float(x[0] + x[1]),
        np.array([0.1, -0.2]),
        gradient=lambda x: np.ones(2),
        constraints=lambda x: np.array([1.0 - x @ x]),
    )
    r = constrained_maximize(p)
    assert r.value == pytest.approx(np.sqrt(2), abs=1e-8)
    assert np.allclose(r.x, [2**-0.5, 2**-0.5], atol=1e-6)
    assert r.kkt_residual <= 1e-6 and r.success


def test_maximize_deterministic():
    p = ObjectiveProblem(2, lambda x: -float((x[0] - 0.3) ** 2 + (x[1] + 0.1) ** 4), np.array([0.9, 0.9]))
    a, b = constrained_maximize(p), constrained_maximize(p)
    assert np.array_equal(a.x, b.x)


def test_infeasible_problem_reported():
    p = ObjectiveProblem(
        1,
        lambda x: float(x[0]),
        np.array([0.0]),
        constraints=lambda x: np.array([x[0] - 2.0, -x[0] - 2.0]),
    )
    r = constrained_maximize(p)
    assert not r.feasible and not r.success
    assert "infeasible" in r.message
    with pytest.raises(InfeasibleError):
        multistart(p, [np.array([0.0]), np.array([1.0])])


# --- log-likelihood --------------------------------------------------------


def test_loglik_gradients_match_finite_differences():
    rng = np.random.default_rng(0)
    f = frequencies(simulate_counts(amplitude_damping(0.3), tomography_settings(), 200, 1))
    ll = loglik_for(f)
    d2obj, gobj = D2Objective(ll), GeneralObjective(ll)
    for x in d2_starts(rng, 100):
        for obj, y in ((d2obj, x), (gobj, None)):
            if y is None:
                a = rot_exp(x[:3]) @ np.diag(x[6:9]) @ rot_exp(x[3:6]).T
                y = np.concatenate([a.ravel(), rot_exp(x[:3]) @ [0, 0, x[9]]])
            g = obj.gradient(y)
            fd = np.array([(obj(y + e) - obj(y - e)) / 2e-6 for e in 1e-6 * np.eye(y.size)])
            assert np.linalg.norm(g - fd) <= 1e-5 * max(1.0, np.linalg.norm(g))


def test_loglik_clamps_at_boundary():
    ll = loglik_for(exact_table(IDENTITY))
    assert np.isfinite(ll(amplitude_damping(1.0)))


def test_zero_shot_settings_excluded():
    s = tomography_settings()
    c = simulate_counts(IDENTITY, s, 100, 0)
    c.shots[0] = 0
    c.counts[0] = 0
    with pytest.warns(UserWarning):
        f = frequencies(c)
    assert len(f) == len(s) - 1


# --- fits ------------------------------------------------------------------


def test_mle_d2_exact_ad():
    ch, u, v, ll = mle_d2(exact_table(amplitude_damping(0.4)), restarts=30, seed=1)
    assert (ch.d2, ch.d3, ch.c3) == pytest.approx(AD04, abs=1e-3)
    assert is_cp_choi(ch)
    a = v @ np.diag(ch.d) @ u.T
    assert np.allclose(a, np.diag([np.sqrt(0.6), np.sqrt(0.6), 0.6]), atol=2e-3)


def test_mle_d2_identity_constraints_active():
    fit = fit_d2(exact_table(IDENTITY), restarts=20, seed=2)
    assert fit.channel.as_tuple() == pytest.approx((1, 1, 1, 0), abs=1e-3)
    assert max(fit.channel.cp_lhs()) == pytest.approx(1.0, abs=2e-3)


def test_mle_general_exact_ad():
    d2fit = fit_d2(exact_table(amplitude_damping(0.4)), restarts=20, seed=3)
    ch, ll = mle_general(exact_table(amplitude_damping(0.4)), restarts=10, seed=3, start=d2fit)
    # the frame may differ by a rotation about the translation axis
    assert np.allclose(np.abs(np.linalg.svd(ch.A, compute_uv=False)), [np.sqrt(0.6), np.sqrt(0.6), 0.6], atol=1e-3)
    assert np.allclose(ch.b, [0, 0, 0.4], atol=1e-3)
    assert ch.is_physical()


def test_mle_general_rotation():
    r = rot_exp([0.3, -0.5, 0.9])
    rot = QubitChannel(r, np.zeros(3))
    f = exact_frequencies(rot, tomography_settings())
    ch, _ = mle_general(f, restarts=10, seed=4)
    assert np.allclose(ch.A, r, atol=1e-3)
    assert np.allclose(ch.b, 0, atol=1e-3)


def test_nested_loglik_and_truth_bound():
    rng = np.random.default_rng(5)
    for i, truth in enumerate(random_physical_d2(rng, 20)):
        f = exact_table(truth)
        d2fit = fit_d2(f, restarts=8, seed=i)
        gfit = fit_general(f, restarts=4, seed=i, start=d2fit)
        ll_true = loglik_for(f)(truth)
        assert gfit.loglik >= d2fit.loglik - 1e-9
        assert d2fit.loglik >= ll_true - 1e-6
        assert is_cp_choi(d2fit.channel)


def test_fits_deterministic_with_workers():
    f = frequencies(simulate_counts(amplitude_damping(0.2), tomography_settings(), 1000, 9))
    a = fit_d2(f, restarts=8, seed=1, workers=1)
    b = fit_d2(f, restarts=8, seed=1, workers=2)
    assert np.array_equal(a.result.x, b.result.x)


# --- fidelity --------------------------------------------------------------


def test_fidelity_examples():
    assert choi_fidelity(IDENTITY, IDENTITY) == pytest.approx(1.0, abs=1e-12)
    assert choi_fidelity(IDENTITY, DEPOLARIZING) == pytest.approx(0.25, abs=1e-12)
    assert choi_fidelity(amplitude_damping(0.4), amplitude_damping(0.41)) >= 0.999


def test_fidelity_symmetric():
    rng = np.random.default_rng(6)
    a, b = random_physical_d2(rng, 2)
    assert choi_fidelity(a, b) == pytest.approx(choi_fidelity(b, a), abs=1e-9)


def test_fidelity_rejects_unphysical():
    with pytest.raises(ValueError):
        choi_fidelity(QubitChannel(np.eye(3), [0.5, 0, 0]), IDENTITY)
