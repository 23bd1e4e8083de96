import numpy as np
import pytest

from dichannel.channels import IDENTITY, Effect, amplitude_damping, born, random_physical_d2
from dichannel.formats import counts_doc, dumps
from dichannel.geometry import ad_contains, ad_lhs, boundary, p_to_xy
from dichannel.simulate import (
    CountsTable,
    ProbeSetting,
    Setting,
    boundary_probe,
    exact_points,
    exact_probabilities,
    frequencies,
    grid_settings,
    probe_convention,
    probe_errors,
    probe_projector,
    simulate_counts,
    state_from_omega,
    to_points,
    tomography_settings,
)


def test_tomography_settings():
    s = tomography_settings()
    assert len(s) == 18
    assert s[0].state == (0.0, 0.0, 1.0)
    assert s[0].effect == Effect(0.5, (0.0, 0.0, 0.5))
    assert s[0].probability(IDENTITY) == 1.0
    plus_z = next(x for x in s if x.state == (1.0, 0.0, 0.0) and x.meas_id == 0)
    assert plus_z.probability(IDENTITY) == 0.5


def test_grid_settings():
    g = grid_settings(29)
    assert len(g) == 841
    assert len({(p.pair_id, p.meas_id) for p in g}) == 841
    for p in g[:: 37]:
        assert np.allclose(p.state1, [-x for x in p.state2])
        assert p.state1[1] == 0.0 and p.effect.s[1] == 0.0
    with pytest.raises(ValueError):
        grid_settings(1)


def test_state_from_omega():
    assert state_from_omega(1.0) == pytest.approx((0.0, 0.0, 1.0))
    assert state_from_omega(0.5) == pytest.approx((1.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        state_from_omega(1.2)


def test_probe_convention_resolved():
    assert probe_convention() == ("half-tan", "complement")


def test_literal_efficiency_misses_the_boundary():
    for omega in ("half-tan", "inverse"):
        assert max(probe_errors(omega, "literal").values()) > 1e-2


def test_both_omega_forms_reach_the_boundary():
    # the two omega forms only reparametrize where along the arc a probe lands
    assert max(probe_errors("inverse", "complement").values()) <= 1e-12


@pytest.mark.parametrize("lam", [0.2, 0.4, 0.5, 0.8])
def test_probe_tightness(lam):
    ch = amplitude_damping(lam)
    r = boundary(ch)
    for gamma in np.linspace(-np.pi / 4, np.pi / 4, 20):
        p = boundary_probe(lam, gamma).correlation(ch)
        assert abs(r.margin(p)) <= 1e-4
        x, y = p_to_xy(*p)
        assert ad_lhs(x, y) == pytest.approx(1.0 - lam, abs=1e-9)


def test_probe_second_arc():
    ch = amplitude_damping(0.4)
    r = boundary(ch)
    for gamma in np.linspace(3 * np.pi / 4, 5 * np.pi / 4, 7):
        assert abs(r.margin(boundary_probe(0.4, gamma).correlation(ch))) <= 1e-4
    with pytest.raises(ValueError):
        boundary_probe(0.4, np.pi / 2)


def test_probe_identity_reaches_square_boundary():
    p = boundary_probe(0.0, 0.3).correlation(IDENTITY)
    assert abs(boundary(IDENTITY).margin(p)) <= 1e-9


def test_probe_arc_end_meets_polytope():
    ch = amplitude_damping(0.4)
    p = boundary_probe(0.4, np.pi / 4).correlation(ch)
    assert abs(boundary(ch).margin(p)) <= 1e-4
    # at the arc end the states are +-x, so p11 - p12 reaches its maximum sqrt(1 - lam)
    assert abs(p[0] - p[1]) == pytest.approx(np.sqrt(0.6), abs=1e-9)


def test_probe_projector_degenerate():
    with pytest.raises(ZeroDivisionError):
        probe_projector(1.0, 0.0)


def test_simulate_certain_outcome():
    s = [Setting(0, 0, (0, 0, 1), Effect.projector((0, 0, 1)))]
    for seed in range(5):
        assert simulate_counts(IDENTITY, s, 1000, seed).counts[0] == 1000


def test_simulate_fair_coin():
    s = [Setting(0, 0, (1, 0, 0), Effect.projector((0, 0, 1)))]
    fs = [simulate_counts(IDENTITY, s, 10**6, seed).counts[0] / 1e6 for seed in range(200)]
    assert np.mean(np.abs(np.array(fs) - 0.5) <= 0.002) >= 0.99


def test_simulate_determinism():
    s = grid_settings(5)
    ch = amplitude_damping(0.3)
    a = dumps(counts_doc(simulate_counts(ch, s, 1000, 7)))
    b = dumps(counts_doc(simulate_counts(ch, s, 1000, 7)))
    c = dumps(counts_doc(simulate_counts(ch, s, 1000, 8)))
    assert a == b and a != c


def test_simulate_order_independent():
    ch = amplitude_damping(0.3)
    s = tomography_settings()
    full = simulate_counts(ch, s, 500, 3).counts
    # each setting draws from the stream keyed by its own index
    from dichannel.simulate import setting_stream

    p = exact_probabilities(ch, s)
    redo = [setting_stream(3, i).binomial(500, min(max(q, 0), 1)) for i, q in reversed(list(enumerate(p)))]
    assert list(full) == redo[::-1]


def test_simulate_rejects_bad_shots():
    with pytest.raises(ValueError):
        simulate_counts(IDENTITY, tomography_settings(), 0, 1)


def test_frequencies_example():
    c = CountsTable([Setting(0, 0, (0, 0, 1), Effect.projector((0, 0, 1)))], [7], 10)
    f = frequencies(c)
    assert f.f[0] == pytest.approx(0.7)
    assert 1 - f.f[0] == pytest.approx(0.3)
    assert f.sigma[0] == pytest.approx(np.sqrt(0.021))


def test_frequencies_edge_floor():
    s = [Setting(0, 0, (0, 0, 1), Effect.projector((0, 0, 1)))] * 2
    f = frequencies(CountsTable(s, [100, 0], 100))
    assert f.f.tolist() == [1.0, 0.0]
    assert f.sigma.tolist() == pytest.approx([0.05, 0.05])


def test_frequencies_empty():
    f = frequencies(CountsTable([], [], 10))
    assert len(f) == 0
    assert len(to_points(f)) == 0


@pytest.mark.parametrize("shots", [10**2, 10**4, 10**6])
def test_frequencies_converge(shots):
    rng = np.random.default_rng(shots)
    ch = random_physical_d2(rng, 1)[0]
    s = grid_settings(6)
    p = exact_probabilities(ch, s)
    assert np.all((p >= 0) & (p <= 1))
    f = frequencies(simulate_counts(ch, s, shots, 11)).f
    band = 5 * np.sqrt(np.maximum(p * (1 - p), 0.25 / shots) / shots)
    assert np.all(np.abs(f - p) <= band)


def test_grid_points_inside_ad_set():
    lam = 0.4
    ch = amplitude_damping(lam)
    d = exact_points(ch, grid_settings(29))
    assert len(d) == 841
    x, y = p_to_xy(d.p[:, 0], d.p[:, 1])
    assert np.all(ad_contains(lam, x, y))


def test_grid_points_inside_ad_set_finite_shots():
    lam = 0.4
    ch = amplitude_damping(lam)
    d = to_points(frequencies(simulate_counts(ch, grid_settings(15), 10**4, 5)))
    assert np.all(boundary(ch).margins(d, k=2.0) <= 1e-9)


def test_to_points_pairs_inputs():
    ps = ProbeSetting(3, 1, (0, 0, 1), (0, 0, -1), Effect.projector((0, 0, 1)))
    d = exact_points(IDENTITY, [ps])
    assert d.p.tolist() == [[1.0, 0.0]]
    assert d.pair_id.tolist() == [3] and d.meas_id.tolist() == [1]
    assert born(ps.effect, (0, 0, 1)) == 1.0
