"""Property-based checks of the invariants the package relies on."""
import warnings

import numpy as np
from hypothesis import example, given, settings
from hypothesis import strategies as st

from dichannel.channels import D2Channel, canonicalize, d1_interval, is_cp_explicit
from dichannel.formats import counts_doc, dumps
from dichannel.geometry import CorrelationData, boundary
from dichannel.protocols import di_cc
from dichannel.simulate import exact_frequencies, grid_settings, simulate_counts, tomography_settings
from dichannel.tomography import fit_d2, fit_general

from oracles import sampled_correlations

unit = st.floats(0.0, 1.0, allow_nan=False)
signed = st.floats(-1.0, 1.0, allow_nan=False)


@st.composite
def physical_channels(draw):
    d = (draw(signed), draw(signed), draw(signed))
    c3 = draw(signed)
    # shrink towards the completely depolarizing channel until completely positive
    for scale in (1.0, 0.7, 0.5, 0.3, 0.1, 0.0):
        ch = D2Channel(*(scale * x for x in d), scale * c3)
        if is_cp_explicit(ch):
            return ch
    return ch


@settings(max_examples=15)
@given(physical_channels(), st.integers(0, 2**31 - 1))
def test_nested_loglik(ch, seed):
    f = exact_frequencies(ch, tomography_settings())
    d2 = fit_d2(f, restarts=4, seed=seed)
    gen = fit_general(f, restarts=2, seed=seed, start=d2)
    assert gen.loglik >= d2.loglik - 1e-9


@settings(max_examples=60)
@given(physical_channels())
def test_region_symmetry(ch):
    r = boundary(ch, 256)
    h = r.support_values
    n = r.n
    k = np.arange(n)
    # direction k has angle 2 pi k / n; swapping inputs reflects it about pi/4
    swapped = h[(n // 4 - k) % n]
    assert np.abs(swapped - h).max() <= 1e-9
    # flipping outcomes: h(u) = h(-u) + u1 + u2
    flipped = h[(k + n // 2) % n] + r.cos + r.sin
    assert np.abs(flipped - h).max() <= 1e-9


@settings(max_examples=60)
@given(physical_channels(), unit)
def test_d1_insensitivity(ch, frac):
    # d1_interval expects the canonical sign pattern
    ch = canonicalize(ch)[0]
    d2, d3, c3 = ch.d2, ch.d3, ch.c3
    lo, hi = d1_interval(d2, d3, c3)
    hi = min(hi, d2)
    alt = D2Channel(lo + frac * max(hi - lo, 0.0), d2, d3, c3)
    if not is_cp_explicit(alt):
        return
    a = boundary(ch, 256).vertices
    b = boundary(alt, 256).vertices
    assert np.abs(a - b).max() <= 1e-9


@settings(max_examples=8)
@given(physical_channels(), st.integers(0, 2**31 - 1))
@example(D2Channel(0.0, 0.0, -0.9548230240175193, 0.0), 7477)
def test_di_cc_containment_and_relabelling(ch, seed):
    pts = CorrelationData(sampled_correlations(ch, np.random.default_rng(seed), 25))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fits = [di_cc(d, restarts=20, n=1024) for d in (pts, pts.swap_inputs(), pts.flip_outcomes())]
    for f, d in zip(fits, (pts, pts.swap_inputs(), pts.flip_outcomes())):
        assert f.region.margins(d).max() <= 1e-6
    ref = np.array([fits[0].report.d2, fits[0].report.d3, fits[0].report.c3])
    for f in fits[1:]:
        assert np.abs(np.array([f.report.d2, f.report.d3, f.report.c3]) - ref).max() <= 1e-6


@settings(max_examples=25)
@given(physical_channels(), st.integers(0, 2**63 - 1), st.integers(1, 10**6))
def test_rng_determinism(ch, seed, shots):
    s = grid_settings(3)
    a = dumps(counts_doc(simulate_counts(ch, s, shots, seed)))
    b = dumps(counts_doc(simulate_counts(ch, s, shots, seed)))
    assert a == b
