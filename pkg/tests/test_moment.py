import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from _sims import preset_chains
from pertcopula.basis import BasisFamily, BasisFunctionId, eval_phi
from pertcopula.chain import ChainSample
from pertcopula.copulas import Family, density, preset
from pertcopula.errors import (
    ChainTooShort,
    DivergentSeries,
    EmptyChain,
    NonInteriorSpec,
    NonPositiveVariance,
    SingularMatrix,
)
from pertcopula.moment import (
    asymptotic_sigma,
    confidence_intervals,
    estimate_lambda,
    fit_moment,
    general_sigma,
    independence_ids,
    independence_test,
    region_statistic,
    spearman_rho,
)
from test_copulas import interior_params

H1 = BasisFunctionId(BasisFamily.HALF_COSINE, 1)


def discretised_sigma(spec, grid=400):
    """Long-run covariance of the estimator on a discretised transition kernel.

    The chain is replaced by a finite-state chain on the midpoint grid with
    transition probabilities proportional to the copula density; the
    long-run covariance of the pair functionals then follows from the
    fundamental matrix.  Independent of the series formula.
    """
    u = (np.arange(grid) + 0.5) / grid
    p = density(spec, u[:, None], u[None, :])
    p /= p.sum(axis=1, keepdims=True)
    vals, vecs = np.linalg.eig(p.T)
    pi = np.real(vecs[:, np.argmin(np.abs(vals - 1))])
    pi /= pi.sum()
    proj = np.outer(np.ones(grid), pi)
    z = np.linalg.inv(np.eye(grid) - p + proj) - proj
    joint = pi[:, None] * p
    fs = [np.outer(eval_phi(f, u), eval_phi(f, u)) for f in spec.ids]
    means = [np.sum(joint * f) for f in fs]
    head = [(joint * f).sum(axis=0) for f in fs]
    tail = [(p * f).sum(axis=1) for f in fs]
    s = len(fs)
    out = np.empty((s, s))
    for a in range(s):
        for b in range(s):
            lag0 = np.sum(joint * fs[a] * fs[b]) - means[a] * means[b]
            out[a, b] = lag0 + head[a] @ z @ tail[b] + head[b] @ z @ tail[a]
    return out


def test_estimate_examples():
    assert estimate_lambda(ChainSample([0.0, 0.5]), [H1])[0] == pytest.approx(0.0, abs=1e-15)
    assert estimate_lambda(ChainSample([0.0, 0.0]), [H1])[0] == pytest.approx(2.0)
    with pytest.raises(EmptyChain):
        estimate_lambda(ChainSample([0.3]), "sine")


def test_estimate_accepts_family_or_ids():
    ch = ChainSample([0.1, 0.7, 0.4, 0.9])
    a = estimate_lambda(ch, "sine-cosine")
    b = estimate_lambda(ch, Family.SINE_COSINE.ids)
    assert np.array_equal(a, b) and a.shape == (4,)
    assert spearman_rho(ch, "legendre") == estimate_lambda(ch, "legendre")[0]


def test_point_estimate_plausible_for_long_sine_chain():
    chains = preset_chains("sine", 4999, 4, 19)
    lam = np.mean([estimate_lambda(c, "sine") for c in chains], axis=0)
    assert lam == pytest.approx([0.28, -0.15], abs=0.03)


def test_sigma_examples():
    np.testing.assert_array_equal(asymptotic_sigma("sine", (0, 0)), np.eye(2))
    s = asymptotic_sigma("sine", (0.28, -0.15))
    np.testing.assert_allclose(s, [[1 - 0.075 + 0.0784 * (-0.15) / 1.15, 0.182], [0.182, 1.0]], atol=1e-12)
    s = asymptotic_sigma("legendre", (0.15, 0.1))
    assert s[0, 0] == pytest.approx(1 + 0.08 + 0.0225 * 3.5 / 4.5, abs=1e-12)
    assert s[0, 1] == pytest.approx(0.12 + 0.015 * 1.7 / 6.3, abs=1e-12)
    assert s[1, 1] == pytest.approx(1 + 2 / 49 + 0.01 * 60.7 / 44.1, abs=1e-12)


def test_sigma_refuses_non_positive_density():
    with pytest.raises(NonInteriorSpec):
        asymptotic_sigma("sine", (0.5, 0.0))


@pytest.mark.parametrize("fam", list(Family))
def test_general_sigma_identity_at_zero(fam):
    np.testing.assert_array_equal(general_sigma(fam.ids, np.zeros(fam.size)), np.eye(fam.size))


def test_general_sigma_divergent():
    with pytest.raises(DivergentSeries):
        general_sigma([H1], [1.0])


@given(st.data())
def test_general_sigma_matches_closed_forms_property(data):
    fam = data.draw(st.sampled_from(list(Family)))
    p = data.draw(interior_params(fam))
    g = general_sigma(fam.ids, p)
    np.testing.assert_allclose(g, asymptotic_sigma(fam, p), atol=1e-8)
    np.testing.assert_array_equal(g, g.T)
    assert np.all(np.diag(g) > 0)


@pytest.mark.parametrize("fam", list(Family))
def test_sigma_matches_discretised_kernel(fam):
    sp = preset(fam)
    # trig bases integrate exactly on the midpoint grid; polynomials to O(grid^-2)
    tol = 1e-10 if fam is not Family.LEGENDRE else 5e-4
    np.testing.assert_allclose(general_sigma(sp.ids, sp.params), discretised_sigma(sp), atol=tol)


def test_sine_cosine_cross_entry_includes_geometric_term():
    l1, l2, m1, m2 = preset("sine-cosine").params
    s = asymptotic_sigma("sine-cosine", (l1, l2, m1, m2))
    expected = m2 / 2 - 2 * l1 * m1 - l1 * m1 * l2 / (1 - l2)
    assert s[0, 2] == pytest.approx(expected, abs=1e-15)
    assert s[0, 2] == pytest.approx(discretised_sigma(preset("sine-cosine"))[0, 2], abs=1e-10)


def test_confidence_intervals():
    (lo, hi), = confidence_intervals([0.15], [[1.0]], 10000, 0.05)
    assert lo == pytest.approx(0.15 - 0.0195996398, abs=1e-9)
    assert hi == pytest.approx(0.15 + 0.0195996398, abs=1e-9)
    (lo, hi), = confidence_intervals([0.15], [[1.0]], 10000, 0.999999)
    assert hi - lo < 1e-7
    with pytest.raises(NonPositiveVariance):
        confidence_intervals([0.1, 0.2], np.diag([1.0, 0.0]), 100)
    with pytest.raises(ChainTooShort):
        confidence_intervals([0.1], [[1.0]], 1)


def test_region_statistic():
    r = region_statistic([0.3, 0.3], [0.3, 0.3], np.eye(2), 100)
    assert r.statistic == 0 and not r.reject
    r = region_statistic([0.1, 0.2], [0, 0], np.eye(2), 100)
    assert r.statistic == pytest.approx(5.0) and r.critical_value == pytest.approx(5.991464547) and not r.reject
    r = region_statistic([0.2, 0.2], [0, 0], np.eye(2), 100)
    assert r.statistic == pytest.approx(8.0) and r.reject
    with pytest.raises(SingularMatrix):
        region_statistic([0.1, 0.2], [0, 0], np.ones((2, 2)), 100)


@given(st.lists(st.floats(-0.3, 0.3), min_size=2, max_size=2), st.floats(0.01, 0.5))
def test_reject_iff_statistic_exceeds_critical(d, alpha):
    r = region_statistic(d, [0, 0], [[1.0, 0.2], [0.2, 1.5]], 50, alpha)
    assert r.reject == (r.statistic > r.critical_value)
    assert 0 <= r.p_value <= 1


def test_independence_ids_interleave_trig():
    ids = independence_ids(BasisFamily.TRIG, 4)
    assert [str(i) for i in ids] == ["cos1", "sin1", "cos2", "sin2"]
    assert independence_ids("sine", 3)[2] == BasisFunctionId(BasisFamily.HALF_COSINE, 3)


def test_independence_test_arithmetic(monkeypatch):
    import pertcopula.moment as m

    monkeypatch.setattr(m, "estimate_lambda", lambda vals, ids: np.array([0.05, -0.03]))
    r = m.independence_test(np.full(1001, 0.5), BasisFamily.HALF_COSINE, 2)
    assert r.statistic == pytest.approx(3.4) and not r.reject
    assert r.normal_approx == pytest.approx((3.4 - 2) / 2)


def test_independence_test_zero_statistic():
    # the first Legendre function vanishes exactly at 1/2
    r = independence_test(np.full(61, 0.5), BasisFamily.LEGENDRE, 1)
    assert r.statistic == 0.0 and not r.reject


def test_independence_test_minimum_length():
    with pytest.raises(ChainTooShort):
        independence_test(np.full(59, 0.5), BasisFamily.LEGENDRE, 2)


def test_independence_test_detects_dependence():
    ch = preset_chains("sine", 1999, 1, 5)[0]
    assert independence_test(ch, BasisFamily.HALF_COSINE, 2).reject


def test_fit_moment_report():
    ch = preset_chains("sine", 1999, 1, 5)[0]
    rep = fit_moment(ch, "sine")
    assert rep.method == "moment" and rep.n == 1999
    for (lo, hi), e in zip(rep.intervals, rep.estimates):
        assert lo < e < hi
    doc = json.loads(rep.to_json())
    assert set(doc) >= {"method", "estimates", "sigma", "intervals", "alpha", "n"}
    assert len(doc["sigma"]) == 2


def test_fit_moment_projects_plugin():
    # a short chain at the boundary preset can leave the region
    chains = preset_chains("sine-cosine", 99, 30, 3)
    flags = [fit_moment(c, "sine-cosine").extras["plugin_projected"] for c in chains]
    assert any(flags)


@pytest.mark.slow
def test_second_moment_of_pair_products():
    sp = preset("legendre")
    chains = preset_chains("legendre", 4999, 10, 77)
    for k, fid in enumerate(sp.ids):
        per_chain = [np.mean((eval_phi(fid, c.values[1:]) * eval_phi(fid, c.values[:-1])) ** 2) for c in chains]
        target = 1 + (4 / 5 if k == 0 else 20 / 49) * sp.params[1]
        se = np.std(per_chain, ddof=1) / math.sqrt(len(per_chain))
        assert abs(np.mean(per_chain) - target) <= 4 * se


@pytest.mark.slow
def test_unbiasedness_and_clt_shape():
    chains = preset_chains("sine", 2000, 500, 2024)
    est = np.array([estimate_lambda(c, "sine") for c in chains])
    sig = asymptotic_sigma("sine", (0.28, -0.15))
    assert abs(est[:, 0].mean() - 0.28) <= 4 * math.sqrt(sig[0, 0] / (500 * 2000))
    emp = np.cov((math.sqrt(2000) * (est - [0.28, -0.15])).T)
    np.testing.assert_allclose(emp, sig, atol=0.15)
