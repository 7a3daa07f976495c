import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from pertcopula.chain import (
    ChainSample,
    RngStream,
    inverse_conditional,
    read_chain_csv,
    simulate,
    simulate_batch,
    write_chain_csv,
)
from pertcopula.copulas import CopulaSpec, Family, conditional_cdf, preset
from pertcopula.errors import InvalidSpec, NonInteriorSpec


def test_rng_streams_reproducible_and_distinct():
    a = RngStream(5, 0).uniforms(100)
    assert np.array_equal(a, RngStream(5, 0).uniforms(100))
    assert not np.array_equal(a, RngStream(5, 1).uniforms(100))
    assert not np.array_equal(a, RngStream(6, 0).uniforms(100))
    assert np.all((a > 0) & (a < 1))


def test_rng_prefix_stable():
    long = RngStream(9, 4).uniforms(1000)
    assert np.array_equal(long[:10], RngStream(9, 4).uniforms(10))


def test_normals_are_standard():
    x = RngStream(1, 2).normals(20000)
    assert stats.kstest(x, "norm").pvalue > 1e-3


def test_chain_sample_validation():
    with pytest.raises(ValueError):
        ChainSample([0.5, 1.5])
    with pytest.raises(ValueError):
        ChainSample([])
    c = ChainSample([0.1, 0.2, 0.3])
    assert c.n == 2 and len(c) == 3
    cur, prev = c.pairs()
    assert cur.tolist() == [0.2, 0.3] and prev.tolist() == [0.1, 0.2]
    with pytest.raises(ValueError):
        c.values[0] = 0.5


@given(st.sampled_from(list(Family)), st.floats(0.001, 0.999), st.floats(0.0, 1.0))
def test_inverse_round_trip_property(fam, u, w):
    sp = preset(fam)
    v = inverse_conditional(sp, u, w)
    assert 0.0 <= v <= 1.0
    assert conditional_cdf(sp, u, v) == pytest.approx(w, abs=1e-8)


def test_inverse_rejects_invalid():
    with pytest.raises(InvalidSpec):
        inverse_conditional(CopulaSpec("sine", (0.4, 0.2)), 0.5, 0.5)
    with pytest.raises(NonInteriorSpec):
        inverse_conditional(CopulaSpec("sine", (0.5, 0.0)), 0.5, 0.5)


def test_independence_chain_reproduces_uniforms():
    sp = CopulaSpec("sine", (0.0, 0.0))
    ch = simulate(sp, 50, RngStream(3))
    np.testing.assert_allclose(ch.values, RngStream(3).uniforms(51), atol=1e-10)


def test_batch_equals_single():
    sp = preset("legendre")
    streams = [RngStream(11, r) for r in range(4)]
    batch = simulate_batch(sp, 200, streams)
    for s, ch in zip(streams, batch):
        assert simulate(sp, 200, s) == ch


def test_prefix_property():
    sp = preset("sine")
    long = simulate(sp, 300, RngStream(2, 7))
    short = simulate(sp, 100, RngStream(2, 7))
    assert np.array_equal(long.values[:101], short.values)


@pytest.mark.parametrize("fam", list(Family))
def test_stationary_marginal_is_uniform(fam):
    chains = simulate_batch(preset(fam), 1000, [RngStream(21, r) for r in range(20)])
    # one value per chain, far from the start, gives an iid uniform sample
    assert stats.kstest([c.values[-1] for c in chains] + [c.values[500] for c in chains], "uniform").pvalue > 1e-3
    pooled = np.concatenate([c.values for c in chains])
    assert np.histogram(pooled, bins=10, range=(0, 1))[0].min() > 0.09 * pooled.size


def test_lag_one_dependence_matches_spearman():
    # Spearman's rho of the Legendre copula equals lambda1 exactly
    sp = preset("legendre")
    chains = simulate_batch(sp, 4000, [RngStream(8, r) for r in range(10)])
    rho = np.mean([stats.spearmanr(c.values[1:], c.values[:-1])[0] for c in chains])
    assert rho == pytest.approx(0.15, abs=0.02)


def test_csv_round_trip(tmp_path):
    ch = simulate(preset("sine-cosine"), 40, RngStream(4, 2))
    p = write_chain_csv(ch, tmp_path / "c.csv")
    back = read_chain_csv(p)
    assert back == ch
    assert p.read_text().splitlines()[0] == "index,u"


def test_csv_without_sidecar(tmp_path):
    p = tmp_path / "plain.csv"
    p.write_text("index,u\n1,0.5\n0,0.25\n")
    ch = read_chain_csv(p)
    assert ch.values.tolist() == [0.25, 0.5] and ch.spec is None
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n1,2\n")
    with pytest.raises(ValueError):
        read_chain_csv(bad)


@settings(max_examples=10)
@given(st.integers(0, 2**63 - 1), st.integers(0, 1000))
def test_simulation_deterministic_property(seed, stream):
    sp = preset("sine")
    assert simulate(sp, 20, RngStream(seed, stream)) == simulate(sp, 20, RngStream(seed, stream))
