import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from consensus_clock.delays import DelaySpec, parse_delay_spec
from consensus_clock.errors import SchemaError


def test_ccdf_examples():
    assert DelaySpec.unit().ccdf(0) == 1.0
    assert DelaySpec.unit().ccdf(1) == 0.0
    assert DelaySpec.deterministic(2).ccdf(1) == 1.0
    assert DelaySpec.deterministic(2).ccdf(2) == 0.0
    # geometric on {1,2,...}: ccdf(i) = (1-a)^i
    assert DelaySpec.geometric(0.5).ccdf(2) == pytest.approx(0.25, abs=1e-15)


def test_mean_examples():
    assert DelaySpec.unit().mean() == 1.0
    assert DelaySpec.deterministic(3).mean() == 3.0
    assert DelaySpec.geometric(0.5).mean() == pytest.approx(2.0, abs=1e-15)


def test_sample_point_masses():
    rng = np.random.default_rng(0)
    assert DelaySpec.unit().sample(rng) == 1
    assert DelaySpec.deterministic(5).sample(rng) == 5


def test_empirical_sampler_frequency():
    spec = DelaySpec.empirical([(1, 0.5), (3, 0.5)])
    rng = np.random.default_rng(42)
    draws = spec.sample(rng, size=1_000_000)
    freq1 = np.mean(draws == 1)
    se = np.sqrt(0.25 / 1_000_000)
    assert abs(freq1 - 0.5) < 4 * se
    assert abs(freq1 - 0.5) < 0.002


def test_sampler_mean_matches_law():
    for spec in (DelaySpec.geometric(0.3),
                 DelaySpec.empirical([(1, 0.2), (2, 0.5), (7, 0.3)])):
        rng = np.random.default_rng(7)
        draws = spec.sample(rng, size=1_000_000)
        se = draws.std(ddof=1) / 1000.0
        assert abs(draws.mean() - spec.mean()) < 4 * se


def test_rejects_bad_specs():
    with pytest.raises(ValueError):
        DelaySpec.deterministic(0)
    with pytest.raises(ValueError):
        DelaySpec.geometric(0.0)
    with pytest.raises(ValueError):
        DelaySpec.empirical([(0, 1.0)])
    with pytest.raises(ValueError):
        DelaySpec.empirical([(1, 0.5), (2, 0.6)])
    with pytest.raises(ValueError):
        DelaySpec.empirical([(1, 0.5), (1, 0.5)])
    with pytest.raises(ValueError):
        DelaySpec.empirical([(1, 0.5), (20_000, 0.5)])


def test_parse_syntax(tmp_path):
    assert parse_delay_spec("unit") == DelaySpec.unit()
    assert parse_delay_spec("det:4") == DelaySpec.deterministic(4)
    assert parse_delay_spec("geom:0.25") == DelaySpec.geometric(0.25)
    path = tmp_path / "pmf.csv"
    path.write_text("value,prob\n1,0.5\n3,0.5\n", encoding="utf-8")
    assert parse_delay_spec(f"pmf:{path}") == DelaySpec.empirical([(1, 0.5), (3, 0.5)])
    with pytest.raises(ValueError):
        parse_delay_spec("weird:1")
    bad = tmp_path / "bad.csv"
    bad.write_text("v,p\n1,1\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        parse_delay_spec(f"pmf:{bad}")


def delay_specs():
    return st.one_of(
        st.just(DelaySpec.unit()),
        st.integers(1, 20).map(DelaySpec.deterministic),
        st.floats(0.05, 0.95).map(DelaySpec.geometric),
        st.lists(st.tuples(st.integers(1, 30), st.floats(0.01, 1.0)),
                 min_size=1, max_size=5, unique_by=lambda t: t[0])
        .map(lambda pairs: DelaySpec.empirical(
            [(v, w / sum(q for _, q in pairs)) for v, w in pairs])),
    )


@settings(max_examples=50, deadline=None)
@given(delay_specs())
def test_ccdf_monotone_and_mass(spec):
    assert spec.ccdf(0) == 1.0
    prev = 1.0
    mass = 0.0
    for i in range(1, 200):
        c = spec.ccdf(i)
        assert c <= prev + 1e-15
        mass += prev - c
        prev = c
        if c == 0.0:
            break
    if spec.kind != "geometric":
        assert mass == pytest.approx(1.0, abs=1e-10)
    else:
        assert mass + spec.ccdf(199) == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(delay_specs())
def test_mean_is_tail_sum(spec):
    total = sum(spec.ccdf(i) for i in range(0, 5000))
    assert total == pytest.approx(spec.mean(), rel=1e-9, abs=1e-9)
