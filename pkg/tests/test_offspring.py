import json
import math

import numpy as np
import pytest
from scipy import stats as sps

from gwmd import (
    PRESETS,
    BinarySplit,
    InvalidLaw,
    PopulationCapExceeded,
    RngStream,
    ShiftedGeometric,
    ShiftedPoisson,
    TablePmf,
    moments,
    pmf,
    sample_generation_sum,
    sample_offspring,
)
from gwmd.offspring import law_from_dict, resolve_law


def test_pmf_examples():
    assert pmf(ShiftedGeometric(0.5), 1) == pytest.approx(0.5, abs=1e-15)
    assert pmf(ShiftedGeometric(0.5), 0) == 0.0
    assert pmf(TablePmf((0.0, 0.5, 0.5)), 2) == 0.5
    assert pmf(TablePmf((0.0, 0.5, 0.5)), 7) == 0.0


@pytest.mark.parametrize("k", [1, 2, 5, 12])
def test_geometric_pmf_closed_form(k):
    s = 0.3
    assert pmf(ShiftedGeometric(s), k) == pytest.approx(s * (1 - s) ** (k - 1), rel=1e-14)


def test_pmf_sums_to_one(preset):
    total = math.fsum(p for _, p in preset.support_iter())
    assert abs(total - 1.0) <= 1e-12


def test_moments_examples():
    mg = moments(ShiftedGeometric(0.5))
    assert (mg.m, mg.v2) == (pytest.approx(2.0), pytest.approx(2.0))
    mp = moments(ShiftedPoisson(0.2))
    assert mp.m == pytest.approx(1.2)
    assert mp.v2 == pytest.approx(0.2)
    mb = moments(BinarySplit(1.0))
    assert mb.m == 2.0 and mb.v2 == 0.0


def test_moments_match_scipy_oracle():
    # raw third moment of 1 + Geom0(s) and 1 + Poisson(lam) from scipy's non-central moments
    s, lam = 0.5, 0.2
    geo = sps.geom(s)  # support 1, 2, ...
    assert moments(ShiftedGeometric(s)).raw_moment_2_rho == pytest.approx(geo.moment(3), rel=1e-12)
    pois = sps.poisson(lam, loc=1)
    assert moments(ShiftedPoisson(lam)).raw_moment_2_rho == pytest.approx(pois.moment(3), rel=1e-12)


def test_lyapunov_inequality(preset):
    ms = moments(preset)
    assert ms.abs_moment_2_rho >= ms.v2 ** ((2 + ms.rho) / 2) - 1e-12


def test_rho_carried_through():
    ms = moments(ShiftedGeometric(0.5, rho=0.5))
    assert ms.rho == 0.5
    with pytest.raises(InvalidLaw):
        ShiftedGeometric(0.5, rho=1.5)


@pytest.mark.parametrize("bad", [lambda: ShiftedGeometric(0.0), lambda: ShiftedPoisson(-1),
                                 lambda: BinarySplit(1.2), lambda: TablePmf((0.5, 0.6))])
def test_invalid_laws_rejected(bad):
    with pytest.raises(InvalidLaw):
        bad()


def test_presets_supercritical_with_p0_zero():
    for law in PRESETS.values():
        assert law.m > 1 and law.v > 0 and law.p0 == 0.0


def test_json_round_trip(preset):
    obj = json.loads(json.dumps(preset.to_dict()))
    assert law_from_dict(obj) == preset
    table = TablePmf((0.1, 0.2, 0.7), rho=0.5)
    assert law_from_dict(json.loads(json.dumps(table.to_dict()))) == table


def test_resolve_law_from_file(tmp_path):
    path = tmp_path / "law.json"
    path.write_text(json.dumps({"family": "TablePmf", "params": {"probs": {"2": 1.0}}}))
    law = resolve_law(str(path))
    assert law.m == 2.0 and law.v2 == 0.0
    with pytest.raises(InvalidLaw):
        resolve_law("no-such-preset")


def test_point_mass_samplers(rng):
    assert all(sample_offspring(BinarySplit(0.0), rng) == 1 for _ in range(100))
    assert all(sample_offspring(ShiftedGeometric(1.0), rng) == 1 for _ in range(100))


def test_geometric_sample_mean(rng):
    draws = sample_offspring(ShiftedGeometric(0.5), rng, size=10**6)
    assert 1.995 <= draws.mean() <= 2.005


def test_sample_variance_matches_moments(preset, rng):
    draws = sample_offspring(preset, rng, size=10**6).astype(float)
    v2 = moments(preset).v2
    dev = (draws - draws.mean()) ** 2
    se = dev.std(ddof=1) / math.sqrt(len(dev))
    assert abs(dev.mean() - v2) <= 5 * se


def test_generation_sum_support(rng):
    assert all(sample_generation_sum(ShiftedPoisson(0.2), 5, rng) >= 5 for _ in range(1000))


def test_binary_generation_sum_mean(rng):
    z = 10**6
    ratios = np.array([sample_generation_sum(BinarySplit(0.5), z, rng) / z for _ in range(1000)])
    assert 1.498 <= ratios.mean() <= 1.502


def test_table_cap():
    law = TablePmf((0.0, 0.5, 0.5))
    with pytest.raises(PopulationCapExceeded):
        sample_generation_sum(law, 10**7 + 1, RngStream(1))


@pytest.mark.parametrize("z", [1, 3, 10])
def test_aggregated_sum_matches_explicit_sum(preset, z):
    reps = 10**5
    gen_a, gen_b = RngStream(7, 1), RngStream(7, 2)
    aggregated = np.array([sample_generation_sum(preset, z, gen_a) for _ in range(reps)])
    explicit = sample_offspring(preset, gen_b, size=(reps, z)).sum(axis=1)
    d = sps.ks_2samp(aggregated, explicit).statistic
    crit = 1.628 * math.sqrt(2.0 / reps)  # two-sample KS at alpha = 0.01
    assert d < crit


@pytest.mark.parametrize(
    "law, frozen",
    [
        (ShiftedGeometric(0.5, rho=0.5), sps.geom(0.5)),
        (ShiftedPoisson(0.7, rho=0.3), sps.poisson(0.7, loc=1)),
        (BinarySplit(0.4, rho=0.8), sps.bernoulli(0.4, loc=1)),
    ],
)
def test_fractional_moments_match_scipy_expect(law, frozen):
    ms = moments(law)
    p = 2 + law.rho
    assert ms.abs_moment_2_rho == pytest.approx(frozen.expect(lambda k: abs(k - ms.m) ** p), rel=1e-9)
    assert ms.raw_moment_2_rho == pytest.approx(frozen.expect(lambda k: k ** p), rel=1e-9)
