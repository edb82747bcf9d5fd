import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from distcheck.access import stream
from distcheck.dist import (InstanceSpec, Metric, Pmf, Variant, chi_sq_uniform, distance,
                            make_instance, perturbed_for_chi_sq, perturbed_for_hellinger_sq,
                            perturbed_for_l2, perturbed_hellinger_sq, random_pmf)

ALL = list(Metric)


def pmfs(max_k=12):
    return st.integers(2, max_k).flatmap(
        lambda k: st.lists(st.floats(0.0, 1.0), min_size=k, max_size=k)
        .filter(lambda xs: sum(xs) > 1e-3)
        .map(lambda xs: Pmf(np.asarray(xs) / sum(xs))))


class TestPmf:
    def test_rejects_negative_and_bad_sum(self):
        with pytest.raises(ValueError):
            Pmf([0.5, 0.6, -0.1])
        with pytest.raises(ValueError):
            Pmf([0.5, 0.6])
        with pytest.raises(ValueError):
            Pmf([])

    def test_renormalizes_within_tolerance(self):
        p = Pmf([0.5, 0.5 + 1e-10])
        assert abs(p.probs.sum() - 1) < 1e-12

    def test_immutable(self):
        p = Pmf.uniform(3)
        with pytest.raises(ValueError):
            p.probs[0] = 1.0

    def test_json_round_trip(self):
        p = Pmf([0.1, 0.2, 0.7])
        text = p.to_json()
        assert "\n" not in text
        assert json.loads(text) == [0.1, 0.2, 0.7]
        assert Pmf.from_json(text) == p

    def test_deviations_sum_to_zero(self):
        p = random_pmf(50, stream(0))
        eps = p.deviations()
        assert abs(eps.sum()) < 1e-12
        assert eps.min() >= -1 and eps.max() <= 49

    def test_point_mass(self):
        assert Pmf.point_mass(4, 2).probs.tolist() == [0, 0, 1, 0]


class TestDistance:
    @pytest.mark.parametrize("metric", ALL)
    def test_identity_is_zero(self, metric):
        assert distance(Pmf.uniform(7), Pmf.uniform(7), metric) == 0

    def test_subset_chi_sq(self):
        p = make_instance(8, InstanceSpec(Variant.UNIFORM_SUBSET, 2))
        assert distance(p, Pmf.uniform(8), Metric.CHI_SQ) == pytest.approx(3, abs=1e-12)

    def test_two_point_values(self):
        p, u = Pmf([0.75, 0.25]), Pmf.uniform(2)
        assert distance(p, u, Metric.TV) == pytest.approx(0.25, abs=1e-15)
        # (sqrt(.75) - sqrt(.5))^2 + (sqrt(.25) - sqrt(.5))^2
        assert distance(p, u, Metric.HELLINGER_SQ) == pytest.approx(0.0681483474218634, abs=1e-15)

    def test_kl_orientation(self):
        p, q = Pmf([0.9, 0.1]), Pmf([0.5, 0.5])
        expected = 0.9 * math.log(0.9 / 0.5) + 0.1 * math.log(0.1 / 0.5)
        assert distance(p, q, Metric.KL) == pytest.approx(expected, rel=1e-14)

    def test_zero_conventions(self):
        p, q = Pmf([1.0, 0.0]), Pmf([0.5, 0.5])
        assert distance(q, p, Metric.KL) == math.inf
        assert distance(q, p, Metric.CHI_SQ) == math.inf
        assert distance(p, p, Metric.CHI_SQ) == 0
        assert math.isfinite(distance(p, q, Metric.KL))

    def test_mismatch(self):
        with pytest.raises(ValueError):
            distance(Pmf.uniform(2), Pmf.uniform(3), Metric.TV)

    def test_string_metric_names(self):
        assert distance(Pmf([0.75, 0.25]), Pmf.uniform(2), "tv") == pytest.approx(0.25)

    @given(pmfs(), st.integers(0, 10**6))
    def test_chain_and_ranges(self, p, seed):
        q = random_pmf(p.k, stream(seed))
        tv = distance(p, q, Metric.TV)
        h2 = distance(p, q, Metric.HELLINGER_SQ)
        kl = distance(p, q, Metric.KL)
        chi = distance(p, q, Metric.CHI_SQ)
        assert 0 <= tv <= 1 and 0 <= h2 <= 2
        assert tv * tv <= h2 + 1e-12
        assert h2 <= kl + 1e-12
        assert kl <= chi + 1e-12

    @given(pmfs(), st.integers(0, 10**6))
    def test_symmetry_and_l2_sandwich(self, p, seed):
        q = random_pmf(p.k, stream(seed))
        for m in (Metric.TV, Metric.HELLINGER_SQ, Metric.L2):
            assert distance(p, q, m) == pytest.approx(distance(q, p, m), abs=1e-15)
        l2 = distance(p, q, Metric.L2)
        tv = distance(p, q, Metric.TV)
        assert 0.5 * l2 <= tv + 1e-12
        assert tv <= math.sqrt(p.k) / 2 * l2 + 1e-12

    @given(pmfs())
    def test_chi_sq_uniform_forms_agree(self, p):
        u = Pmf.uniform(p.k)
        c = chi_sq_uniform(p)
        assert c == pytest.approx(distance(p, u, Metric.CHI_SQ), abs=1e-12)
        assert c == pytest.approx(p.k * distance(p, u, Metric.L2) ** 2, abs=1e-12)
        assert 0 <= c <= p.k - 1 + 1e-12


class TestInstances:
    def test_subset(self):
        assert make_instance(4, InstanceSpec(Variant.UNIFORM_SUBSET, 2)).probs.tolist() == [0.5, 0.5, 0, 0]

    def test_perturbed(self):
        p = make_instance(4, InstanceSpec(Variant.PERTURBED_UNIFORM, 0.1))
        assert np.allclose(p.probs, [0.3, 0.2, 0.3, 0.2], atol=1e-15)
        assert distance(p, Pmf.uniform(4), Metric.TV) == pytest.approx(0.1, abs=1e-15)
        assert chi_sq_uniform(p) == pytest.approx(4 * 0.1 ** 2, abs=1e-15)

    def test_rto1(self):
        p = make_instance(6, InstanceSpec(Variant.RTO1_STRING, 3))
        assert np.allclose(p.probs, [0.5, 0.5, 0, 0, 0, 0])
        assert chi_sq_uniform(p) == pytest.approx(2, abs=1e-12)

    def test_spike(self):
        p = make_instance(5, InstanceSpec(Variant.HEAVY_SPIKE, 0.6))
        assert p.probs[0] == pytest.approx(0.6)
        assert np.allclose(p.probs[1:], 0.1)

    @pytest.mark.parametrize("k,r", [(10, 2), (100, 10), (6, 3), (1000, 7)])
    def test_subset_chi_sq(self, k, r):
        p = make_instance(k, InstanceSpec(Variant.UNIFORM_SUBSET, r))
        assert chi_sq_uniform(p) == pytest.approx(k / r - 1, abs=1e-12)

    @pytest.mark.parametrize("spec,k", [
        (InstanceSpec(Variant.PERTURBED_UNIFORM, 0.1), 5),
        (InstanceSpec(Variant.RTO1_STRING, 4), 6),
        (InstanceSpec(Variant.UNIFORM_SUBSET, 9), 8),
    ])
    def test_invalid_for_k(self, spec, k):
        with pytest.raises(ValueError):
            make_instance(k, spec)

    @pytest.mark.parametrize("variant,param", [
        (Variant.PERTURBED_UNIFORM, 0.0), (Variant.PERTURBED_UNIFORM, 0.6),
        (Variant.UNIFORM_SUBSET, 2.5), (Variant.HEAVY_SPIKE, 1.5), (Variant.RTO1_STRING, 1),
        (Variant.HEAVY_SPIKE, None),
    ])
    def test_invalid_params(self, variant, param):
        with pytest.raises(ValueError):
            InstanceSpec(variant, param)

    def test_parse_and_dict(self):
        s = InstanceSpec.parse("subset:5000")
        assert s == InstanceSpec(Variant.UNIFORM_SUBSET, 5000)
        assert s.label == "UniformSubset(5000)"
        assert InstanceSpec.from_dict(s.to_dict()) == s
        assert InstanceSpec.from_dict({"variant": "HeavySpike", "w": 0.9}).param == 0.9
        assert InstanceSpec.parse("PerturbedUniform:0.2").param == 0.2
        with pytest.raises(ValueError):
            InstanceSpec.parse("nonsense:1")

    def test_targeted_members(self):
        k = 1000
        u = Pmf.uniform(k)
        p = make_instance(k, perturbed_for_l2(k, 0.02))
        assert distance(p, u, Metric.L2) == pytest.approx(0.02, rel=1e-12)
        p = make_instance(k, perturbed_for_chi_sq(0.3))
        assert chi_sq_uniform(p) == pytest.approx(0.3, rel=1e-12)
        p = make_instance(k, perturbed_for_hellinger_sq(0.2))
        assert distance(p, u, Metric.HELLINGER_SQ) == pytest.approx(0.2, rel=1e-12)
        assert perturbed_hellinger_sq(0.5) == pytest.approx(0.5 * ((math.sqrt(2) - 1) ** 2 + 1))
        with pytest.raises(ValueError):
            perturbed_for_hellinger_sq(0.7)
