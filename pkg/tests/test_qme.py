import math
from fractions import Fraction

import numpy as np
import pytest

from distcheck.access import SourceCode, code_from_pmf, stream
from distcheck.dist import Pmf, random_pmf
from distcheck.qme import (Backend, NoiseMode, QmeConfig, Rv, exact_moments, ideal_cost,
                           mean_and_variance, mom_batches, mom_cost, qme_estimate)

MODES = [(NoiseMode.ZERO, 0.0), (NoiseMode.UNIFORM, 0.0), (NoiseMode.ADV_HIGH, 0.0),
         (NoiseMode.ADV_LOW, 0.0), (NoiseMode.ADV_TOWARDS, -3.0)]


def half_indicator(k):
    return Rv.indicator(k, np.arange(k // 2))


class TestRv:
    def test_table_and_lookup(self):
        Y = Rv(5, -1.0, [1, 3], [2.0, 4.0])
        assert Y.table().tolist() == [-1, 2, -1, 4, -1]
        assert Y([3, 0, 1]).tolist() == [4, -1, 2]

    def test_validation(self):
        with pytest.raises(ValueError):
            Rv(3, 0.0, [0, 3], [1.0, 1.0])
        with pytest.raises(ValueError):
            Rv(3, 0.0, [0], [1.0, 2.0])

    def test_sparse_moments_match_dense(self):
        p = random_pmf(30, stream(1))
        Y = Rv(30, 0.5, [2, 7, 9], [3.0, -1.0, 10.0])
        dense = Y.table()
        m1, m2 = Y.moments(p.probs)
        assert m1 == pytest.approx(np.dot(p.probs, dense), rel=1e-13)
        assert m2 == pytest.approx(np.dot(p.probs, dense ** 2), rel=1e-13)

    def test_exact_moments_with_fractions(self):
        p = [Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)]
        Y = Rv.from_table(np.array([Fraction(0), Fraction(3), Fraction(6)], dtype=object))
        mu, var = mean_and_variance(p, Y)
        assert mu == 2 and var == Fraction(1 * 9, 3) + Fraction(36, 6) - 4


class TestExactMoments:
    def test_constant(self):
        mu, sigma = exact_moments(random_pmf(6, stream(2)), Rv(6, 3.5))
        assert mu == pytest.approx(3.5) and sigma == 0

    def test_bernoulli(self):
        assert exact_moments(Pmf([0.5, 0.5]), Rv.from_table([0.0, 1.0])) == (0.5, 0.5)

    def test_uniform_all_distinct(self):
        k, n = 100, 5
        Y = Rv(k, -1.0, np.arange(n), np.full(n, k / n - 1))
        mu, sigma = exact_moments(Pmf.uniform(k), Y)
        assert mu == pytest.approx(0, abs=1e-15)
        assert sigma == pytest.approx(math.sqrt(k / n - 1), rel=1e-14)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            exact_moments(Pmf.uniform(3), Rv(4))


class TestConfig:
    def test_parse_noise(self):
        assert QmeConfig.parse_noise("adv-to:0.5") == (NoiseMode.ADV_TOWARDS, 0.5)
        assert QmeConfig.parse_noise("uniform") == (NoiseMode.UNIFORM, 0.0)
        with pytest.raises(ValueError):
            QmeConfig.parse_noise("adv-to")
        with pytest.raises(ValueError):
            QmeConfig.parse_noise("loud")

    @pytest.mark.parametrize("kw", [{"n": 0}, {"delta": 0.5}, {"delta": 0.0}, {"cost_constant": 0}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            QmeConfig(**kw)

    def test_cost_formulas(self):
        assert ideal_cost(10, 0.001) == 100
        assert ideal_cost(10, 0.001, 3) == 300
        assert ideal_cost(7, 1 / 600) == 70
        assert mom_batches(0.01) == 37
        assert mom_cost(10, 0.01) == 3700
        assert QmeConfig(n=4, delta=0.25, backend=Backend.MOM).declared_cost() == 16 * 12


class TestIdeal:
    @pytest.mark.parametrize("mode,target", MODES)
    def test_zero_variance_is_exact(self, mode, target):
        code = code_from_pmf(random_pmf(5, stream(3)), 0)
        est = qme_estimate(code, Rv(5, 2.25), QmeConfig(n=3, noise=mode, target=target))
        assert est.value == 2.25

    def test_adv_high_half_indicator(self):
        code = code_from_pmf(Pmf.uniform(10), 0)
        est = qme_estimate(code, half_indicator(10), QmeConfig(n=10, noise=NoiseMode.ADV_HIGH),
                           rng=stream(1))
        assert est.value == pytest.approx(0.55, abs=1e-15)
        assert not est.failed

    def test_modes_land_in_band(self):
        code = code_from_pmf(Pmf.uniform(10), 0)
        Y = half_indicator(10)
        vals = {}
        for mode, target in MODES + [(NoiseMode.ADV_TOWARDS, 0.52)]:
            est = qme_estimate(code, Y, QmeConfig(n=10, noise=mode, target=target), rng=stream(4))
            vals[(mode, target)] = est.value
            assert abs(est.value - 0.5) <= 0.05 + 1e-15
        assert vals[(NoiseMode.ZERO, 0.0)] == 0.5
        assert vals[(NoiseMode.ADV_LOW, 0.0)] == pytest.approx(0.45)
        assert vals[(NoiseMode.ADV_TOWARDS, -3.0)] == pytest.approx(0.45)
        assert vals[(NoiseMode.ADV_TOWARDS, 0.52)] == pytest.approx(0.52)

    def test_charges_declared_cost_without_drawing(self):
        code = code_from_pmf(Pmf.uniform(10), 0)
        cfg = QmeConfig(n=25, delta=0.001, cost_constant=2)
        est = qme_estimate(code, half_indicator(10), cfg, label="qme")
        assert est.charged_uses == 2 * 25 * 10 == code.code_uses
        assert code.ledger.breakdown == {"qme": 500}

    def test_failure_sample(self):
        code = code_from_pmf(Pmf.uniform(10), 0)
        cfg = QmeConfig(n=10, delta=0.49, noise=NoiseMode.ZERO)
        seen = set()
        for t in range(200):
            est = qme_estimate(code, half_indicator(10), cfg, rng=stream(t))
            seen.add(est.failed)
            if est.failed:
                assert est.value == pytest.approx(0.5 + 10 * 0.05)
            else:
                assert est.value == 0.5
        assert seen == {True, False}

    def test_doubling_n_halves_band(self):
        code = code_from_pmf(random_pmf(8, stream(5)), 0)
        Y = Rv.from_table(np.arange(8.0))
        mu, _ = exact_moments(code.truth, Y)
        for mode in (NoiseMode.UNIFORM, NoiseMode.ADV_HIGH, NoiseMode.ADV_LOW):
            a = qme_estimate(code, Y, QmeConfig(n=6, noise=mode), rng=stream(9)).value - mu
            b = qme_estimate(code, Y, QmeConfig(n=12, noise=mode), rng=stream(9)).value - mu
            assert b == pytest.approx(a / 2, rel=1e-12)

    def test_refuses_code_without_truth(self):
        code = SourceCode(2, lambda rng, n: rng.integers(0, 2, n), 0)
        with pytest.raises(ValueError):
            qme_estimate(code, Rv(2), QmeConfig())

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            qme_estimate(code_from_pmf(Pmf.uniform(3), 0), Rv(4), QmeConfig())


class TestMedianOfMeans:
    def test_constant_exact(self):
        code = code_from_pmf(random_pmf(4, stream(6)), 0)
        est = qme_estimate(code, Rv(4, 0.1), QmeConfig(n=3, delta=0.1, backend=Backend.MOM))
        assert est.value == 0.1

    def test_charges_actual_draws(self):
        code = code_from_pmf(Pmf.uniform(10), 0)
        cfg = QmeConfig(n=7, delta=0.05, backend=Backend.MOM)
        est = qme_estimate(code, half_indicator(10), cfg)
        assert est.charged_uses == code.code_uses == 49 * math.ceil(8 * math.log(20))

    def test_works_without_truth(self):
        code = SourceCode(2, lambda rng, n: rng.integers(0, 2, n), stream(1))
        est = qme_estimate(code, Rv.from_table([0.0, 1.0]), QmeConfig(n=20, backend=Backend.MOM))
        assert abs(est.value - 0.5) < 0.05

    def test_bernoulli_failure_rate(self):
        code = code_from_pmf(Pmf.uniform(10), stream(11))
        cfg = QmeConfig(n=10, delta=0.01, backend=Backend.MOM)
        bad = sum(abs(qme_estimate(code, half_indicator(10), cfg).value - 0.5) > 0.05
                  for _ in range(1000))
        assert bad / 1000 <= 0.01 + 3 * math.sqrt(0.01 * 0.99 / 1000)


@pytest.mark.parametrize("backend,mode", [(Backend.IDEAL, NoiseMode.UNIFORM),
                                          (Backend.IDEAL, NoiseMode.ADV_HIGH),
                                          (Backend.MOM, NoiseMode.ZERO)])
def test_contract_on_random_instances(backend, mode):
    delta, reps = 0.05, 1000
    rng = stream(21, 0, backend.value + mode.value)
    fails = 0
    for t in range(reps):
        k = int(rng.integers(2, 12))
        p = random_pmf(k, rng)
        Y = Rv.from_table(rng.normal(size=k))
        n = int(rng.integers(1, 8))
        code = code_from_pmf(p, stream(21, t, "code"))
        est = qme_estimate(code, Y, QmeConfig(n=n, delta=delta, backend=backend, noise=mode),
                           rng=stream(21, t, "qme"))
        mu, sigma = exact_moments(p, Y)
        fails += abs(est.value - mu) > sigma / n + 1e-12
    assert fails / reps <= delta + 3 * math.sqrt(delta * (1 - delta) / reps)
