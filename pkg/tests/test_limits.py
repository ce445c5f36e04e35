"""
Testes Unitários - Drift, TCL, LIL, martingal e Lindeberg
"""

import math

import numpy as np
import pytest
from scipy import stats

from src.boundary import parse_boundary_point
from src.dynamics import constant_function, solve_stationary
from src.exceptions import CapabilityError, DomainError, StatisticalError
from src.groups import free_group, free_product, lamplighter
from src.limits import (
    clt_samples,
    drift_formula,
    estimate_drift,
    fit_exponent,
    ks_normality_test,
    lil_checkpoints,
    lil_statistic,
    lil_trace,
    lindeberg_check,
    martingale_check,
    positivity_check,
)
from src.walk import make_rng, parse_measure, uniform_generators


def _srw():
    spec = free_group(2)
    return spec, uniform_generators(spec)


class TestDrift:
    """Testes para a estimativa de Â."""

    def test_srw_drift(self):
        """Testa Â ≈ 1/2 no passeio simples de F₂."""
        spec, mu = _srw()
        estimate = estimate_drift(spec, mu, 200, 400, seed=1)
        assert estimate.drift == pytest.approx(0.5, abs=0.03)
        assert estimate.half_width > 0
        assert not estimate.sublinear

    def test_subadditive_trace(self):
        """Testa (1/k)E|Z_k| em k = 1, 2, 4, … com valor 1 em k = 1."""
        spec, mu = _srw()
        estimate = estimate_drift(spec, mu, 128, 50, seed=2)
        ks = [k for k, _ in estimate.subadditive]
        assert ks == [1, 2, 4, 8, 16, 32, 64, 128]
        assert estimate.subadditive[0][1] == 1.0
        assert estimate.as_dict()["subadditive"][0] == {"k": 1, "value": 1.0}

    def test_too_few_steps(self):
        """Testa n < 100."""
        spec, mu = _srw()
        with pytest.raises(DomainError) as exc_info:
            estimate_drift(spec, mu, 99, 10, seed=0)
        assert exc_info.value.diagnostics["n"] == 99

    def test_asymmetric_rejected(self):
        """Testa medida não simétrica."""
        spec = free_group(2)
        with pytest.raises(DomainError):
            estimate_drift(spec, parse_measure(spec, "a:1/2,b:1/4,b-:1/4"), 200, 10, seed=0)

    def test_lamplighter_is_sublinear(self):
        """Testa o marcador de drift nulo no passeio projetado em ℤ (d ~ √n)."""
        spec = lamplighter()
        estimate = estimate_drift(spec, parse_measure(spec, "t:1/2,t-:1/2"), 1000, 200, seed=3)
        assert estimate.sublinear
        assert estimate.decay_ratio < 0.7

    def test_drift_formula(self):
        """Testa A = 1/2 pela fórmula integral no passeio simples."""
        spec, mu = _srw()
        nu = solve_stationary(spec, mu, 2)
        assert drift_formula(spec, mu, nu) == pytest.approx(0.5, abs=1e-9)


class TestCentralLimit:
    """Testes para amostras do TCL e o teste KS."""

    def test_trivial_samples(self):
        """Testa n = 0 → amostras nulas."""
        spec, mu = _srw()
        result = clt_samples(spec, mu, 0, 5, seed=0)
        assert result.drift_source == "trivial"
        assert np.array_equal(result.samples, np.zeros(5))

    def test_analytic_drift(self):
        """Testa centragem com drift dado."""
        spec, mu = _srw()
        result = clt_samples(spec, mu, 100, 200, seed=4, drift=0.5)
        assert result.drift_source == "analytic"
        assert result.samples.shape == (200,)
        assert abs(result.mean) < 1.0

    def test_independent_drift(self):
        """Testa Â estimado em bloco independente."""
        spec, mu = _srw()
        result = clt_samples(spec, mu, 100, 50, seed=4)
        assert result.drift_source == "independent"
        assert result.drift == pytest.approx(0.5, abs=0.1)

    def test_ks_accepts_normal_quantiles(self):
        """Testa quantis exatos de N(0, σ²) → p alto."""
        sigma = math.sqrt(0.75)
        samples = stats.norm.ppf((np.arange(400) + 0.5) / 400, scale=sigma)
        result = ks_normality_test(samples, sigma)
        assert result.p_value > 0.9
        assert result.samples == 400

    def test_ks_calibration_at_threshold(self):
        """Testa p > 0.01 em pelo menos 95 de 100 lotes de 2000 normais exatas."""
        sigma = math.sqrt(0.75)
        accepted = sum(
            ks_normality_test(make_rng(31, run).normal(0.0, sigma, 2000), sigma).p_value > 0.01
            for run in range(100)
        )
        assert accepted >= 95

    def test_ks_rejection_rate_near_alpha(self):
        """Testa taxa de rejeição perto de α = 0.05 sob a hipótese nula."""
        rejected = sum(
            ks_normality_test(make_rng(32, run).normal(0.0, 1.0, 200), 1.0).p_value < 0.05
            for run in range(200)
        )
        assert 2 <= rejected <= 20

    def test_ks_rejects_wrong_scale(self):
        """Testa σ muito menor que o das amostras."""
        samples = stats.norm.ppf((np.arange(400) + 0.5) / 400, scale=2.0)
        assert ks_normality_test(samples, 0.5).p_value < 1e-6

    def test_ks_too_few_samples(self):
        """Testa menos de 100 amostras."""
        with pytest.raises(StatisticalError) as exc_info:
            ks_normality_test(np.linspace(-1, 1, 50), 1.0)
        assert exc_info.value.diagnostics["samples"] == 50
        assert exc_info.value.exit_code == 2

    def test_ks_constant_samples(self):
        """Testa amostras degeneradas."""
        with pytest.raises(StatisticalError):
            ks_normality_test(np.zeros(200), 1.0)

    def test_ks_sigma_positive(self):
        """Testa σ ≤ 0."""
        with pytest.raises(DomainError):
            ks_normality_test(np.linspace(-1, 1, 200), 0.0)


class TestIteratedLogarithm:
    """Testes para a estatística do LIL."""

    def test_checkpoints(self):
        """Testa grade geométrica entre 1000 e n_max."""
        points = lil_checkpoints(100_000)
        assert points[0] == 1000
        assert points[-1] == 100_000
        assert np.all(np.diff(points) > 0)
        with pytest.raises(DomainError):
            lil_checkpoints(999)

    def test_statistic_exact_drift(self):
        """Testa d = n·A → estatística nula nas duas normalizações."""
        points = np.array([1000, 5000, 20000])
        plain, sqrt2 = lil_statistic(0.5 * points[None, :], points, 0.5)
        assert np.all(plain == 0.0)
        assert np.all(sqrt2 == 0.0)

    def test_statistic_ratio(self):
        """Testa razão √2 entre as normalizações."""
        points = np.array([1000, 8000])
        plain, sqrt2 = lil_statistic(np.array([[600.0, 4300.0]]), points, 0.5)
        assert np.allclose(plain, math.sqrt(2.0) * sqrt2)

    def test_trace_shapes(self):
        """Testa formas e linhas exportáveis para duas sementes."""
        spec, mu = _srw()
        trace = lil_trace(spec, mu, 5000, seed=7, sigma=math.sqrt(0.75), drift=0.5, seeds=2)
        count = len(trace.checkpoints)
        assert trace.plain.shape == (2, count)
        assert trace.seeds == [7, 8]
        assert len(trace.rows()) == 2 * count
        assert trace.envelope == pytest.approx((0.3 * math.sqrt(0.75), 3.0 * math.sqrt(0.75)))
        assert np.all(np.diff(trace.running_max_sqrt2, axis=1) >= 0)

    def test_wrong_drift_diverges(self):
        """Testa o detector de divergência com drift zero no passeio simples."""
        spec, mu = _srw()
        trace = lil_trace(spec, mu, 20_000, seed=1, sigma=math.sqrt(0.75), drift=0.0)
        assert trace.diverging
        assert not trace.within_envelope


class TestMartingale:
    """Testes para os incrementos martingais e Lindeberg."""

    def test_srw_increments(self):
        """Testa u ≡ 0, A = 1/2: incrementos em {1/2, −3/2} com média condicional nula."""
        spec, mu = _srw()
        u = constant_function(spec, 1, 0.0)
        h = parse_boundary_point(spec, "(a)")
        report = martingale_check(spec, mu, u, 0.5, h, trajectories=200, n=50, seed=3)
        assert len(report.bins) == 4
        assert sum(row["count"] for row in report.bins) == 200 * 50
        assert set(np.unique(report.increments)) <= {0.5, -1.5}
        assert report.max_z <= 5.0

    def test_sparse_cylinder(self):
        """Testa StatisticalError com ocupação mínima inatingível."""
        spec, mu = _srw()
        u = constant_function(spec, 1, 0.0)
        h = parse_boundary_point(spec, "(a)")
        with pytest.raises(StatisticalError) as exc_info:
            martingale_check(spec, mu, u, 0.5, h, trajectories=2, n=5, seed=0, min_occupancy=1000)
        assert exc_info.value.diagnostics["minimum"] == 1000

    def test_free_product_rejected(self):
        """Testa grupo não livre."""
        spec = free_product([2, 3])
        with pytest.raises(CapabilityError):
            martingale_check(spec, uniform_generators(spec), None, 0.5, None, 1, 1, 0)

    def test_lindeberg_terms(self):
        """Testa o termo empírico e o cruzamento ⌈(B/ε)²⌉."""
        rows = lindeberg_check([1.5, -0.5, -0.5, -0.5], eps_grid=(0.5,), n_grid=(1, 10))
        assert rows[0]["term"] == pytest.approx(2.25 / 4)
        assert rows[0]["crossover"] == 9
        assert rows[1]["term"] == 0.0
        assert not rows[0]["bound_violated"]

    def test_lindeberg_bound_violated(self):
        """Testa incremento acima da cota declarada."""
        rows = lindeberg_check([1.5, -0.5], eps_grid=(1.0,), n_grid=(1,), bound=1.0)
        assert rows[0]["bound_violated"]
        assert rows[0]["crossover"] == 1


class TestGrowthAndPositivity:
    """Testes para o expoente de crescimento e a positividade do drift."""

    def test_fit_linear(self):
        """Testa inclinação 1 para médias proporcionais a n."""
        fit = fit_exponent([10, 100, 1000], [5.0, 50.0, 500.0])
        assert fit.slope == pytest.approx(1.0)
        assert fit.intercept == pytest.approx(math.log(0.5))

    def test_fit_square_root(self):
        """Testa inclinação 1/2 para √n."""
        grid = [16, 64, 256, 1024]
        fit = fit_exponent(grid, [math.sqrt(n) for n in grid])
        assert fit.slope == pytest.approx(0.5)

    def test_fit_requires_positive_means(self):
        """Testa médias nulas e grade curta."""
        with pytest.raises(DomainError):
            fit_exponent([10, 100], [0.0, 1.0])
        with pytest.raises(DomainError):
            fit_exponent([10], [1.0])

    def test_positivity_srw(self):
        """Testa drift positivo e ínfimo por cilindro positivo em F₂."""
        spec, mu = _srw()
        finding = positivity_check(spec, mu, 200, 200, seed=5)
        assert finding.passed
        assert finding.check == "positivity"
        assert "cilindro" in finding.detail

    def test_positivity_lamplighter_rejected(self):
        """Testa grupo não hiperbólico."""
        spec = lamplighter()
        with pytest.raises(CapabilityError):
            positivity_check(spec, uniform_generators(spec), 200, 10, seed=0)
