"""
Testes Unitários - Medida estacionária, operador de transferência e Poisson
"""

import math

import numpy as np
import pytest

from src.boundary import parse_boundary_point
from src.dynamics import (
    apply_P,
    constant_function,
    consistency_deviation,
    cylinder_space,
    depth_sensitivity,
    drift_from_measure,
    duality_defect,
    empirical_stationary,
    holder_seminorm,
    indicator,
    left_multiply_cells,
    project_depth,
    proximality_frontier,
    proximality_integral,
    psi,
    random_boundary_pairs,
    sigma_squared_formula,
    solve_poisson,
    solve_stationary,
    spectral_radius_estimate,
    stationarity_defect,
)
from src.exceptions import CapabilityError, DomainError, StatisticalError
from src.green import green_letter_metric, letter_first_passage
from src.groups import free_group, lamplighter, parse_word
from src.limits import clt_samples
from src.walk import parse_measure, uniform_generators

BIASED = "a:3/8,a-:3/8,b:1/8,b-:1/8"


def _f2():
    return free_group(2)


def _word(text):
    return parse_word(_f2(), text).word


class TestCylinders:
    """Testes para espaços de cilindros e multiplicação à esquerda."""

    def test_sizes(self):
        """Testa 2k·(2k−1)^{m−1} células."""
        assert cylinder_space(_f2(), 1).size == 4
        assert cylinder_space(_f2(), 2).size == 12
        assert cylinder_space(_f2(), 3).size == 36

    def test_index_and_label(self):
        """Testa o índice de uma palavra e o rótulo de volta."""
        space = cylinder_space(_f2(), 2)
        i = space.index_of_word(_word("b.a"))
        assert space.label(i) == "b.a"
        with pytest.raises(DomainError):
            space.index_of_word([1, 2])

    def test_left_multiply_cancel(self):
        """Testa a·(a⁻¹ b b …) = b b …"""
        cells = np.array([_word("a-.b.b")])
        out = left_multiply_cells(_f2(), _word("a"), cells, 2)
        assert tuple(out[0]) == _word("b.b")

    def test_left_multiply_partial(self):
        """Testa (a b)·(b⁻¹ a …) = a a …"""
        cells = np.array([_word("b-.a.a.a")])
        out = left_multiply_cells(_f2(), _word("a.b"), cells, 2)
        assert tuple(out[0]) == _word("a.a")

    def test_left_multiply_needs_depth(self):
        """Testa profundidade insuficiente."""
        cells = np.array([_word("b.b")])
        with pytest.raises(DomainError):
            left_multiply_cells(_f2(), _word("a"), cells, 2)

    def test_non_free_rejected(self):
        """Testa que cilindros só existem para grupos livres."""
        with pytest.raises(CapabilityError):
            cylinder_space(lamplighter(), 2)


class TestStationaryMeasure:
    """Testes para ν = μ∗ν."""

    def test_uniform(self):
        """Testa ν = 1/4 (m=1) e 1/12 (m=2) no passeio simples."""
        spec = _f2()
        mu = uniform_generators(spec)
        assert np.allclose(solve_stationary(spec, mu, 1).probabilities, 0.25, atol=1e-9)
        nu = solve_stationary(spec, mu, 2)
        assert np.allclose(nu.probabilities, 1 / 12, atol=1e-9)
        assert nu.mass(_word("a.b.a")) == pytest.approx(1 / 36, abs=1e-9)

    def test_biased_matches_first_passage(self):
        """Testa ν([s]) = F(e,s)/(1 + F(e,s)) para μ simétrica de vizinhos."""
        spec = _f2()
        mu = parse_measure(spec, BIASED)
        nu = solve_stationary(spec, mu, 1)
        F = letter_first_passage(spec, mu)
        for label in ("a", "a-", "b", "b-"):
            s = _word(label)[0]
            assert nu.mass((s,)) == pytest.approx(F[s] / (1 + F[s]), abs=1e-8)
        assert nu.mass(_word("a")) > nu.mass(_word("b"))

    def test_defects(self):
        """Testa estacionariedade, consistência e dualidade."""
        spec = _f2()
        mu = parse_measure(spec, BIASED)
        nu = solve_stationary(spec, mu, 3)
        assert stationarity_defect(spec, mu, nu) <= 1e-9
        assert consistency_deviation(nu) <= 1e-9
        phi = indicator(spec, _word("a.b"), 3)
        assert duality_defect(spec, mu, phi, nu) <= 1e-9

    def test_requirements(self):
        """Testa grupo, simetria, elementaridade e profundidade."""
        spec = _f2()
        with pytest.raises(CapabilityError):
            solve_stationary(lamplighter(), uniform_generators(lamplighter()), 2)
        with pytest.raises(DomainError):
            solve_stationary(spec, parse_measure(spec, "a:1/2,b:1/4,b-:1/4"), 2)
        with pytest.raises(DomainError):
            solve_stationary(spec, parse_measure(spec, "a:1/2,a-:1/2"), 2)
        with pytest.raises(DomainError):
            solve_stationary(spec, uniform_generators(spec), 0)

    def test_nearest_neighbour_is_exact(self):
        """Testa a marca de exatidão para μ de vizinhos mais próximos."""
        spec = _f2()
        nu = solve_stationary(spec, parse_measure(spec, BIASED), 2)
        assert nu.exact
        assert nu.diagnostics()["exact"] is True

    def test_longer_support_marked_approximate(self):
        """Testa ν com suporte de comprimento 2 marcada como aproximação."""
        spec = _f2()
        mu = parse_measure(spec, "a.b:1/4,b-.a-:1/4,a:1/4,a-:1/4")
        nu = solve_stationary(spec, mu, 2)
        assert not nu.exact
        diagnostics = nu.diagnostics()
        assert diagnostics["exact"] is False
        assert diagnostics["chain_depth"] == 2
        assert nu.residual < 1e-9

    def test_empirical(self):
        """Testa frequências uniformes contra ν do passeio simples."""
        spec = _f2()
        nu = solve_stationary(spec, uniform_generators(spec), 2)
        prefixes = np.repeat(cylinder_space(spec, 2).words, 10, axis=0)
        freq, tv = empirical_stationary(spec, prefixes, 2, nu)
        assert np.allclose(freq, 1 / 12)
        assert tv == pytest.approx(0.0, abs=1e-9)

    def test_empirical_too_few_rays(self):
        """Testa StatisticalError com poucos raios."""
        prefixes = cylinder_space(_f2(), 2).words
        with pytest.raises(StatisticalError) as exc_info:
            empirical_stationary(_f2(), prefixes, 2)
        assert exc_info.value.diagnostics["rays"] == 12


class TestTransferOperator:
    """Testes para P e a projeção."""

    def test_indicator_table(self):
        """Testa Π(P·1_[a]) = (1/3, 0, 1/3, 1/3) com zero em [a⁻¹]."""
        spec = _f2()
        mu = uniform_generators(spec)
        nu = solve_stationary(spec, mu, 2)
        projected = project_depth(apply_P(spec, mu, indicator(spec, _word("a"), 1)), nu, 1)
        expected = np.full(4, 1 / 3)
        expected[projected.space.index_of_word(_word("a-"))] = 0.0
        assert np.allclose(projected.values, expected, atol=1e-9)

    def test_constants_fixed(self):
        """Testa P1 = 1."""
        spec = _f2()
        mu = parse_measure(spec, BIASED)
        out = apply_P(spec, mu, constant_function(spec, 2, 1.0))
        assert out.depth == 3
        assert np.allclose(out.values, 1.0)

    def test_depth_mismatch(self):
        """Testa projeção para profundidade maior."""
        spec = _f2()
        nu = solve_stationary(spec, uniform_generators(spec), 2)
        with pytest.raises(DomainError):
            project_depth(indicator(spec, _word("a"), 1), nu, 2)

    def test_holder_seminorm(self):
        """Testa seminorma nula para constantes e 1 para 1_[a] em profundidade 1."""
        spec = _f2()
        assert holder_seminorm(constant_function(spec, 2, 3.0)) == 0.0
        assert holder_seminorm(indicator(spec, _word("a"), 1)) == 1.0


class TestPoissonAndVariance:
    """Testes para ψ, Poisson e σ²."""

    def test_srw_variance(self):
        """Testa A = 1/2, u ≡ 0 e σ² = 3/4 no passeio simples."""
        spec = _f2()
        mu = uniform_generators(spec)
        nu = solve_stationary(spec, mu, 2)
        A = drift_from_measure(spec, mu, nu)
        assert A == pytest.approx(0.5, abs=1e-12)
        solution = solve_poisson(spec, mu, psi(spec, mu, A, 2), nu)
        assert np.abs(solution.u.values).max() <= 1e-12
        variance = sigma_squared_formula(spec, mu, nu, solution.u, A)
        assert variance.sigma_squared == pytest.approx(0.75, abs=1e-6)
        assert not variance.degenerate

    def test_green_drift(self):
        """Testa A = (log 3)/2 na métrica de Green."""
        spec = _f2()
        mu = uniform_generators(spec)
        nu = solve_stationary(spec, mu, 2)
        A = drift_from_measure(spec, mu, nu, green_letter_metric(spec, mu))
        assert A == pytest.approx(math.log(3.0) / 2, abs=1e-9)

    def test_biased_poisson(self):
        """Testa resíduo pequeno e τ̂ < 1 para medida enviesada."""
        spec = _f2()
        mu = parse_measure(spec, BIASED)
        nu = solve_stationary(spec, mu, 3)
        A = drift_from_measure(spec, mu, nu)
        solution = solve_poisson(spec, mu, psi(spec, mu, A, 3), nu)
        assert solution.residual <= 1e-6
        assert solution.tau_hat < 1.0
        assert abs(nu.integrate(solution.u)) <= 1e-9
        variance = sigma_squared_formula(spec, mu, nu, solution.u, A)
        assert variance.sigma_squared > 0.0

    def test_biased_variance_matches_samples(self):
        """Testa σ² da fórmula contra a variância amostral de (d − nA)/√n."""
        spec = _f2()
        mu = parse_measure(spec, BIASED)
        nu = solve_stationary(spec, mu, 6)
        A = drift_from_measure(spec, mu, nu)
        solution = solve_poisson(spec, mu, psi(spec, mu, A, 6), nu)
        sigma2 = sigma_squared_formula(spec, mu, nu, solution.u, A).sigma_squared
        samples = clt_samples(spec, mu, 1000, 1000, seed=17, drift=A)
        assert samples.variance == pytest.approx(sigma2, rel=0.2)

    def test_psi_not_mean_zero(self):
        """Testa ψ com média não nula (A errado)."""
        spec = _f2()
        mu = uniform_generators(spec)
        nu = solve_stationary(spec, mu, 2)
        with pytest.raises(DomainError) as exc_info:
            solve_poisson(spec, mu, psi(spec, mu, 0.4, 2), nu)
        assert exc_info.value.diagnostics["psi_mean"] == pytest.approx(0.1)

    def test_psi_depth(self):
        """Testa ψ em profundidade menor que o suporte."""
        spec = _f2()
        mu = parse_measure(spec, "a.b:1/4,b-.a-:1/4,a:1/4,a-:1/4")
        with pytest.raises(DomainError):
            psi(spec, mu, 0.0, 1)

    def test_spectral_estimate(self):
        """Testa τ̂ < 1 e m ≥ 2."""
        spec = _f2()
        mu = parse_measure(spec, BIASED)
        estimate = spectral_radius_estimate(spec, mu, 3)
        assert 0.0 <= estimate.tau_hat < 1.0
        with pytest.raises(DomainError):
            spectral_radius_estimate(spec, mu, 1)

    def test_depth_sensitivity_srw(self):
        """Testa diferenças nulas entre m e m + 2 no passeio simples."""
        spec = _f2()
        result = depth_sensitivity(spec, uniform_generators(spec), 2)
        assert result["drift_difference"] <= 1e-9
        assert result["u_sup_difference"] <= 1e-9
        assert result["sigma_squared_difference"] <= 1e-6


class TestProximality:
    """Testes para a integral de proximalidade."""

    def test_exact_pair(self):
        """Testa (a^∞, b^∞) com n = 1: (1 + e^{−α})/2."""
        spec = _f2()
        pair = (parse_boundary_point(spec, "(a)"), parse_boundary_point(spec, "(b)"))
        value = proximality_integral(spec, uniform_generators(spec), 1, 0.2, [pair])
        assert value == pytest.approx((1 + math.exp(-0.2)) / 2)

    def test_invalid_arguments(self):
        """Testa α ≤ 0 e ξ = η."""
        spec = _f2()
        mu = uniform_generators(spec)
        xi = parse_boundary_point(spec, "(a)")
        with pytest.raises(DomainError):
            proximality_integral(spec, mu, 1, 0.0, [(xi, parse_boundary_point(spec, "(b)"))])
        with pytest.raises(DomainError):
            proximality_integral(spec, mu, 1, 0.1, [(xi, xi)])

    def test_random_pairs(self):
        """Testa pares distintos e determinísticos pela semente."""
        spec = _f2()
        pairs = random_boundary_pairs(spec, 10, seed=4)
        assert len(pairs) == 10
        assert all(xi != eta for xi, eta in pairs)
        assert pairs == random_boundary_pairs(spec, 10, seed=4)

    def test_frontier_grid(self):
        """Testa a grade (α, n) da fronteira de proximalidade."""
        spec = _f2()
        pairs = random_boundary_pairs(spec, 3, seed=1)
        rows = proximality_frontier(spec, uniform_generators(spec), pairs, alphas=(0.1, 0.2), steps=(1, 2))
        assert len(rows) == 4
        assert {(r["alpha"], r["n"]) for r in rows} == {(0.1, 1), (0.2, 1), (0.1, 2), (0.2, 2)}
        assert all(r["value"] > 0 for r in rows)
