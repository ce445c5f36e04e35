"""
Testes Unitários - Fronteira da árvore, horofunções e identidade de cociclo
"""

import math

import pytest

from src.boundary import (
    BoundaryPoint,
    Horofunction,
    boundary_action,
    boundary_gromov_product,
    boundary_point,
    busemann_vs_distance,
    estimate_delta,
    gromov_busemann_cocycle,
    gromov_product,
    horofunction_eval,
    parse_boundary_point,
    ray_convergence,
    word_distance,
)
from src.exceptions import CapabilityError, ConfigError, DomainError, PrecisionError
from src.green import green_letter_metric
from src.groups import ball_list, free_group, free_product, generators, identity, invert, multiply, parse_word, word_length
from src.walk import Trajectory, make_rng, sample_trajectory, uniform_generators


def _f2():
    return free_group(2)


def _w(text):
    return parse_word(_f2(), text)


class TestBoundaryPoints:
    """Testes para representação de pontos de fronteira."""

    def test_parse_periodic(self):
        """Testa 'a.(b)' = ab^∞ e '(a)' = a^∞."""
        spec = _f2()
        xi = parse_boundary_point(spec, "a.(b)")
        assert xi.prefix == _w("a").word
        assert xi.period == _w("b").word
        assert xi.letters(4) == _w("a.b.b.b").word
        assert xi.text() == "a.(b)"
        assert parse_boundary_point(spec, "(a)").text() == "(a)"
        assert math.isinf(xi.depth)

    def test_canonical_form(self):
        """Testa cabeça mínima e período primitivo."""
        spec = _f2()
        a = _w("a").word
        assert boundary_point(spec, a, a) == parse_boundary_point(spec, "(a)")
        assert boundary_point(spec, (), a + a) == parse_boundary_point(spec, "(a)")
        assert boundary_point(spec, _w("b.a.b").word, _w("a.b").word) == parse_boundary_point(spec, "b.(a.b)")

    def test_cylinder(self):
        """Testa ponto por prefixo e PrecisionError além da profundidade."""
        xi = parse_boundary_point(_f2(), "a.b")
        assert not xi.is_periodic
        assert xi.depth == 2
        with pytest.raises(PrecisionError) as exc_info:
            xi.letters(3)
        assert exc_info.value.diagnostics["depth"] == 2

    def test_not_reduced(self):
        """Testa padrões que não são palavras reduzidas infinitas."""
        spec = _f2()
        with pytest.raises(DomainError):
            boundary_point(spec, (), _w("a").word + _w("a-").word)
        with pytest.raises(DomainError):
            boundary_point(spec, _w("a-").word, _w("a").word)
        with pytest.raises(DomainError):
            BoundaryPoint(spec, (1, 2))

    def test_missing_parenthesis(self):
        """Testa ponto malformado."""
        with pytest.raises(ConfigError):
            parse_boundary_point(_f2(), "a.(b")

    def test_only_free_groups(self):
        """Testa que a fronteira exata só existe em grupos livres."""
        with pytest.raises(CapabilityError):
            BoundaryPoint(free_product([2, 3]), (1,))


class TestGromovProducts:
    """Testes para produtos de Gromov e δ."""

    def test_gromov_product_inside(self):
        """Testa (a, b)_e = 0 e (ab, aa)_e = 1."""
        d = word_distance(_f2())
        e = identity(_f2())
        assert gromov_product(d, _w("a"), _w("b"), e) == 0.0
        assert gromov_product(d, _w("a.b"), _w("a.a"), e) == 1.0

    def test_tree_is_zero_hyperbolic(self):
        """Testa δ̂ = 0 na bola de raio 3 de F₂."""
        spec = _f2()
        assert estimate_delta(spec, word_distance(spec), ball_list(spec, 3)) == 0.0

    def test_sampled_delta(self):
        """Testa δ̂ = 0 com amostragem da bola de raio 4."""
        spec = _f2()
        assert estimate_delta(spec, word_distance(spec), ball_list(spec, 4), sample_size=40, seed=3) == 0.0

    def test_delta_needs_four_points(self):
        """Testa menos de 4 pontos."""
        spec = _f2()
        with pytest.raises(DomainError):
            estimate_delta(spec, word_distance(spec), ball_list(spec, 0))

    def test_boundary_product(self):
        """Testa (a^∞, ab^∞)_e = 1."""
        spec = _f2()
        xi = parse_boundary_point(spec, "(a)")
        eta = parse_boundary_point(spec, "a.(b)")
        assert boundary_gromov_product(xi, eta) == 1.0

    def test_boundary_product_same_point(self):
        """Testa ξ = η."""
        xi = parse_boundary_point(_f2(), "(a)")
        with pytest.raises(DomainError):
            boundary_gromov_product(xi, xi)

    def test_boundary_product_insufficient_depth(self):
        """Testa cilindros que concordam em toda a profundidade."""
        spec = _f2()
        with pytest.raises(PrecisionError):
            boundary_gromov_product(parse_boundary_point(spec, "a.b"), parse_boundary_point(spec, "a.b.a"))


class TestHorofunctions:
    """Testes para horofunções e ação na fronteira."""

    def test_examples(self):
        """Testa h_{a^∞}(e) = 0, h(a) = −1, h(b) = 1 e h(a.a.b) = −1."""
        h = Horofunction(parse_boundary_point(_f2(), "(a)"))
        assert h(identity(_f2())) == 0.0
        assert h(_w("a")) == -1.0
        assert h(_w("b")) == 1.0
        assert h(_w("a.a.b")) == -1.0

    def test_green_metric_scale(self):
        """Testa h_{a^∞}(a) = −log 3 na métrica de Green do passeio simples."""
        spec = _f2()
        metric = green_letter_metric(spec, uniform_generators(spec))
        xi = parse_boundary_point(spec, "(a)")
        assert horofunction_eval(xi, _w("a"), metric) == pytest.approx(-math.log(3.0))

    def test_cylinder_precision(self):
        """Testa que o cilindro [a] não determina h(aa)."""
        xi = parse_boundary_point(_f2(), "a")
        assert horofunction_eval(xi, _w("b")) == 1.0
        with pytest.raises(PrecisionError):
            horofunction_eval(xi, _w("a.a"))

    def test_boundary_action_shift(self):
        """Testa h_{g·ξ}(x) = h_ξ(g⁻¹x) − h_ξ(g⁻¹) na bola de raio 2."""
        spec = _f2()
        xi = parse_boundary_point(spec, "a.(b)")
        for g in ball_list(spec, 2):
            moved, shift = boundary_action(g, xi)
            g_inv = invert(spec, g)
            assert shift == horofunction_eval(xi, g_inv) if g.word else shift == 0.0
            for x in ball_list(spec, 2):
                expected = horofunction_eval(xi, multiply(spec, g_inv, x)) - shift
                assert horofunction_eval(moved, x) == expected

    def test_boundary_action_point(self):
        """Testa b·a^∞ = b.(a) e a⁻¹·a.(b) = (b)."""
        spec = _f2()
        moved, shift = boundary_action(_w("b"), parse_boundary_point(spec, "(a)"))
        assert moved.text() == "b.(a)"
        assert shift == 1.0
        back, _ = boundary_action(_w("a-"), parse_boundary_point(spec, "a.(b)"))
        assert back.text() == "(b)"

    def test_boundary_action_cylinder(self):
        """Testa profundidade m ≤ |g| em ponto por prefixo."""
        xi = parse_boundary_point(_f2(), "a.b")
        moved, _ = boundary_action(_w("b"), xi)
        assert moved.prefix == _w("b.a.b").word
        with pytest.raises(PrecisionError):
            boundary_action(_w("a.b"), xi)


class TestCocycleIdentity:
    """Testes para a identidade de deslocamento do produto de Gromov."""

    def test_generator_example(self):
        """Testa g = a, ξ = a^∞, η = ab^∞: LHS = 1, −½(h+h′) = 1, forma dobrada −4."""
        spec = _f2()
        xi = parse_boundary_point(spec, "(a)")
        eta = parse_boundary_point(spec, "a.(b)")
        check = gromov_busemann_cocycle(_w("a"), xi, eta)
        assert check.lhs == 1.0
        assert check.rhs == 1.0
        assert check.doubled_rhs == -4.0

    def test_identity_element(self):
        """Testa g = e → 0 dos dois lados."""
        spec = _f2()
        check = gromov_busemann_cocycle(
            identity(spec), parse_boundary_point(spec, "(a)"), parse_boundary_point(spec, "a.(b)")
        )
        assert check.lhs == 0.0
        assert check.rhs == 0.0

    def test_exact_on_ball(self):
        """Testa resíduo nulo para todo g de comprimento ≤ 3."""
        spec = _f2()
        pairs = [("(a)", "a.(b)"), ("b.(a)", "(b-)"), ("a.b.(a)", "a.b-.(b-)"), ("(a.b)", "(b.a)")]
        for left, right in pairs:
            xi, eta = parse_boundary_point(spec, left), parse_boundary_point(spec, right)
            for g in ball_list(spec, 3):
                assert gromov_busemann_cocycle(g, xi, eta).residual == 0.0

    def test_same_point_rejected(self):
        """Testa ξ = η."""
        xi = parse_boundary_point(_f2(), "(a)")
        with pytest.raises(DomainError):
            gromov_busemann_cocycle(_w("a"), xi, xi)


class TestTrajectoriesOnTree:
    """Testes para raios e a sequência de Busemann."""

    def test_ray_stabilizes(self):
        """Testa estabilização do prefixo de comprimento 2."""
        spec = _f2()
        traj = Trajectory.from_steps(spec, [_w("a"), _w("b"), _w("a"), _w("a")])
        result = ray_convergence(spec, traj, 2)
        assert result.point.prefix == _w("a.b").word
        assert result.stabilization_time == 2
        assert result.conclusive
        assert result.final_length == 4

    def test_ray_inconclusive(self):
        """Testa |Z_n| < m no fim (inconclusivo, sem erro)."""
        spec = _f2()
        traj = Trajectory.from_steps(spec, [_w("a"), _w("a-"), _w("b")])
        result = ray_convergence(spec, traj, 2)
        assert result.point is None
        assert not result.conclusive

    def test_ray_late_change(self):
        """Testa mudança do prefixo depois de settle_fraction·n."""
        spec = _f2()
        traj = Trajectory.from_steps(spec, [_w("a"), _w("b"), _w("b-"), _w("a")])
        result = ray_convergence(spec, traj, 2)
        assert result.stabilization_time == 4
        assert not result.conclusive

    def test_busemann_bounded(self):
        """Testa d − h = 2·(Z_k, ξ)_e ao longo de a, a, b."""
        spec = _f2()
        traj = Trajectory.from_steps(spec, [_w("a"), _w("a"), _w("b")])
        trace = busemann_vs_distance(traj, parse_boundary_point(spec, "(a)"))
        assert list(trace.values) == [0.0, 2.0, 4.0, 4.0]
        assert trace.maximum == 4.0
        assert not trace.saturated

    def test_busemann_cylinder_saturates(self):
        """Testa PrecisionError quando a trajetória acompanha o cilindro."""
        spec = _f2()
        traj = Trajectory.from_steps(spec, [_w("a"), _w("a")])
        with pytest.raises(PrecisionError):
            busemann_vs_distance(traj, parse_boundary_point(spec, "a"))


def _random_word(spec, rng, max_letters):
    gens = generators(spec)
    g = identity(spec)
    for i in rng.integers(0, len(gens), size=int(rng.integers(1, max_letters + 1))):
        g = multiply(spec, g, gens[int(i)])
    return g


class TestEquivariance:
    """Testes sorteados de Γ-equivariância na fronteira."""

    def test_translated_ray_matches_action(self):
        """Testa raio de g·Z = g·(raio de Z) nas primeiras m − |g| letras."""
        spec = _f2()
        mu = uniform_generators(spec)
        rng = make_rng(21)
        m = 8
        checked = 0
        for index in range(40):
            traj = sample_trajectory(spec, mu, 200, seed=5, index=index)
            ray = ray_convergence(spec, traj, m)
            if ray.point is None:
                continue
            g = _random_word(spec, rng, 3)
            k = m - word_length(spec, g)
            moved, _ = boundary_action(g, ray.point)
            translated = ray_convergence(spec, traj.translated(g), k)
            assert translated.point is not None
            assert translated.point.prefix == moved.letters(k)
            checked += 1
        assert checked >= 30

    def test_action_composes(self):
        """Testa g·(h·ξ) = (gh)·ξ com deslocamentos de cociclo somados."""
        spec = _f2()
        rng = make_rng(22)
        points = [parse_boundary_point(spec, text) for text in ("(a)", "a.(b)", "(a.b)", "b-.(a-)", "(a.b-)")]
        for _ in range(100):
            g, h = _random_word(spec, rng, 4), _random_word(spec, rng, 4)
            xi = points[int(rng.integers(0, len(points)))]
            h_xi, h_shift = boundary_action(h, xi)
            g_h_xi, g_shift = boundary_action(g, h_xi)
            direct, shift = boundary_action(multiply(spec, g, h), xi)
            assert g_h_xi == direct
            assert g_shift + h_shift == pytest.approx(shift, abs=1e-12)

    def test_inverse_action_returns(self):
        """Testa g⁻¹·(g·ξ) = ξ."""
        spec = _f2()
        rng = make_rng(23)
        xi = parse_boundary_point(spec, "a.b.(a.b-)")
        for _ in range(50):
            g = _random_word(spec, rng, 5)
            moved, _ = boundary_action(g, xi)
            back, _ = boundary_action(invert(spec, g), moved)
            assert back == xi
