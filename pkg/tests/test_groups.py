"""
Testes Unitários - Aritmética de grupos e bolas de Cayley
"""

import pytest

from src.exceptions import CapabilityError, ConfigError, DomainError, ResourceError
from src.groups import (
    GroupKind,
    ball,
    ball_list,
    bfs_distances,
    format_word,
    free_ball_size,
    free_group,
    free_product,
    generators,
    identity,
    invert,
    lamplighter,
    lamplighter_element,
    multiply,
    parse_group_spec,
    parse_word,
    power,
    word_length,
)
from src.walk import make_rng


class TestParseGroupSpec:
    """Testes para interpretação de specs de grupo."""

    def test_free_group(self):
        """Testa 'free:2' e a forma canônica."""
        spec = parse_group_spec(" FREE:2 ")
        assert spec.kind is GroupKind.FREE
        assert spec.rank == 2
        assert spec.name == "free:2"
        assert spec.labels == ("a", "a-", "b", "b-")

    def test_free_product(self):
        """Testa 'freeprod:2,3' com geradores auto-inversos."""
        spec = parse_group_spec("freeprod:2,3")
        assert spec.kind is GroupKind.FREE_PRODUCT
        assert spec.labels == ("a", "b", "b-")
        assert spec.degree == 3

    def test_lamplighter(self):
        """Testa 'zwrz'."""
        spec = parse_group_spec("zwrz")
        assert spec.kind is GroupKind.LAMPLIGHTER
        assert not spec.is_hyperbolic

    def test_malformed_reports_position(self):
        """Testa que o erro carrega a posição do primeiro caractere inválido."""
        with pytest.raises(ConfigError) as exc_info:
            parse_group_spec("free:x")
        assert exc_info.value.diagnostics["position"] == 5
        assert exc_info.value.exit_code == 3

    def test_unknown_family(self):
        """Testa família desconhecida."""
        with pytest.raises(ConfigError) as exc_info:
            parse_group_spec("surface:2")
        assert exc_info.value.diagnostics["position"] == 0

    def test_rank_one_rejected(self):
        """Testa que F_1 (elementar) é rejeitado."""
        with pytest.raises(ConfigError):
            free_group(1)

    def test_elementary_free_product_rejected(self):
        """Testa que ℤ/2 * ℤ/2 (grau 2) é rejeitado."""
        with pytest.raises(ConfigError):
            free_product([2, 2])


def _random_element(spec, rng, max_letters=6):
    gens = generators(spec)
    g = identity(spec)
    for i in rng.integers(0, len(gens), size=int(rng.integers(0, max_letters + 1))):
        g = multiply(spec, g, gens[int(i)])
    return g


class TestArithmetic:
    """Testes para produto, inverso e comprimento."""

    def test_invert_free_word(self):
        """Testa (ab)⁻¹ = b⁻¹a⁻¹."""
        spec = free_group(2)
        assert invert(spec, parse_word(spec, "a.b")) == parse_word(spec, "b-.a-")

    def test_invert_identity(self):
        """Testa e⁻¹ = e."""
        spec = free_group(2)
        assert invert(spec, identity(spec)) == identity(spec)

    def test_free_reduction(self):
        """Testa cancelamento na multiplicação."""
        spec = free_group(2)
        x = parse_word(spec, "a.b")
        y = parse_word(spec, "b-.a")
        assert format_word(spec, multiply(spec, x, y)) == "a.a"

    def test_parse_word_reduces(self):
        """Testa que palavras não reduzidas viram forma canônica."""
        spec = free_group(2)
        assert parse_word(spec, "a.a-.b") == parse_word(spec, "b")
        assert parse_word(spec, "e") == identity(spec)

    def test_parse_word_bad_token(self):
        """Testa token inválido com posição."""
        spec = free_group(2)
        with pytest.raises(ConfigError) as exc_info:
            parse_word(spec, "a.c")
        assert exc_info.value.diagnostics["position"] == 2

    def test_free_product_torsion(self):
        """Testa b³ = e e b·b = b⁻¹ em ℤ/2 * ℤ/3."""
        spec = free_product([2, 3])
        b = parse_word(spec, "b")
        assert power(spec, b, 3) == identity(spec)
        assert multiply(spec, b, b) == parse_word(spec, "b-")
        assert word_length(spec, multiply(spec, b, b)) == 1
        a = parse_word(spec, "a")
        assert multiply(spec, a, a) == identity(spec)

    def test_lamplighter_inverse(self):
        """Testa (lâmpada{0↦1}, pos 1)⁻¹ = (lâmpada{−1↦−1}, pos −1)."""
        spec = lamplighter()
        g = lamplighter_element(spec, {0: 1}, 1)
        inverse = invert(spec, g)
        assert inverse == lamplighter_element(spec, {-1: -1}, -1)
        assert multiply(spec, g, inverse) == identity(spec)

    def test_lamplighter_length_matches_bfs(self):
        """Testa (lâmpada{−1↦1, 1↦1}, pos 0): 2 lâmpadas + percurso 4 = 6."""
        spec = lamplighter()
        g = lamplighter_element(spec, {-1: 1, 1: 1}, 0)
        assert word_length(spec, g) == 6
        assert bfs_distances(spec, 6)[g] == 6

    def test_lamplighter_lengths_agree_with_bfs(self):
        """Testa a fórmula de comprimento contra BFS em toda a bola de raio 4."""
        spec = lamplighter()
        for g, d in bfs_distances(spec, 4).items():
            assert word_length(spec, g) == d

    def test_format_lamplighter_roundtrip(self):
        """Testa que o caminho formatado realiza o elemento."""
        spec = lamplighter()
        g = lamplighter_element(spec, {-1: 1, 2: -1}, 1)
        assert parse_word(spec, format_word(spec, g)) == g

    def test_mixed_specs_rejected(self):
        """Testa que elementos de specs diferentes não se multiplicam."""
        f2, f3 = free_group(2), free_group(3)
        with pytest.raises(DomainError):
            multiply(f2, parse_word(f2, "a"), parse_word(f3, "a"))


class TestBalls:
    """Testes para enumeração de bolas."""

    def test_ball_radius_one(self):
        """Testa F₂, r=1 → {e, a, a⁻¹, b, b⁻¹}."""
        spec = free_group(2)
        assert {format_word(spec, g) for g in ball(spec, 1)} == {"e", "a", "a-", "b", "b-"}

    def test_ball_radius_six(self):
        """Testa |B(6)| = 1457 em F₂."""
        spec = free_group(2)
        assert len(ball_list(spec, 6)) == 1457
        assert free_ball_size(2, 6) == 1457

    def test_ball_radius_zero(self):
        """Testa B(0) = {e}."""
        spec = free_product([2, 3])
        assert ball_list(spec, 0) == [identity(spec)]

    def test_ball_negative_radius(self):
        """Testa raio negativo."""
        with pytest.raises(CapabilityError):
            ball_list(free_group(2), -1)

    def test_lamplighter_limit(self):
        """Testa o limite de raio para ℤ≀ℤ."""
        with pytest.raises(CapabilityError):
            ball_list(lamplighter(), 9)

    def test_enumeration_cap(self):
        """Testa o limite de enumeração com o valor ecoado."""
        with pytest.raises(ResourceError) as exc_info:
            ball_list(free_group(2), 8, enumeration_cap=1000)
        assert exc_info.value.diagnostics["cap"] == 1000

    def test_lengths_inside_ball(self):
        """Testa que a bola contém só elementos de comprimento ≤ r, sem repetição."""
        spec = free_product([2, 3])
        elements = ball_list(spec, 5)
        assert len(set(elements)) == len(elements)
        assert all(word_length(spec, g) <= 5 for g in elements)
        assert max(word_length(spec, g) for g in elements) == 5

    def test_enumeration_cap_free_product(self):
        """Testa o limite de enumeração também em produtos livres."""
        with pytest.raises(ResourceError) as exc_info:
            ball_list(free_product([2, 3]), 20, enumeration_cap=100)
        assert exc_info.value.diagnostics["cap"] == 100
        assert exc_info.value.diagnostics["size"] > 100
        assert exc_info.value.diagnostics["reached_radius"] < 20

    def test_enumeration_cap_lamplighter(self):
        """Testa o limite de enumeração em ℤ≀ℤ dentro do raio permitido."""
        with pytest.raises(ResourceError):
            ball_list(lamplighter(), 6, enumeration_cap=50)

    def test_cap_not_hit_at_exact_size(self):
        """Testa bola com exatamente `enumeration_cap` elementos."""
        spec = free_product([2, 3])
        size = len(ball_list(spec, 4))
        assert len(ball_list(spec, 4, enumeration_cap=size)) == size


class TestGroupAxioms:
    """Testes sorteados de associatividade e inversos."""

    SPECS = (free_group(2), free_group(3), free_product([2, 3]), free_product([3, 4, 5]), lamplighter())

    def test_associativity(self):
        """Testa (xy)z = x(yz) em triplas sorteadas."""
        rng = make_rng(11)
        for spec in self.SPECS:
            for _ in range(200):
                x, y, z = (_random_element(spec, rng) for _ in range(3))
                assert multiply(spec, multiply(spec, x, y), z) == multiply(spec, x, multiply(spec, y, z))

    def test_inverse_both_sides(self):
        """Testa g·g⁻¹ = g⁻¹·g = e e (g⁻¹)⁻¹ = g."""
        rng = make_rng(12)
        for spec in self.SPECS:
            e = identity(spec)
            for _ in range(200):
                g = _random_element(spec, rng)
                g_inv = invert(spec, g)
                assert multiply(spec, g, g_inv) == e
                assert multiply(spec, g_inv, g) == e
                assert invert(spec, g_inv) == g

    def test_length_symmetric_and_subadditive(self):
        """Testa |g⁻¹| = |g| e |xy| ≤ |x| + |y|."""
        rng = make_rng(13)
        for spec in self.SPECS:
            for _ in range(200):
                x, y = _random_element(spec, rng), _random_element(spec, rng)
                assert word_length(spec, invert(spec, x)) == word_length(spec, x)
                assert word_length(spec, multiply(spec, x, y)) <= word_length(spec, x) + word_length(spec, y)
