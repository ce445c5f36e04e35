"""
Autoteste - Valores de referência exatos e derivados

Cada verificação registrada é rápida e determinística e devolve um Finding.
O comando `selftest` da CLI executa todas; exceções viram Findings falhos
com o erro no detalhe.
"""

import math
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy import stats

from .boundary import (
    boundary_action,
    boundary_point,
    busemann_vs_distance,
    estimate_delta,
    gromov_busemann_cocycle,
    gromov_product,
    horofunction_eval,
    parse_boundary_point,
    word_distance,
)
from .cayley import ball_sizes
from .dynamics import (
    apply_P,
    constant_function,
    drift_from_measure,
    indicator,
    project_depth,
    psi,
    sigma_squared_formula,
    solve_poisson,
    solve_stationary,
)
from .exceptions import ConfigError, LabError, StatisticalError
from .green import (
    GreenTable,
    first_passage,
    fit_quasi_isometry,
    green_kernel,
    green_letter_metric,
    green_metric,
    hilbert_metric,
    martin_kernel,
)
from .groups import (
    GroupSpec,
    ball_list,
    free_group,
    identity,
    invert,
    lamplighter,
    lamplighter_element,
    multiply,
    parse_group_spec,
    parse_word,
    word_length,
)
from .limits import fit_exponent, ks_normality_test, lil_statistic, lindeberg_check
from .logger import get_logger
from .models import Finding
from .walk import (
    StepDistribution,
    Trajectory,
    convolution_power,
    convolve,
    dirac,
    exponential_moment,
    make_rng,
    parse_measure,
    uniform_generators,
)

logger = get_logger(__name__)

CheckFn = Callable[[], Finding]
GOLDEN_CHECKS: Dict[str, CheckFn] = {}

LOG3 = math.log(3.0)
BIASED_MEASURE = "a:3/8,a-:3/8,b:1/8,b-:1/8"


def golden(name: str) -> Callable[[CheckFn], CheckFn]:
    """Registra uma verificação de referência sob `name`."""

    def register(fn: CheckFn) -> CheckFn:
        if name in GOLDEN_CHECKS:
            raise ValueError(f"Verificação duplicada: {name}")
        GOLDEN_CHECKS[name] = fn
        return fn

    return register


def _close(check: str, observed: float, expected: float, tolerance: float, detail: str = "") -> Finding:
    passed = abs(observed - expected) <= tolerance
    return Finding(
        check=check,
        passed=passed,
        detail=detail or f"|observado − esperado| ≤ {tolerance:g}",
        observed=float(observed),
        expected=float(expected),
    )


def _holds(check: str, condition: bool, detail: str) -> Finding:
    return Finding(check=check, passed=bool(condition), detail=detail)


@lru_cache(maxsize=1)
def _f2() -> GroupSpec:
    return free_group(2)


@lru_cache(maxsize=1)
def _srw() -> StepDistribution:
    return uniform_generators(_f2())


@lru_cache(maxsize=1)
def _srw_table() -> GreenTable:
    return green_kernel(_f2(), _srw(), 60, 6)


def _w(text: str):
    return parse_word(_f2(), text)


# ============================================================================
# group-core
# ============================================================================

@golden("invert_free_word")
def _invert_free_word() -> Finding:
    spec = _f2()
    return _holds("invert_free_word", invert(spec, _w("a.b")) == _w("b-.a-"), "(ab)⁻¹ = b⁻¹a⁻¹")


@golden("invert_identity")
def _invert_identity() -> Finding:
    spec = _f2()
    return _holds("invert_identity", invert(spec, identity(spec)) == identity(spec), "e⁻¹ = e")


@golden("invert_lamplighter")
def _invert_lamplighter() -> Finding:
    spec = lamplighter()
    g = lamplighter_element(spec, {0: 1}, 1)
    expected = lamplighter_element(spec, {-1: -1}, -1)
    inverse = invert(spec, g)
    ok = inverse == expected and multiply(spec, g, inverse) == identity(spec)
    return _holds("invert_lamplighter", ok, "(lâmpada{0↦1}, pos 1)⁻¹ = (lâmpada{−1↦−1}, pos −1)")


@golden("multiply_examples")
def _multiply_examples() -> Finding:
    spec, ll = _f2(), lamplighter()
    ok = (
        multiply(spec, _w("a"), _w("a-")) == identity(spec)
        and multiply(spec, _w("a.b"), _w("b-.a")) == _w("a.a")
        and multiply(ll, parse_word(ll, "t"), parse_word(ll, "a")) == lamplighter_element(ll, {1: 1}, 1)
    )
    return _holds("multiply_examples", ok, "a·a⁻¹ = e, ab·b⁻¹a = a², em ℤ≀ℤ t·a = (lâmpada{1↦1}, pos 1)")


@golden("lamplighter_length")
def _lamplighter_length() -> Finding:
    spec = lamplighter()
    g = lamplighter_element(spec, {-1: 1, 1: 1}, 0)
    return _close("lamplighter_length", word_length(spec, g), 6, 0, "2 lâmpadas + percurso 0→−1→1→0")


@golden("word_length_examples")
def _word_length_examples() -> Finding:
    spec, ll = _f2(), lamplighter()
    free = word_length(spec, _w("a.b.a-"))
    lamp = word_length(ll, lamplighter_element(ll, {0: 1}, 0))
    ball = len(ball_list(spec, 2))
    ok = free == 3 and lamp == 1 and ball == 17
    return Finding(check="word_length_examples", passed=ok,
                   detail="|aba⁻¹| = 3, |(lâmpada{0↦1}, pos 0)| = 1, |B(2)| = 17",
                   observed=ball, expected=17)


@golden("ball_sizes")
def _ball_sizes() -> Finding:
    spec = _f2()
    sizes = ball_sizes(spec, 6)
    ok = len(ball_list(spec, 1)) == 5 and sizes[1] == 5 and sizes[6] == 1457
    return _holds("ball_sizes", ok, f"|B(1)| = 5, |B(6)| = 1457 (obtido {sizes[6]})")


@golden("parse_error_position")
def _parse_error_position() -> Finding:
    try:
        parse_group_spec("free:x")
    except ConfigError as e:
        position = e.diagnostics.get("position")
        return _close("parse_error_position", position, 5, 0, "posição do primeiro caractere inválido")
    return _holds("parse_error_position", False, "spec inválida foi aceita")


# ============================================================================
# walk-engine
# ============================================================================

@golden("convolution_return")
def _convolution_return() -> Finding:
    spec, mu = _f2(), _srw()
    two = convolution_power(spec, mu, 2).weight(identity(spec))
    four = convolution_power(spec, mu, 4).weight(identity(spec))
    ok = abs(two - 0.25) <= 1e-12 and abs(four - 7 / 64) <= 1e-12
    return Finding(
        check="convolution_return",
        passed=ok,
        detail="μ*μ(e) = 1/4 e μ^{*4}(e) = 28/256 = 7/64",
        observed=four,
        expected=7 / 64,
    )


@golden("convolution_examples")
def _convolution_examples() -> Finding:
    spec, mu = _f2(), _srw()
    square = convolve(spec, mu, mu).weight(_w("a.b"))
    odd = convolution_power(spec, mu, 3).weight(identity(spec))
    ok = (
        abs(square - 1 / 16) <= 1e-12
        and convolve(spec, dirac(spec), mu) == mu
        and convolution_power(spec, mu, 1) == mu
        and odd == 0.0
    )
    return Finding(check="convolution_examples", passed=ok,
                   detail="(μ∗μ)(ab) = 1/16, δ_e∗μ = μ, μ^{*1} = μ, μ^{*3}(e) = 0",
                   observed=square, expected=1 / 16)


@golden("exponential_moment")
def _exponential_moment() -> Finding:
    spec = _f2()
    metric = green_letter_metric(spec, _srw())
    trivial = exponential_moment(spec, dirac(spec), 2.5)
    value = exponential_moment(spec, _srw(), 1.0, metric.length)
    ok = abs(trivial - 1.0) <= 1e-12 and abs(value - 3.0) <= 1e-9
    return Finding(check="exponential_moment", passed=ok, detail="δ_e → 1; SRW métrica de Green, β=1 → 3",
                   observed=value, expected=3.0)


# ============================================================================
# green-martin
# ============================================================================

@golden("green_identity")
def _green_identity() -> Finding:
    return _close("green_identity", _srw_table().at_identity, 1.5, 1e-3, "G_60(e,e) = 3/2")


@golden("green_closed_form")
def _green_closed_form() -> Finding:
    table = _srw_table()
    idx = table.ball.within(4)
    ratio = table.values[idx] / table.at_identity
    expected = 3.0 ** (-table.ball.depth[idx].astype(np.float64))
    worst = float(np.abs(ratio - expected).max())
    return _close("green_closed_form", worst, 0.0, 1e-3, "max |G(e,x)/G(e,e) − 3^{−|x|}| em |x| ≤ 4")


@golden("first_passage")
def _first_passage() -> Finding:
    spec, mu = _f2(), _srw()
    e = identity(spec)
    one = first_passage(spec, mu, e, _w("a"), 60)
    two = first_passage(spec, mu, e, _w("a.b"), 60)
    ok = abs(one - 1 / 3) <= 1e-3 and abs(two - 1 / 9) <= 1e-3
    return Finding(check="first_passage", passed=ok, detail="F(e,a) = 1/3, F(e,ab) = 1/9",
                   observed=one, expected=1 / 3)


@golden("green_metric")
def _green_metric() -> Finding:
    table = _srw_table()
    e = identity(table.spec)
    zero = green_metric(table, e, e)
    one = green_metric(table, e, _w("a"))
    two = green_metric(table, e, _w("a.b"))
    ok = zero == 0.0 and abs(one - LOG3) <= 2e-3 and abs(two - 2 * LOG3) <= 4e-3
    return Finding(check="green_metric", passed=ok, detail="d_G(e,a) = log 3, d_G(e,ab) = 2 log 3",
                   observed=one, expected=LOG3)


@golden("quasi_isometry_identity")
def _quasi_isometry_identity() -> Finding:
    d = np.arange(1.0, 6.0)
    fit = fit_quasi_isometry(d, d)
    return _holds("quasi_isometry_identity", fit.C == 1.0 and fit.b == 0.0, "d_S = d_G ⇒ C = 1, b = 0")


@golden("hilbert_neighbour")
def _hilbert_neighbour() -> Finding:
    table = _srw_table()
    e = identity(table.spec)
    view_e = martin_kernel(table, e, 4)
    view_a = martin_kernel(table, _w("a"), 4)
    result = hilbert_metric(view_e, view_a)
    ok = (
        abs(result.beta / 9.0 - 1.0) <= 0.02
        and abs(result.alpha - 1.0) <= 0.02
        and abs(result.distance / LOG3 - 1.0) <= 0.02
    )
    return Finding(check="hilbert_neighbour", passed=ok, detail="x=e, y=a: β ≈ 9, α ≈ 1",
                   observed=result.distance, expected=LOG3)


# ============================================================================
# tree-boundary
# ============================================================================

@golden("delta_tree")
def _delta_tree() -> Finding:
    spec = _f2()
    delta = estimate_delta(spec, word_distance(spec), ball_list(spec, 3))
    return _close("delta_tree", delta, 0.0, 0.0, "árvores são 0-hiperbólicas (bola de raio 3)")


@golden("gromov_product_examples")
def _gromov_product_examples() -> Finding:
    spec = _f2()
    d, e = word_distance(spec), identity(spec)
    ok = (
        gromov_product(d, _w("a"), _w("a.a"), e) == 1.0
        and gromov_product(d, _w("a"), _w("b"), e) == 0.0
        and gromov_product(d, _w("a.b"), _w("a.b-"), e) == 1.0
    )
    return _holds("gromov_product_examples", ok, "(a, a²)_e = 1, (a, b)_e = 0, (ab, ab⁻¹)_e = 1")


@golden("horofunction")
def _horofunction() -> Finding:
    spec = _f2()
    xi = boundary_point(spec, (), _w("a").word)
    eta = parse_boundary_point(spec, "a.(b)")
    value = horofunction_eval(xi, _w("a"))
    ok = (
        value == -1.0
        and horofunction_eval(xi, identity(spec)) == 0.0
        and horofunction_eval(xi, _w("b")) == 1.0
        and horofunction_eval(eta, _w("a.a")) == 0.0
    )
    return Finding(check="horofunction", passed=ok,
                   detail="h_{a^∞}: e → 0, a → −1, b → +1; h_{ab^∞}(a²) = 0",
                   observed=value, expected=-1.0)


@golden("boundary_action_examples")
def _boundary_action_examples() -> Finding:
    spec = _f2()
    xi = parse_boundary_point(spec, "(a)")
    fixed, _ = boundary_action(_w("a"), xi)
    back, _ = boundary_action(_w("a-"), parse_boundary_point(spec, "a.(b)"))
    moved, shift = boundary_action(_w("b"), xi)
    ok = fixed == xi and back.text() == "(b)" and moved.text() == "b.(a)" and shift == 1.0
    return _holds("boundary_action_examples", ok, "a·a^∞ = a^∞, a⁻¹·ab^∞ = b^∞, b·a^∞ = ba^∞ (deslocamento 1)")


@golden("busemann_trace")
def _busemann_trace() -> Finding:
    spec = _f2()
    xi = parse_boundary_point(spec, "(a)")
    bounded = busemann_vs_distance(Trajectory.from_steps(spec, [_w("a"), _w("a"), _w("b")]), xi)
    toward = busemann_vs_distance(Trajectory.from_steps(spec, [_w("a")] * 5), xi)
    still = busemann_vs_distance(Trajectory.from_steps(spec, [identity(spec)] * 3), xi)
    ok = (
        list(bounded.values) == [0.0, 2.0, 4.0, 4.0]
        and list(toward.values) == [2.0 * k for k in range(6)]
        and not np.any(still.values)
    )
    return _holds("busemann_trace", ok, "d − h ao longo de a,a,b = 0,2,4,4; sobre o raio de ξ = 2n; em e ≡ 0")


@golden("cocycle_examples")
def _cocycle_examples() -> Finding:
    spec = _f2()
    xi = boundary_point(spec, (), _w("a").word)
    eta = boundary_point(spec, _w("a").word, _w("b").word)
    first = gromov_busemann_cocycle(_w("a"), xi, eta)
    trivial = gromov_busemann_cocycle(identity(spec), xi, eta)
    other = gromov_busemann_cocycle(_w("b"), xi, eta)
    ok = (
        first.lhs == 1.0 and first.rhs == 1.0 and first.doubled_rhs == -4.0
        and trivial.lhs == 0.0 and trivial.rhs == 0.0
        and other.residual == 0.0
    )
    return Finding(check="cocycle_examples", passed=ok,
                   detail="g=a: LHS = −½(h+h′) = 1 (forma 2·(h+h′) dá −4); g=e: 0",
                   observed=first.lhs, expected=1.0)


# ============================================================================
# boundary-dynamics
# ============================================================================

@golden("stationary_uniform")
def _stationary_uniform() -> Finding:
    spec, mu = _f2(), _srw()
    one = solve_stationary(spec, mu, 1).probabilities
    two = solve_stationary(spec, mu, 2).probabilities
    worst = max(float(np.abs(one - 0.25).max()), float(np.abs(two - 1 / 12).max()))
    return _close("stationary_uniform", worst, 0.0, 1e-9, "ν = 1/4 (m=1) e 1/12 (m=2)")


@golden("transfer_indicator")
def _transfer_indicator() -> Finding:
    spec, mu = _f2(), _srw()
    nu = solve_stationary(spec, mu, 2)
    a = _w("a").word
    projected = project_depth(apply_P(spec, mu, indicator(spec, a, 1)), nu, 1)
    expected = np.full(4, 1 / 3)
    expected[projected.space.index_of_word(_w("a-").word)] = 0.0
    worst = float(np.abs(projected.values - expected).max())
    return _close("transfer_indicator", worst, 0.0, 1e-9, "Π(P·1_[a]) = (1/3, 0, 1/3, 1/3)")


@golden("transfer_fixes_constants")
def _transfer_fixes_constants() -> Finding:
    spec, mu = _f2(), _srw()
    nu = solve_stationary(spec, mu, 2)
    image = apply_P(spec, mu, constant_function(spec, 2, 0.7))
    same = project_depth(indicator(spec, _w("a").word, 2), nu, 2)
    back = project_depth(constant_function(spec, 3, 0.7), nu, 1)
    worst = max(
        float(np.abs(image.values - 0.7).max()),
        float(np.abs(same.values - indicator(spec, _w("a").word, 2).values).max()),
        float(np.abs(back.values - 0.7).max()),
    )
    return _close("transfer_fixes_constants", worst, 0.0, 1e-12,
                  "P·c = c; projeção na própria profundidade = identidade; constantes preservadas")


@golden("biased_psi")
def _biased_psi() -> Finding:
    spec = _f2()
    mu = parse_measure(spec, BIASED_MEASURE)
    nu = solve_stationary(spec, mu, 2)
    A = drift_from_measure(spec, mu, nu)
    fn = psi(spec, mu, A, 2)
    first = fn.space.words[:, 0]
    expected = np.where(first <= 2, 0.25, 0.75) - A
    worst = float(np.abs(fn.values - expected).max())
    ok = worst <= 1e-12 and abs(nu.integrate(fn)) <= 1e-9 and A > 0.0
    return Finding(check="biased_psi", passed=ok,
                   detail="ψ = ¼ − A em [a±], ¾ − A em [b±], média zero sob ν",
                   observed=worst, expected=0.0)


@golden("biased_poisson")
def _biased_poisson() -> Finding:
    spec = _f2()
    mu = parse_measure(spec, BIASED_MEASURE)
    nu = solve_stationary(spec, mu, 6)
    A = drift_from_measure(spec, mu, nu)
    solution = solve_poisson(spec, mu, psi(spec, mu, A, 6), nu, tolerance=1e-8)
    ok = solution.residual <= 1e-8 and abs(nu.integrate(solution.u)) <= 1e-9 and solution.tau_hat < 1.0
    return Finding(check="biased_poisson", passed=ok, detail="m = 6, tol = 1e-8: resíduo ≤ tol, ∫u dν = 0",
                   observed=solution.residual, expected=0.0)


@golden("srw_variance")
def _srw_variance() -> Finding:
    spec, mu = _f2(), _srw()
    nu = solve_stationary(spec, mu, 2)
    A = drift_from_measure(spec, mu, nu)
    solution = solve_poisson(spec, mu, psi(spec, mu, A, 2), nu)
    variance = sigma_squared_formula(spec, mu, nu, solution.u, A)
    ok = (
        abs(A - 0.5) <= 1e-12
        and float(np.abs(solution.u.values).max()) <= 1e-12
        and abs(variance.sigma_squared - 0.75) <= 1e-6
    )
    return Finding(check="srw_variance", passed=ok, detail="A = 1/2, u ≡ 0, σ² = 3/4",
                   observed=variance.sigma_squared, expected=0.75)


@golden("green_drift_scaling")
def _green_drift_scaling() -> Finding:
    spec, mu = _f2(), _srw()
    nu = solve_stationary(spec, mu, 2)
    metric = green_letter_metric(spec, mu)
    A = drift_from_measure(spec, mu, nu, metric)
    return _close("green_drift_scaling", A, LOG3 / 2, 1e-9, "A na métrica de Green = (log 3)/2")


# ============================================================================
# limit-lab
# ============================================================================

@golden("ks_constant_samples")
def _ks_constant_samples() -> Finding:
    try:
        ks_normality_test(np.zeros(200), 1.0)
    except StatisticalError:
        return _holds("ks_constant_samples", True, "amostras constantes rejeitadas")
    return _holds("ks_constant_samples", False, "amostras constantes aceitas")


@golden("ks_calibration")
def _ks_calibration() -> Finding:
    sigma = math.sqrt(0.75)
    quantiles = stats.norm.ppf((np.arange(2000) + 0.5) / 2000, scale=sigma)
    exact = ks_normality_test(quantiles, sigma).p_value
    accepted = sum(
        ks_normality_test(make_rng(31, run).normal(0.0, sigma, 2000), sigma).p_value > 0.01
        for run in range(100)
    )
    ok = exact > 0.9 and accepted >= 95
    return Finding(check="ks_calibration", passed=ok,
                   detail="quantis exatos → p > 0.9; ≥ 95 de 100 lotes normais com p > 0.01",
                   observed=accepted, expected=99)


@golden("lil_deterministic")
def _lil_deterministic() -> Finding:
    points = np.array([1_000, 10_000, 100_000])
    plain, sqrt2 = lil_statistic(points.astype(np.float64), points, 1.0)
    worst = float(max(np.abs(plain).max(), np.abs(sqrt2).max()))
    return _close("lil_deterministic", worst, 0.0, 0.0, "d = n, A = 1 ⇒ estatística ≡ 0")


@golden("lindeberg_trivial")
def _lindeberg_trivial() -> Finding:
    rows = lindeberg_check([1.5, -0.5, -0.5, -0.5], eps_grid=(10.0,), n_grid=(1,))
    return _close("lindeberg_trivial", rows[0]["term"], 0.0, 0.0, "ε = 10, n = 1 → 0")


@golden("exponent_linear")
def _exponent_linear() -> Finding:
    grid = [1_000, 10_000, 100_000]
    fit = fit_exponent(grid, grid)
    return _close("exponent_linear", fit.slope, 1.0, 1e-12, "t^n determinístico → inclinação 1")


# ============================================================================
# Execução
# ============================================================================

def run_selftest(names: Optional[Sequence[str]] = None) -> List[Finding]:
    """
    Executa as verificações (todas, por padrão) na ordem de registro.

    Raises:
        ConfigError: nome de verificação desconhecido
    """
    selected = list(GOLDEN_CHECKS) if names is None else list(names)
    unknown = [n for n in selected if n not in GOLDEN_CHECKS]
    if unknown:
        raise ConfigError(
            f"Verificações desconhecidas: {unknown}",
            {"unknown": unknown, "available": list(GOLDEN_CHECKS)},
        )
    findings = []
    for name in selected:
        try:
            finding = GOLDEN_CHECKS[name]()
        except LabError as e:
            logger.error(f"Autoteste {name} levantou {type(e).__name__}: {e.message}")
            finding = Finding(check=name, passed=False, detail=f"{type(e).__name__}: {e.message}")
        findings.append(finding)
        logger.debug(f"{name}: {'ok' if finding.passed else 'falhou'}")
    failed = sum(not f.passed for f in findings)
    logger.info(f"Autoteste: {len(findings) - failed}/{len(findings)} verificações ok")
    return findings
