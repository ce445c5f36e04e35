"""
Módulo de Dinâmica na Fronteira - Medida estacionária e operador de transferência
Funções de cilindro, equação de Poisson e variância analítica σ²

Discretização: funções que dependem só das m primeiras letras de ξ (cilindros
de profundidade m). As células de profundidade m são as palavras reduzidas
de comprimento m em ordem lexicográfica de ids; cada célula tem um código em
base 2k+1, o que transforma a busca de células em searchsorted.

Operador:
    (Pφ)(ξ) = Σ_g μ(g)·φ(g⁻¹·ξ)

é exato na profundidade m + L (L = maior comprimento do suporte): o prefixo
de comprimento m + L de ξ determina o prefixo de comprimento m de g⁻¹·ξ.

Projeções voltam à profundidade m com média condicional sob ν, o que preserva
médias e a identidade de dualidade ∫Pφ dν = ∫φ dν.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .boundary import BoundaryPoint, boundary_action, boundary_gromov_product
from .exceptions import CapabilityError, DomainError, NumericError, SpectralError, StatisticalError
from .green import LetterMetric
from .groups import GroupKind, GroupSpec, element_from_word, format_word, invert
from .logger import get_logger
from .walk import (
    StepDistribution,
    convolution_power,
    make_rng,
    require_non_elementary,
    require_symmetric,
)

logger = get_logger(__name__)

OPERATOR_TOLERANCE = 1e-12
DEGENERACY_THRESHOLD = 1e-6
PROXIMALITY_ALPHAS = (0.05, 0.1, 0.2, 0.3)
PROXIMALITY_STEPS = (1, 2, 4, 6)

Scale = Union[float, LetterMetric]


def _require_free(spec: GroupSpec, operation: str) -> None:
    if spec.kind is not GroupKind.FREE:
        raise CapabilityError(
            f"{operation} requer grupo livre (fronteira = palavras reduzidas infinitas)",
            {"group": spec.name, "operation": operation},
        )


def _letter_weights(spec: GroupSpec, metric: Scale) -> np.ndarray:
    if isinstance(metric, LetterMetric):
        return np.asarray(metric.weights, dtype=np.float64)
    return float(metric) * np.asarray(spec.letter_length, dtype=np.float64)


# ============================================================================
# Espaços de cilindros
# ============================================================================

@dataclass(frozen=True, eq=False)
class CylinderSpace:
    """Células de profundidade `depth` (palavras reduzidas de comprimento depth)."""
    spec: GroupSpec
    depth: int
    words: np.ndarray = field(repr=False)
    codes: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return int(self.codes.size)

    def index(self, words: np.ndarray) -> np.ndarray:
        """Índices das células (linhas de `words`, comprimento depth)."""
        codes = _encode(self.spec, words)
        idx = np.searchsorted(self.codes, codes)
        if np.any(idx >= self.size) or np.any(self.codes[np.minimum(idx, self.size - 1)] != codes):
            raise DomainError("Palavra fora do espaço de cilindros", {"depth": self.depth})
        return idx

    def index_of_word(self, word: Sequence[int]) -> int:
        return int(self.index(np.asarray([word], dtype=np.int64))[0])

    def prefix_index(self, coarser: "CylinderSpace") -> np.ndarray:
        """Célula de profundidade coarser.depth que contém cada célula."""
        return coarser.index(self.words[:, : coarser.depth])

    def label(self, i: int) -> str:
        return format_word(self.spec, element_from_word(self.spec, tuple(int(s) for s in self.words[i])))

    def labels(self) -> List[str]:
        return [self.label(i) for i in range(self.size)]


def _encode(spec: GroupSpec, words: np.ndarray) -> np.ndarray:
    """Código em base 2k+1; a ordem dos códigos é a ordem lexicográfica."""
    base = spec.num_ids + 1
    powers = base ** np.arange(words.shape[1] - 1, -1, -1, dtype=np.int64)
    return words.astype(np.int64) @ powers


@lru_cache(maxsize=32)
def cylinder_space(spec: GroupSpec, depth: int) -> CylinderSpace:
    """2k·(2k−1)^{depth−1} células em ordem lexicográfica."""
    _require_free(spec, "cylinder_space")
    if depth < 1:
        raise DomainError(f"Profundidade de cilindro deve ser ≥ 1, recebido {depth}", {"depth": depth})
    ids = np.arange(1, spec.num_ids + 1, dtype=np.int64)
    inverse = np.asarray(spec.inverse_of, dtype=np.int64)
    words = ids[:, None]
    for _ in range(depth - 1):
        last = words[:, -1]
        allowed = ids[None, :] != inverse[last][:, None]
        rows, cols = np.nonzero(allowed)
        words = np.concatenate([words[rows], ids[cols][:, None]], axis=1)
    space = CylinderSpace(spec=spec, depth=depth, words=words, codes=_encode(spec, words))
    logger.debug(f"Espaço de cilindros {spec.name} profundidade {depth}: {space.size} células")
    return space


def left_multiply_cells(spec: GroupSpec, word: Sequence[int], cells: np.ndarray, m_out: int) -> np.ndarray:
    """
    Primeiras m_out letras de reduce(word·c) para cada linha c.

    Exige cells.shape[1] ≥ m_out + len(word).
    """
    g = np.asarray(word, dtype=np.int64)
    n_g = g.size
    if n_g == 0:
        return cells[:, :m_out].copy()
    if cells.shape[1] < m_out + n_g:
        raise DomainError(
            "Profundidade insuficiente para a multiplicação à esquerda",
            {"depth": int(cells.shape[1]), "needed": m_out + n_g},
        )
    inverse = np.asarray(spec.inverse_of, dtype=np.int64)
    # c_j cancela com g_{n−1−j} enquanto as anteriores cancelaram
    matches = cells[:, :n_g] == inverse[g[::-1]][None, :]
    cancel = np.cumprod(matches, axis=1).sum(axis=1)
    keep = n_g - cancel
    pos = np.arange(m_out)[None, :]
    from_g = pos < keep[:, None]
    g_part = g[np.minimum(pos, n_g - 1)]
    c_idx = np.clip(pos - n_g + 2 * cancel[:, None], 0, cells.shape[1] - 1)
    c_part = np.take_along_axis(cells, c_idx, axis=1)
    return np.where(from_g, np.broadcast_to(g_part, from_g.shape), c_part)


# ============================================================================
# Medida estacionária
# ============================================================================

@dataclass(frozen=True, eq=False)
class StationaryMeasure:
    """
    ν em profundidade `depth`, com a cadeia de trabalho (profundidade ≥ 2)
    usada para estender ν a cilindros mais finos.

    `exact` é falso quando μ sai dos vizinhos mais próximos: aí ν não é uma
    cadeia de Markov finita e a extensão por blocos é só uma aproximação.
    """
    space: CylinderSpace
    probabilities: np.ndarray = field(repr=False)
    chain_space: CylinderSpace = field(repr=False)
    chain: np.ndarray = field(repr=False)
    residual: float = 0.0
    iterations: int = 0
    exact: bool = True

    def diagnostics(self) -> Dict[str, object]:
        return {
            "depth": self.depth,
            "chain_depth": self.chain_space.depth,
            "residual": self.residual,
            "iterations": self.iterations,
            "exact": self.exact,
        }

    @property
    def depth(self) -> int:
        return self.space.depth

    @property
    def spec(self) -> GroupSpec:
        return self.space.spec

    def mass(self, word: Sequence[int]) -> float:
        """ν([w]) para |w| ≤ profundidade da cadeia ou extensão de Markov."""
        space = cylinder_space(self.spec, len(word))
        return float(self.at_depth(len(word))[space.index_of_word(word)])

    def at_depth(self, depth: int) -> np.ndarray:
        """Probabilidades em outra profundidade (marginal ou extensão)."""
        if depth == self.depth:
            return self.probabilities
        if depth <= self.chain_space.depth:
            return _marginalize(self.chain_space, self.chain, depth)
        return _markov_extend(self.chain_space, self.chain, depth)

    def integrate(self, phi: "CylinderFunction") -> float:
        return float(np.dot(self.at_depth(phi.depth), phi.values))

    def rows(self) -> List[Tuple[str, float]]:
        return list(zip(self.space.labels(), self.probabilities.tolist()))


def _marginalize(space: CylinderSpace, p: np.ndarray, depth: int) -> np.ndarray:
    coarse = cylinder_space(space.spec, depth)
    return np.bincount(space.prefix_index(coarse), weights=p, minlength=coarse.size)


def _markov_extend(space: CylinderSpace, p: np.ndarray, depth: int) -> np.ndarray:
    """ν em profundidade maior, condicionando cada letra nas w−1 anteriores."""
    w = space.depth
    target = cylinder_space(space.spec, depth)
    cells = target.words
    block_space = space
    marg_space = cylinder_space(space.spec, w - 1)
    marg = _marginalize(space, p, w - 1)
    out = p[space.index(cells[:, :w])].copy()
    for j in range(w, depth):
        block = p[block_space.index(cells[:, j - w + 1 : j + 1])]
        base = marg[marg_space.index(cells[:, j - w + 1 : j])]
        with np.errstate(divide="ignore", invalid="ignore"):
            out *= np.where(base > 0, block / np.where(base > 0, base, 1.0), 0.0)
    return out


def solve_stationary(
    spec: GroupSpec,
    mu: StepDistribution,
    m: int,
    tolerance: float = 1e-12,
    max_iterations: int = 20_000,
) -> StationaryMeasure:
    """
    Ponto fixo ν = Σ_g μ(g)·g_*ν nos cilindros, por iteração de potência.

    A iteração roda em profundidade w = max(m, 2) e o resultado é
    marginalizado para m. O passo estende ν de w para w + L letras pela
    cadeia de Markov de ordem w − 1, o que só é exato para μ de vizinhos mais
    próximos; com L > 1 o resultado sai marcado com `exact = False`.

    Raises:
        CapabilityError: grupo não livre
        DomainError: μ não simétrica ou elementar, m < 1
        NumericError: resíduo L1 acima da tolerância após max_iterations
    """
    _require_free(spec, "solve_stationary")
    require_symmetric(mu, "solve_stationary")
    require_non_elementary(spec, mu, "solve_stationary")
    if m < 1:
        raise DomainError(f"Profundidade m deve ser ≥ 1, recebido {m}", {"m": m})
    w = max(m, 2)
    L = mu.max_length
    exact = mu.is_nearest_neighbour
    if not exact:
        logger.warning(
            f"ν aproximada: suporte de μ com comprimento {L} > 1, extensão de Markov de ordem {w - 1}"
        )
    space = cylinder_space(spec, w)
    extended = cylinder_space(spec, w + L)
    pushes = [space.index(left_multiply_cells(spec, g.word, extended.words, w)) for g in mu.elements]
    weights = mu.probabilities

    nu = np.full(space.size, 1.0 / space.size)
    residual = math.inf
    for iteration in range(1, max_iterations + 1):
        ext = _markov_extend(space, nu, w + L)
        new = np.zeros(space.size)
        for weight, push in zip(weights, pushes):
            new += weight * np.bincount(push, weights=ext, minlength=space.size)
        new /= new.sum()
        residual = float(np.abs(new - nu).sum())
        nu = new
        if residual < tolerance:
            break
    else:
        logger.error(f"ν não convergiu: resíduo {residual:.3g} após {max_iterations} iterações")
        raise NumericError(
            f"Medida estacionária não convergiu em {max_iterations} iterações",
            {"residual": residual, "iterations": max_iterations, "depth": m},
        )
    logger.info(f"ν em profundidade {m}: {iteration} iterações, resíduo {residual:.3g}")
    target = cylinder_space(spec, m)
    probabilities = nu if m == w else _marginalize(space, nu, m)
    return StationaryMeasure(
        space=target,
        probabilities=probabilities,
        chain_space=space,
        chain=nu,
        residual=residual,
        iterations=iteration,
        exact=exact,
    )


def consistency_deviation(nu: StationaryMeasure) -> float:
    """max |ν([w]) − Σ_s ν([ws])| entre profundidade m−1 e m."""
    if nu.depth < 2:
        return abs(float(nu.probabilities.sum()) - 1.0)
    coarse = nu.at_depth(nu.depth - 1)
    summed = _marginalize(nu.space, nu.probabilities, nu.depth - 1)
    return float(np.abs(coarse - summed).max())


def empirical_stationary(
    spec: GroupSpec,
    prefixes: np.ndarray,
    m: int,
    reference: Optional[StationaryMeasure] = None,
    min_rays: int = 100,
) -> Tuple[np.ndarray, Optional[float]]:
    """
    Frequências dos prefixos estabilizados (linhas de `prefixes`, ≥ m letras).

    Devolve (frequências na ordem das células, distância de variação total
    até `reference` ou None).

    Raises:
        StatisticalError: menos de `min_rays` raios estabilizados
    """
    prefixes = np.asarray(prefixes, dtype=np.int64)
    if prefixes.ndim != 2 or prefixes.shape[0] < min_rays:
        count = 0 if prefixes.ndim != 2 else int(prefixes.shape[0])
        raise StatisticalError(
            f"Raios estabilizados insuficientes: {count} < {min_rays}",
            {"rays": count, "minimum": min_rays},
        )
    space = cylinder_space(spec, m)
    counts = np.bincount(space.index(prefixes[:, :m]), minlength=space.size)
    freq = counts / counts.sum()
    tv = None
    if reference is not None:
        tv = 0.5 * float(np.abs(freq - reference.at_depth(m)).sum())
        logger.info(f"ν empírica ({prefixes.shape[0]} raios, m={m}): TV = {tv:.4f}")
    return freq, tv


# ============================================================================
# Funções de cilindro e operador de transferência
# ============================================================================

@dataclass(frozen=True, eq=False)
class CylinderFunction:
    """Valor por célula de profundidade `space.depth`."""
    space: CylinderSpace
    values: np.ndarray = field(repr=False)
    alpha: Optional[float] = None
    mean_zero: bool = False

    @property
    def depth(self) -> int:
        return self.space.depth

    @property
    def sup_norm(self) -> float:
        return float(np.abs(self.values).max(initial=0.0))

    def lift(self, depth: int) -> "CylinderFunction":
        """A mesma função vista em profundidade maior."""
        finer = cylinder_space(self.space.spec, depth)
        return CylinderFunction(finer, self.values[finer.prefix_index(self.space)], self.alpha, self.mean_zero)

    def rows(self) -> List[Tuple[str, float]]:
        return list(zip(self.space.labels(), self.values.tolist()))


def cylinder_function(
    spec: GroupSpec, m: int, fn: Callable[[Tuple[int, ...]], float]
) -> CylinderFunction:
    space = cylinder_space(spec, m)
    values = np.array([fn(tuple(int(s) for s in row)) for row in space.words], dtype=np.float64)
    return CylinderFunction(space, values)


def constant_function(spec: GroupSpec, m: int, c: float) -> CylinderFunction:
    space = cylinder_space(spec, m)
    return CylinderFunction(space, np.full(space.size, float(c)))


def indicator(spec: GroupSpec, word: Sequence[int], m: Optional[int] = None) -> CylinderFunction:
    """1_[w] em profundidade m ≥ |w|."""
    m = len(word) if m is None else m
    space = cylinder_space(spec, m)
    values = np.all(space.words[:, : len(word)] == np.asarray(word)[None, :], axis=1).astype(np.float64)
    return CylinderFunction(space, values)


class TransferOperator:
    """P de profundidade m para m + L, com tabelas de pré-imagens."""

    def __init__(self, spec: GroupSpec, mu: StepDistribution, depth: int):
        _require_free(spec, "TransferOperator")
        self.spec = spec
        self.mu = mu
        self.depth = depth
        self.reach = mu.max_length
        self.source = cylinder_space(spec, depth)
        self.target = cylinder_space(spec, depth + self.reach)
        self.weights = mu.probabilities
        self.pull = [
            self.source.index(
                left_multiply_cells(spec, invert(spec, g).word, self.target.words, depth)
            )
            for g in mu.elements
        ]
        self.coarse = self.target.prefix_index(self.source)
        if abs(self.weights.sum() - 1.0) > OPERATOR_TOLERANCE:
            raise NumericError("P1 ≠ 1: massa de μ fora da tolerância", {"mass": float(self.weights.sum())})

    def apply_values(self, phi: np.ndarray) -> np.ndarray:
        out = np.zeros(self.target.size)
        for weight, pull in zip(self.weights, self.pull):
            out += weight * phi[pull]
        return out

    def apply(self, phi: CylinderFunction) -> CylinderFunction:
        """
        Pφ em profundidade m + L, com verificação de contração.

        Raises:
            NumericError: ‖Pφ‖∞ > ‖φ‖∞ além do arredondamento
        """
        if phi.depth != self.depth:
            raise DomainError(
                f"Função de profundidade {phi.depth} aplicada a P de profundidade {self.depth}",
                {"phi_depth": phi.depth, "operator_depth": self.depth},
            )
        values = self.apply_values(phi.values)
        bound = phi.sup_norm
        if np.abs(values).max(initial=0.0) > bound * (1 + OPERATOR_TOLERANCE) + OPERATOR_TOLERANCE:
            raise NumericError(
                "P não contraiu na norma do sup",
                {"input_norm": bound, "output_norm": float(np.abs(values).max())},
            )
        return CylinderFunction(self.target, values, phi.alpha)

    def projected(self, values: np.ndarray, weights: np.ndarray) -> np.ndarray:
        """Π P φ: aplica P e projeta de volta com pesos ν da profundidade m + L."""
        return _project_values(self.coarse, self.source.size, self.apply_values(values), weights)


@lru_cache(maxsize=16)
def transfer_operator(spec: GroupSpec, mu: StepDistribution, depth: int) -> TransferOperator:
    return TransferOperator(spec, mu, depth)


def apply_P(spec: GroupSpec, mu: StepDistribution, phi: CylinderFunction) -> CylinderFunction:
    """(Pφ)(ξ) = Σ_g μ(g)·φ(g⁻¹·ξ), exato em profundidade m + L."""
    return transfer_operator(spec, mu, phi.depth).apply(phi)


def _project_values(coarse: np.ndarray, size: int, values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    mass = np.bincount(coarse, weights=weights, minlength=size)
    if np.any(mass <= 0):
        empty = int(np.count_nonzero(mass <= 0))
        raise NumericError(
            f"ν sem massa em {empty} cilindro(s) da projeção",
            {"empty_cells": empty},
        )
    return np.bincount(coarse, weights=weights * values, minlength=size) / mass


def project_depth(phi: CylinderFunction, nu: StationaryMeasure, m: int) -> CylinderFunction:
    """
    Média ν-condicional de φ em cada cilindro de profundidade m ≤ depth(φ).

    Raises:
        NumericError: cilindro sem massa sob ν
    """
    if m > phi.depth:
        raise DomainError(
            f"Projeção para profundidade {m} > {phi.depth}",
            {"target": m, "depth": phi.depth},
        )
    if m == phi.depth:
        return phi
    coarse = cylinder_space(phi.space.spec, m)
    values = _project_values(phi.space.prefix_index(coarse), coarse.size, phi.values, nu.at_depth(phi.depth))
    return CylinderFunction(coarse, values, phi.alpha, phi.mean_zero)


def duality_defect(spec: GroupSpec, mu: StepDistribution, phi: CylinderFunction, nu: StationaryMeasure) -> float:
    """|∫Pφ dν − ∫φ dν|."""
    return abs(nu.integrate(apply_P(spec, mu, phi)) - nu.integrate(phi))


def stationarity_defect(spec: GroupSpec, mu: StepDistribution, nu: StationaryMeasure) -> float:
    """Variação total entre μ∗ν e ν em profundidade m (via dualidade com indicadores)."""
    pushed = _pushed_mass(transfer_operator(spec, mu, nu.depth), nu)
    return 0.5 * float(np.abs(pushed - nu.probabilities).sum())


def _pushed_mass(op: TransferOperator, nu: StationaryMeasure) -> np.ndarray:
    weights = nu.at_depth(op.target.depth)
    out = np.zeros(op.source.size)
    for weight, pull in zip(op.weights, op.pull):
        out += weight * np.bincount(pull, weights=weights, minlength=op.source.size)
    return out


# ============================================================================
# ψ, Poisson e σ²
# ============================================================================

def _horofunction_table(spec: GroupSpec, mu: StepDistribution, cells: np.ndarray, metric: Scale) -> np.ndarray:
    """H[c, g] = h_ξ(g) para ξ ∈ célula c (exige profundidade ≥ |g|)."""
    weights = _letter_weights(spec, metric)
    table = np.zeros((cells.shape[0], len(mu)))
    for k, g in enumerate(mu.elements):
        word = np.asarray(g.word, dtype=np.int64)
        if not word.size:
            continue
        agree = np.cumprod(cells[:, : word.size] == word[None, :], axis=1)
        common = np.cumsum(weights[word])
        cp_weight = (agree * common[None, :]).max(axis=1)
        table[:, k] = common[-1] - 2.0 * cp_weight
    return table


def psi(spec: GroupSpec, mu: StepDistribution, A: float, m: int, metric: Scale = 1.0) -> CylinderFunction:
    """
    ψ(ξ) = Σ_g μ(g)·h_ξ(g) − A por cilindro de profundidade m.

    Raises:
        DomainError: m menor que o maior comprimento do suporte
    """
    _require_free(spec, "psi")
    if m < mu.max_length:
        raise DomainError(
            f"Profundidade {m} não determina h_ξ(g) para |g| = {mu.max_length}",
            {"m": m, "support_length": mu.max_length},
        )
    space = cylinder_space(spec, m)
    values = _horofunction_table(spec, mu, space.words, metric) @ mu.probabilities - A
    return CylinderFunction(space, values)


@dataclass(frozen=True, eq=False)
class PoissonSolution:
    """u com (I − ΠP)u = ψ₀ e os diagnósticos da série de Neumann."""
    u: CylinderFunction
    norms: List[float]
    tau_hat: float
    residual: float
    lifted_residual: float
    iterations: int
    psi_mean: float


def _rate(norms: Sequence[float]) -> float:
    ratios = [b / a for a, b in zip(norms[:-1], norms[1:]) if a > 0 and b > 0]
    if not ratios:
        return 0.0
    tail = ratios[len(ratios) // 2 :]
    return float(np.exp(np.mean(np.log(tail))))


def solve_poisson(
    spec: GroupSpec,
    mu: StepDistribution,
    psi_fn: CylinderFunction,
    nu: StationaryMeasure,
    tolerance: float = 1e-8,
    max_iterations: int = 5_000,
) -> PoissonSolution:
    """
    u = Σ_n (ΠP)^n ψ com projeção em profundidade m e remoção da média.

    Para quando ‖(ΠP)^n ψ‖∞ < tol·(1 − τ̂).

    Raises:
        DomainError: |∫ψ dν| > 10·tol
        SpectralError: nenhuma queda detectada (τ̂ ≥ 1) ou limite de iterações
    """
    m = psi_fn.depth
    weights_m = nu.at_depth(m)
    mean = float(np.dot(weights_m, psi_fn.values))
    if abs(mean) > 10 * tolerance:
        logger.error(f"∫ψ dν = {mean:.3g} excede 10·tol")
        raise DomainError(
            f"ψ não tem média zero sob ν: {mean:.3g}",
            {"psi_mean": mean, "tolerance": tolerance},
        )
    op = transfer_operator(spec, mu, m)
    weights_ext = nu.at_depth(op.target.depth)

    def step(values: np.ndarray) -> np.ndarray:
        projected = op.projected(values, weights_ext)
        return projected - float(np.dot(weights_m, projected))

    psi0 = psi_fn.values - mean
    term = psi0.copy()
    u = np.zeros_like(term)
    norms = [float(np.abs(term).max(initial=0.0))]
    tau = 0.0
    iterations = 0
    while norms[-1] >= tolerance * (1 - tau):
        if iterations >= max_iterations:
            raise SpectralError(
                f"Série de Neumann não convergiu em {max_iterations} termos",
                {"tau_hat": tau, "last_norm": norms[-1], "iterations": iterations},
            )
        u += term
        term = step(term)
        norms.append(float(np.abs(term).max(initial=0.0)))
        iterations += 1
        tau = _rate(norms)
        if iterations >= 10 and tau >= 1.0:
            logger.error(f"Sem decaimento na série de Neumann: τ̂ = {tau:.4f}")
            raise SpectralError(
                f"Série de Neumann sem decaimento (τ̂ = {tau:.4f})",
                {"tau_hat": tau, "norms": norms[-10:]},
            )

    residual = float(np.abs(u - step(u) - psi0).max(initial=0.0))
    lifted = (
        u[op.coarse]
        - op.apply_values(u)
        - psi0[op.coarse]
    )
    lifted_residual = float(np.abs(lifted).max(initial=0.0))
    logger.info(
        f"Poisson: {iterations} termos, τ̂ = {tau:.4f}, resíduo {residual:.3g} "
        f"(sem projeção {lifted_residual:.3g})"
    )
    return PoissonSolution(
        u=CylinderFunction(psi_fn.space, u, mean_zero=True),
        norms=norms,
        tau_hat=tau,
        residual=residual,
        lifted_residual=lifted_residual,
        iterations=iterations,
        psi_mean=mean,
    )


@dataclass(frozen=True)
class SpectralEstimate:
    tau_hat: float
    ratios: List[float]
    iterations: int


def spectral_radius_estimate(
    spec: GroupSpec,
    mu: StepDistribution,
    m: int,
    iterations: int = 60,
    seed: int = 0,
    nu: Optional[StationaryMeasure] = None,
) -> SpectralEstimate:
    """
    τ̂ de ΠP em funções de média zero: média geométrica das razões de norma
    do sup na segunda metade das iterações.

    Raises:
        DomainError: m < 2 (em profundidade 1 só sobra pouco além das constantes)
    """
    if m < 2:
        raise DomainError(f"Estimativa espectral requer m ≥ 2, recebido {m}", {"m": m})
    nu = nu if nu is not None else solve_stationary(spec, mu, m)
    op = transfer_operator(spec, mu, m)
    weights_m = nu.at_depth(m)
    weights_ext = nu.at_depth(op.target.depth)
    f = make_rng(seed).standard_normal(op.source.size)
    f -= float(np.dot(weights_m, f))
    ratios: List[float] = []
    norm = float(np.abs(f).max())
    for _ in range(iterations):
        g = op.projected(f, weights_ext)
        g -= float(np.dot(weights_m, g))
        new_norm = float(np.abs(g).max(initial=0.0))
        if new_norm == 0.0 or norm == 0.0:
            ratios.append(0.0)
            break
        ratios.append(new_norm / norm)
        f, norm = g / new_norm, 1.0
    tail = [r for r in ratios[len(ratios) // 2 :] if r > 0]
    tau = float(np.exp(np.mean(np.log(tail)))) if tail else 0.0
    logger.info(f"τ̂ (m={m}, {len(ratios)} iterações) = {tau:.4f}")
    return SpectralEstimate(tau_hat=tau, ratios=ratios, iterations=len(ratios))


@dataclass(frozen=True)
class VarianceFormula:
    sigma_squared: float
    degenerate: bool
    depth: int


def sigma_squared_formula(
    spec: GroupSpec,
    mu: StepDistribution,
    nu: StationaryMeasure,
    u: CylinderFunction,
    A: float,
    metric: Scale = 1.0,
) -> VarianceFormula:
    """
    σ² = Σ_c ν(c) Σ_g μ(g)·(h_c(g) − A + u(g⁻¹c) − u(c))², em profundidade m + L.
    """
    m = u.depth
    op = transfer_operator(spec, mu, m)
    cells = op.target.words
    H = _horofunction_table(spec, mu, cells, metric)
    weights = nu.at_depth(op.target.depth)
    here = u.values[op.coarse]
    total = np.zeros(op.target.size)
    for k, (weight, pull) in enumerate(zip(op.weights, op.pull)):
        total += weight * (H[:, k] - A + u.values[pull] - here) ** 2
    sigma2 = float(np.dot(weights, total))
    degenerate = sigma2 < DEGENERACY_THRESHOLD
    if degenerate:
        logger.warning(f"σ² = {sigma2:.3g} abaixo do limiar de degenerescência")
    return VarianceFormula(sigma_squared=sigma2, degenerate=degenerate, depth=op.target.depth)


def drift_from_measure(
    spec: GroupSpec, mu: StepDistribution, nu: StationaryMeasure, metric: Scale = 1.0
) -> float:
    """A = ∫∫ h_ξ(g) dμ(g) dν(ξ), na profundidade L."""
    m = max(mu.max_length, 1)
    space = cylinder_space(spec, m)
    H = _horofunction_table(spec, mu, space.words, metric)
    return float(np.dot(nu.at_depth(m), H @ mu.probabilities))


# ============================================================================
# Normas de Hölder, proximalidade e sensibilidade à profundidade
# ============================================================================

def _pairwise_common_prefix(space: CylinderSpace) -> np.ndarray:
    words = space.words
    agree = np.ones((space.size, space.size), dtype=bool)
    cp = np.zeros((space.size, space.size), dtype=np.int64)
    for j in range(space.depth):
        agree &= words[:, j][:, None] == words[:, j][None, :]
        cp += agree
    return cp


def holder_seminorm(phi: CylinderFunction, alpha: float = 0.25) -> float:
    """sup_{ξ≠η} |φ(ξ) − φ(η)|·e^{α(ξ,η)} com a distância e^{−(ξ,η)}."""
    cp = _pairwise_common_prefix(phi.space)
    diff = np.abs(phi.values[:, None] - phi.values[None, :])
    mask = cp < phi.depth
    if not mask.any():
        return 0.0
    return float((diff * np.exp(alpha * cp))[mask].max())


def holder_norm(phi: CylinderFunction, nu: StationaryMeasure, alpha: float = 0.25) -> float:
    """‖φ‖_α = |∫φ dν| + seminorma."""
    return abs(nu.integrate(phi)) + holder_seminorm(phi, alpha)


def random_boundary_pairs(spec: GroupSpec, count: int, seed: int = 0) -> List[Tuple[BoundaryPoint, BoundaryPoint]]:
    """Pares de pontos periódicos distintos com cabeça ≤ 3 e período ≤ 3."""
    _require_free(spec, "random_boundary_pairs")
    rng = make_rng(seed)
    inverse = spec.inverse_of
    ids = list(range(1, spec.num_ids + 1))

    def reduced(length: int, after: Optional[int] = None) -> List[int]:
        word: List[int] = []
        while len(word) < length:
            s = ids[int(rng.integers(len(ids)))]
            prev = word[-1] if word else after
            if prev is not None and inverse[prev] == s:
                continue
            word.append(s)
        return word

    def point() -> BoundaryPoint:
        while True:
            head = reduced(int(rng.integers(0, 4)))
            period = reduced(int(rng.integers(1, 4)), head[-1] if head else None)
            if inverse[period[-1]] != period[0]:
                return BoundaryPoint(spec, tuple(head), tuple(period))

    pairs = []
    while len(pairs) < count:
        xi, eta = point(), point()
        if xi != eta:
            pairs.append((xi, eta))
    return pairs


def proximality_integral(
    spec: GroupSpec,
    mu: StepDistribution,
    n: int,
    alpha: float,
    pairs: Sequence[Tuple[BoundaryPoint, BoundaryPoint]],
    mu_n: Optional[StepDistribution] = None,
) -> float:
    """
    sup_{(ξ,η)} Σ_g μ^{*n}(g)·e^{α((ξ,η) − (g⁻¹ξ, g⁻¹η))}, produtos exatos na árvore.

    Raises:
        DomainError: α ≤ 0, n < 1 ou algum par com ξ = η
    """
    if alpha <= 0 or n < 1:
        raise DomainError("Proximalidade requer α > 0 e n ≥ 1", {"alpha": alpha, "n": n})
    mu_n = mu_n if mu_n is not None else convolution_power(spec, mu, n)
    best = 0.0
    for xi, eta in pairs:
        if xi == eta:
            raise DomainError("Par de proximalidade com ξ = η", {"point": xi.text()})
        base = boundary_gromov_product(xi, eta)
        total = 0.0
        for g, w in mu_n:
            g_inv = invert(spec, g)
            moved = boundary_gromov_product(boundary_action(g_inv, xi)[0], boundary_action(g_inv, eta)[0])
            total += w * math.exp(alpha * (base - moved))
        best = max(best, total)
    return best


def proximality_frontier(
    spec: GroupSpec,
    mu: StepDistribution,
    pairs: Sequence[Tuple[BoundaryPoint, BoundaryPoint]],
    alphas: Sequence[float] = PROXIMALITY_ALPHAS,
    steps: Sequence[int] = PROXIMALITY_STEPS,
) -> List[Dict[str, float]]:
    """Tabela (α, n, valor) sobre a grade."""
    rows = []
    for n in steps:
        mu_n = convolution_power(spec, mu, n)
        for alpha in alphas:
            value = proximality_integral(spec, mu, n, alpha, pairs, mu_n)
            rows.append({"alpha": alpha, "n": n, "value": value, "contracting": value < 1.0})
    return rows


def depth_sensitivity(
    spec: GroupSpec,
    mu: StepDistribution,
    m: int,
    metric: Scale = 1.0,
    tolerance: float = 1e-8,
) -> Dict[str, float]:
    """Refaz ν, u e σ² em m e m + 2 e reporta as diferenças."""
    results = {}
    for depth in (m, m + 2):
        nu = solve_stationary(spec, mu, depth)
        A = drift_from_measure(spec, mu, nu, metric)
        solution = solve_poisson(spec, mu, psi(spec, mu, A, depth, metric), nu, tolerance)
        results[depth] = (nu, A, solution, sigma_squared_formula(spec, mu, nu, solution.u, A, metric))
    nu_m, A_m, sol_m, var_m = results[m]
    nu_f, A_f, sol_f, var_f = results[m + 2]
    u_coarse = project_depth(sol_f.u, nu_f, m)
    return {
        "depth": m,
        "drift_difference": abs(A_m - A_f),
        "u_sup_difference": float(np.abs(u_coarse.values - sol_m.u.values).max(initial=0.0)),
        "sigma_squared_difference": abs(var_m.sigma_squared - var_f.sigma_squared),
    }
