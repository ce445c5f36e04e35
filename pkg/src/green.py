"""
Módulo Green-Martin - Núcleo de Green truncado e geometria associada
Métrica de Green, primeira passagem, kernels de Martin e métrica de Hilbert

Núcleo de Green:
    G_N(e,x) = Σ_{n=0}^{N} μ^{*n}(x)

calculado por propagação vetorizada numa bola de trabalho B = R + margem.
A massa que sai da bola é contabilizada passo a passo ("massa vazada") e
entra no orçamento de erro junto com a cauda temporal ρ̂^{N+1}/(1−ρ̂).
Em grupos livres com μ de vizinhos mais próximos a massa vazada é separada
por cones, o que dá uma cota espacial muito mais fina que a do anel.

Métricas por letra (`LetterMetric`): comprimento aditivo sobre sílabas com
um peso por sílaba. Com pesos −log F(e,s) e μ de vizinhos mais próximos num
grupo livre, é exatamente a métrica de Green (multiplicatividade da
primeira passagem em árvores).
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sparse

from .cayley import CayleyBall, max_radius_within
from .exceptions import AccuracyError, CapabilityError, DomainError, NumericError, RangeError, ResourceError
from .groups import (
    GroupElement,
    GroupKind,
    GroupSpec,
    format_word,
    identity,
    invert,
    multiply,
    word_length,
)
from .logger import get_logger
from .walk import StepDistribution, require_symmetric

logger = get_logger(__name__)

RATE_RADIUS = 8
LOCAL_LIMIT_EXPONENT = 1.5
FIRST_PASSAGE_MARGIN = 8


# ============================================================================
# Métricas por letra
# ============================================================================

@dataclass(frozen=True, eq=False)
class LetterMetric:
    """Comprimento ponderado por sílaba: d(e, s₁⋯s_k) = Σ w(s_i)."""
    spec: GroupSpec
    weights: np.ndarray = field(repr=False)
    name: str = "word"

    @classmethod
    def word(cls, spec: GroupSpec) -> "LetterMetric":
        if spec.kind is GroupKind.LAMPLIGHTER:
            raise CapabilityError("ℤ≀ℤ não tem métrica por letras", {"group": spec.name})
        return cls(spec=spec, weights=np.asarray(spec.letter_length, dtype=np.float64))

    def length(self, g: GroupElement) -> float:
        return float(sum(self.weights[s] for s in g.word))

    def distance(self, x: GroupElement, y: GroupElement) -> float:
        return self.length(multiply(self.spec, invert(self.spec, x), y))

    def prefix_weight(self, word: Sequence[int], k: int) -> float:
        return float(sum(self.weights[s] for s in word[:k]))

    def scaled(self, factor: float) -> "LetterMetric":
        return LetterMetric(self.spec, self.weights * factor, f"{self.name}*{factor:g}")

    def letter_weight(self, label: str) -> float:
        return float(self.weights[self.spec.generator_ids[self.spec.labels.index(label)]])

    @property
    def max_weight(self) -> float:
        return float(self.weights[1:].max())


def letter_first_passage(
    spec: GroupSpec,
    mu: StepDistribution,
    tolerance: float = 1e-15,
    max_iterations: int = 1_000_000,
) -> np.ndarray:
    """
    F(e,s) para cada letra s de um grupo livre, com μ de vizinhos mais próximos.

    Resolve F_s = μ(s) / (1 − Σ_{t≠s} μ(t)·F_{t⁻¹}) por iteração monótona
    a partir de zero.

    Raises:
        CapabilityError: grupo não livre ou suporte fora dos geradores
        NumericError: iteração não convergiu
    """
    if spec.kind is not GroupKind.FREE or not mu.is_nearest_neighbour:
        raise CapabilityError(
            "Pesos de Green por letra exigem grupo livre e μ de vizinhos mais próximos",
            {"group": spec.name, "measure": mu.describe()},
        )
    n_ids = spec.num_ids
    p = np.zeros(n_ids + 1)
    for g, w in mu:
        p[g.word[0]] = w
    inverse = np.asarray(spec.inverse_of)
    F = np.zeros(n_ids + 1)
    for iteration in range(max_iterations):
        weighted = p * F[inverse]
        weighted[0] = 0.0
        total = weighted.sum()
        new = np.zeros_like(F)
        new[1:] = p[1:] / (1.0 - (total - weighted[1:]))
        change = np.abs(new - F).max()
        F = new
        if change < tolerance:
            logger.debug(f"F(e,s) convergiu em {iteration + 1} iterações")
            return F
    raise NumericError(
        f"Primeira passagem por letra não convergiu em {max_iterations} iterações",
        {"residual": float(change), "iterations": max_iterations},
    )


def green_letter_metric(spec: GroupSpec, mu: StepDistribution) -> LetterMetric:
    """Métrica de Green exata em árvores: peso −log F(e,s) por letra."""
    require_symmetric(mu, "green_letter_metric")
    F = letter_first_passage(spec, mu)
    if np.any(F[1:] <= 0):
        raise CapabilityError(
            "Métrica de Green requer todas as letras no suporte",
            {"measure": mu.describe()},
        )
    weights = np.zeros_like(F)
    weights[1:] = -np.log(F[1:])
    return LetterMetric(spec=spec, weights=weights, name="green")


def resolve_metric(spec: GroupSpec, mu: StepDistribution, name: str) -> Optional[LetterMetric]:
    """
    Métrica pedida pela configuração ("word" ou "green").

    ℤ≀ℤ com "word" devolve None (o motor em lote usa o comprimento exato).
    """
    if name == "word":
        return None if spec.kind is GroupKind.LAMPLIGHTER else LetterMetric.word(spec)
    if name == "green":
        if spec.kind is not GroupKind.FREE:
            raise CapabilityError(
                "Métrica de Green ao longo de trajetórias só é exata em grupos livres",
                {"group": spec.name, "metric": name},
            )
        return green_letter_metric(spec, mu)
    raise DomainError(f"Métrica desconhecida: {name!r}", {"metric": name})


# ============================================================================
# Taxa de retorno (raio espectral de μ)
# ============================================================================

def return_probability_rate(returns: Sequence[float]) -> float:
    """
    ρ̂ a partir de μ^{*n}(e), n = 0..T (valores exatos).

    Usa o último par de tempos pares: ρ̂² = p_{2k}/p_{2k−2}·(k/(k−1))^{3/2},
    corrigindo o fator polinomial do teorema limite local.
    """
    returns = np.asarray(returns, dtype=np.float64)
    k = (returns.size - 1) // 2
    while k >= 2 and (returns[2 * k] <= 0 or returns[2 * k - 2] <= 0):
        k -= 1
    if k < 2:
        return 0.0
    ratio = returns[2 * k] / returns[2 * k - 2] * (k / (k - 1)) ** LOCAL_LIMIT_EXPONENT
    return float(min(math.sqrt(ratio), 1.0 - 1e-12))


def _preimage_maps(ball: CayleyBall, mu: StepDistribution) -> List[np.ndarray]:
    """Para cada g do suporte: x ↦ índice de x·g⁻¹ (vazio → índice extra)."""
    maps = []
    for g in mu.elements:
        pre = ball.right_multiplication(invert(ball.spec, g).word)
        pre[pre < 0] = ball.size
        maps.append(pre)
    return maps


@dataclass(frozen=True, eq=False)
class _Propagation:
    """Resultado da propagação truncada numa bola."""
    total: np.ndarray
    returns: np.ndarray
    leaked: np.ndarray
    # massa que sai da bola a partir de cada ponto, somada nos passos 1..N
    exit_mass: np.ndarray


def _propagate(ball: CayleyBall, mu: StepDistribution, steps: int) -> _Propagation:
    """Soma Σ_{n≤steps} μ^{*n} restrita à bola, com a massa vazada por passo e por ponto."""
    maps = _preimage_maps(ball, mu)
    weights = mu.probabilities
    # μ simétrica: y·g sai da bola ⇔ o mapa de g⁻¹ aponta para o índice extra
    out_weight = np.zeros(ball.size)
    for w, pre in zip(weights, maps):
        out_weight += w * (pre[: ball.size] == ball.size)
    p = np.zeros(ball.size + 1)
    p[0] = 1.0
    total = p[: ball.size].copy()
    exposure = np.zeros(ball.size)
    returns = [1.0]
    leaked = []
    mass = 1.0
    for n in range(1, steps + 1):
        exposure += p[: ball.size]
        new = np.zeros(ball.size + 1)
        for w, pre in zip(weights, maps):
            new[: ball.size] += w * p[pre]
        new_mass = float(new.sum())
        leaked.append(max(mass - new_mass, 0.0))
        mass = new_mass
        total += new[: ball.size]
        returns.append(float(new[0]))
        p = new
        logger.debug(f"passo {n}: massa {mass:.6g}, vazada {leaked[-1]:.3g}")
    return _Propagation(
        total=total,
        returns=np.asarray(returns),
        leaked=np.asarray(leaked),
        exit_mass=exposure * out_weight,
    )


def spectral_radius_of_measure(
    spec: GroupSpec, mu: StepDistribution, radius: int = RATE_RADIUS, cap: int = 5_000_000
) -> float:
    """ρ̂ de μ por retornos exatos numa bola de sondagem."""
    radius = min(radius, max_radius_within(spec, cap))
    ball = CayleyBall.build(spec, radius, cap)
    exact_steps = 2 * (radius // max(1, mu.max_length))
    return return_probability_rate(_propagate(ball, mu, exact_steps).returns)


def _annulus_bound(big: CayleyBall, run: _Propagation, R: int) -> float:
    """Massa vazada total vezes o maior G no anel a distância ≥ W + 1 − R."""
    annulus = big.depth >= max(big.radius + 1 - R, 0)
    return float(run.leaked.sum() * run.total[annulus].max(initial=0.0))


def _tree_cone_bound(
    spec: GroupSpec, mu: StepDistribution, big: CayleyBall, run: _Propagation, embedded: np.ndarray
) -> float:
    """
    Cota espacial por cones para μ de vizinhos mais próximos num grupo livre.

    A massa que sai por y (profundidade W) volta a x com peso G(z,x), z = y·s,
    e em árvores G(z,x) ≤ G(e,e)·q^{d(z,x)} com q = max_s F(e,s). Separando a
    massa vazada pelo prefixo comum j = |y ∧ x|, d(z,x) = W + 1 + |x| − 2j.
    """
    F = letter_first_passage(spec, mu)
    p = np.zeros(spec.num_ids + 1)
    for g, w in mu:
        p[g.word[0]] = w
    g_e = 1.0 / (1.0 - float(np.dot(p, F[np.asarray(spec.inverse_of)])))
    q = float(F[1:].max())

    # cone[v] = massa vazada a partir de pontos com prefixo v
    cone = run.exit_mass.copy()
    for d in range(big.radius, 0, -1):
        layer = np.nonzero(big.depth == d)[0]
        np.add.at(cone, big.parent[layer], cone[layer])

    node = embedded.astype(np.int64)
    x_depth = big.depth[node].astype(np.float64)
    below = np.zeros(node.size)
    bound = np.zeros(node.size)
    while np.any(node >= 0):
        alive = node >= 0
        safe = np.where(alive, node, 0)
        here = np.where(alive, cone[safe], 0.0)
        distance = big.radius + 1 + x_depth - 2.0 * big.depth[safe]
        bound += np.where(alive, (here - below) * g_e * q ** distance, 0.0)
        below = here
        node = np.where(alive, big.parent[safe], -1)
    return float(bound.max(initial=0.0))


# ============================================================================
# Tabela de Green
# ============================================================================

@dataclass(frozen=True, eq=False)
class GreenTable:
    """
    Valores G_N(e,x) para x na bola de raio `radius`.

    Imutável; G(x,y) = G_N(e, x⁻¹y) por invariância.
    """
    spec: GroupSpec
    measure: StepDistribution
    truncation: int
    radius: int
    working_radius: int
    margin: int
    ball: CayleyBall = field(repr=False)
    values: np.ndarray = field(repr=False)
    returns: np.ndarray = field(repr=False)
    leaked_mass: np.ndarray = field(repr=False)
    rho_hat: float = 0.0
    tail_bound: float = 0.0
    spatial_bound: float = 0.0
    tolerance: float = 1e-3

    def value(self, g: GroupElement) -> float:
        """G_N(e,g); RangeError fora da bola."""
        i = self.ball.index_of(g)
        if i < 0:
            raise RangeError(
                f"{format_word(self.spec, g)} fora da bola de raio {self.radius}",
                {"element": format_word(self.spec, g), "radius": self.radius},
            )
        return float(self.values[i])

    def green(self, x: GroupElement, y: GroupElement) -> float:
        return self.value(multiply(self.spec, invert(self.spec, x), y))

    @property
    def at_identity(self) -> float:
        return float(self.values[0])

    def rows(self) -> List[Tuple[str, float]]:
        """(palavra, G) em ordem de índice, para exportação CSV."""
        return [
            (format_word(self.spec, self.ball.element_at(i)), float(self.values[i]))
            for i in range(self.ball.size)
        ]

    def summary(self) -> Dict[str, object]:
        return {
            "truncation": self.truncation,
            "radius": self.radius,
            "working_radius": self.working_radius,
            "margin": self.margin,
            "size": self.ball.size,
            "G_e": self.at_identity,
            "rho_hat": self.rho_hat,
            "leaked_mass_total": float(self.leaked_mass.sum()),
            "tail_bound": self.tail_bound,
            "spatial_bound": self.spatial_bound,
            "tolerance": self.tolerance,
        }


def green_kernel(
    spec: GroupSpec,
    mu: StepDistribution,
    N: int,
    R: int,
    tolerance: float = 1e-3,
    support_cap: int = 5_000_000,
) -> GreenTable:
    """
    G_N(e,x) = Σ_{n=0}^{N} μ^{*n}(x) para x em ball(R).

    A propagação roda em ball(R + margem), margem = ⌈log(tol)/log ρ̂⌉ limitada
    pelo limite de suporte e pelo raio em que a truncagem já é exata.

    Raises:
        DomainError: μ não simétrica ou N, R negativos
        ResourceError: ball(R) excede o limite de suporte (limite ecoado)
        AccuracyError: cota espacial de erro maior que `tolerance`
    """
    require_symmetric(mu, "green_kernel")
    if N < 0 or R < 0:
        raise DomainError("N e R devem ser não negativos", {"N": N, "R": R})
    radius_cap = max_radius_within(spec, support_cap)
    if R > radius_cap:
        logger.error(f"Raio {R} excede o raio máximo {radius_cap} do limite {support_cap}")
        raise ResourceError(
            f"Raio {R} não cabe no limite de suporte {support_cap} (raio máximo {radius_cap})",
            {"radius": R, "max_radius": radius_cap, "cap": support_cap},
        )

    step_length = max(1, mu.max_length)
    rate = spectral_radius_of_measure(spec, mu, min(RATE_RADIUS, radius_cap), support_cap)
    if 0.0 < rate < 1.0:
        margin = int(math.ceil(math.log(tolerance) / math.log(rate)))
    else:
        margin = radius_cap
    exact_radius = int(math.ceil((N * step_length + R) / 2))
    working = max(R, min(R + margin, exact_radius, radius_cap))
    logger.info(
        f"green_kernel {spec.name}: N={N}, R={R}, bola de trabalho {working} "
        f"(ρ̂ sonda {rate:.4f}, margem {margin})"
    )

    big = CayleyBall.build(spec, working, support_cap)
    run = _propagate(big, mu, N)
    full, returns, leaked = run.total, run.returns, run.leaked
    small = CayleyBall.build(spec, R, support_cap)
    embedded = small.embed_into(big)

    exact_times = 2 * (working // step_length)
    rho_hat = return_probability_rate(returns[: exact_times + 1]) or rate
    tail_bound = rho_hat ** (N + 1) / (1.0 - rho_hat) if rho_hat < 1.0 else math.inf

    if working >= exact_radius:
        spatial_bound = 0.0
    elif spec.kind is GroupKind.FREE and mu.is_nearest_neighbour:
        spatial_bound = min(_tree_cone_bound(spec, mu, big, run, embedded), _annulus_bound(big, run, R))
    else:
        spatial_bound = _annulus_bound(big, run, R)
    if spatial_bound > tolerance:
        logger.error(
            f"Cota espacial {spatial_bound:.3g} > tolerância {tolerance} "
            f"(bola de trabalho {working})"
        )
        raise AccuracyError(
            f"Bola de trabalho {working} pequena demais para tolerância {tolerance}",
            {
                "spatial_bound": spatial_bound,
                "leaked_mass": float(leaked.sum()),
                "working_radius": working,
                "tolerance": tolerance,
                "cap": support_cap,
            },
        )

    values = full[embedded]
    table = GreenTable(
        spec=spec,
        measure=mu,
        truncation=N,
        radius=R,
        working_radius=working,
        margin=working - R,
        ball=small,
        values=values,
        returns=returns,
        leaked_mass=leaked,
        rho_hat=rho_hat,
        tail_bound=tail_bound,
        spatial_bound=spatial_bound,
        tolerance=tolerance,
    )
    logger.info(
        f"G_N(e,e) = {table.at_identity:.6f}; massa vazada {leaked.sum():.3g}; "
        f"cota temporal {tail_bound:.3g}"
    )
    return table


# ============================================================================
# Primeira passagem
# ============================================================================

def first_passage(
    spec: GroupSpec,
    mu: StepDistribution,
    x: GroupElement,
    y: GroupElement,
    N: int,
    margin: int = FIRST_PASSAGE_MARGIN,
    support_cap: int = 5_000_000,
) -> float:
    """
    F_N(x,y): probabilidade de o passeio partindo de x atingir y em ≤ N passos.

    Programação dinâmica com estado absorvente em y (por invariância, parte
    de e rumo a x⁻¹y) sobre uma bola de raio |x⁻¹y| + margem.
    """
    target = multiply(spec, invert(spec, x), y)
    if target == identity(spec):
        return 1.0
    radius = min(word_length(spec, target) + margin, max_radius_within(spec, support_cap))
    ball = CayleyBall.build(spec, radius, support_cap)
    t = ball.index_of(target)
    if t < 0:
        raise RangeError(
            f"Alvo {format_word(spec, target)} fora da bola de raio {radius}",
            {"target": format_word(spec, target), "radius": radius},
        )
    rows, cols, data = [], [], []
    for g, w in mu:
        dst = ball.right_multiplication(g.word)
        src = np.nonzero(dst >= 0)[0]
        rows.append(src)
        cols.append(dst[src])
        data.append(np.full(src.size, w))
    transition = sparse.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(ball.size, ball.size),
    )
    forward = transition.T.tocsr()
    q = np.zeros(ball.size)
    q[0] = 1.0
    hit = 0.0
    for _ in range(N):
        q = forward @ q
        hit += q[t]
        q[t] = 0.0
    logger.debug(f"F_{N}(e,{format_word(spec, target)}) = {hit:.6g}")
    return float(hit)


# ============================================================================
# Métrica de Green e quase-isometria
# ============================================================================

def green_metric(table: GreenTable, x: GroupElement, y: GroupElement) -> float:
    """d_G(x,y) = log G_N(e,e) − log G_N(e, x⁻¹y)."""
    value = table.green(x, y)
    if value <= 0:
        raise RangeError(
            "G_N(e,x⁻¹y) = 0: truncagem menor que a distância",
            {"x": format_word(table.spec, x), "y": format_word(table.spec, y)},
        )
    return math.log(table.at_identity) - math.log(value)


@dataclass(frozen=True)
class QuasiIsometryFit:
    """(1/C)·d_S − b ≤ d_G ≤ C·d_S + b sobre os pares ajustados."""
    C: float
    b: float
    slope: float
    pairs: int

    def as_dict(self) -> Dict[str, float]:
        return {"C": self.C, "b": self.b, "slope": self.slope, "pairs": self.pairs}


def fit_quasi_isometry(d_word: np.ndarray, d_green: np.ndarray) -> QuasiIsometryFit:
    """
    Ajuste de (C, b): inclinação por mínimos quadrados pela origem,
    C = max(1, inclinação, 1/inclinação) e b mínimo que valida as duas
    desigualdades.
    """
    d_word = np.asarray(d_word, dtype=np.float64)
    d_green = np.asarray(d_green, dtype=np.float64)
    mask = d_word > 0
    if not mask.any():
        raise DomainError("Ajuste de quase-isometria sem pares distintos", {})
    dw, dg = d_word[mask], d_green[mask]
    slope = float(np.dot(dw, dg) / np.dot(dw, dw))
    C = max(1.0, slope, 1.0 / slope)
    b = max(0.0, float(np.max(dg - C * dw)), float(np.max(dw / C - dg)))
    return QuasiIsometryFit(C=C, b=b, slope=slope, pairs=int(mask.sum()))


def quasi_isometry_constants(table: GreenTable, radius: Optional[int] = None) -> QuasiIsometryFit:
    """
    (C, b) sobre todos os pares da bola, reduzidos por invariância a x⁻¹y.
    """
    radius = table.radius if radius is None else radius
    if radius > table.radius:
        raise RangeError(
            f"Raio {radius} maior que a tabela ({table.radius})",
            {"radius": radius, "table_radius": table.radius},
        )
    idx = table.ball.within(radius)
    values = table.values[idx]
    if np.any(values <= 0):
        raise RangeError("Tabela com zeros na bola pedida (truncagem curta)", {"radius": radius})
    d_green = math.log(table.at_identity) - np.log(values)
    d_word = table.ball.depth[idx].astype(np.float64)
    fit = fit_quasi_isometry(d_word, d_green)
    logger.info(f"Quase-isometria: C={fit.C:.5f}, b={fit.b:.5f} ({fit.pairs} pares)")
    return fit


def factorization_gap(table: GreenTable, x: GroupElement, N: Optional[int] = None) -> float:
    """|G_N(e,x) − G_N(e,e)·F_N(e,x)|."""
    N = table.truncation if N is None else N
    F = first_passage(table.spec, table.measure, identity(table.spec), x, N)
    return abs(table.value(x) - table.at_identity * F)


# ============================================================================
# Kernels de Martin e métrica de Hilbert
# ============================================================================

@dataclass(frozen=True, eq=False)
class MartinKernelView:
    """K_y(z) = G(z,y)/G(e,y) para z na bola de raio `radius`."""
    table: GreenTable
    pole: GroupElement
    radius: int
    points: Tuple[GroupElement, ...] = field(repr=False)
    values: np.ndarray = field(repr=False)

    def at(self, z: GroupElement) -> float:
        return float(self.values[self.points.index(z)])


def martin_kernel(table: GreenTable, y: GroupElement, radius: int) -> MartinKernelView:
    """
    Kernel de Martin com polo y avaliado em ball(radius).

    Raises:
        RangeError: se z⁻¹y sair da tabela para algum z
    """
    spec = table.spec
    if radius + word_length(spec, y) > table.radius:
        raise RangeError(
            f"ball({radius}) com polo de comprimento {word_length(spec, y)} "
            f"excede a tabela de raio {table.radius}",
            {"radius": radius, "pole": format_word(spec, y), "table_radius": table.radius},
        )
    z_ball = CayleyBall.build(spec, radius)
    points = tuple(z_ball.elements())
    scale = table.value(y)
    values = np.array([table.green(z, y) for z in points]) / scale
    return MartinKernelView(table=table, pole=y, radius=radius, points=points, values=values)


@dataclass(frozen=True)
class HilbertDistance:
    """½·log(β/α) com os pontos onde sup e inf foram atingidos."""
    distance: float
    alpha: float
    beta: float
    argsup: str
    arginf: str


def hilbert_metric(
    view_x: MartinKernelView,
    view_y: MartinKernelView,
    ball: Optional[Sequence[int]] = None,
) -> HilbertDistance:
    """
    Distância de Hilbert entre K_x e K_y com a ordem pontual na bola.

    β = sup_z K_y(z)/K_x(z), α = inf_z K_y(z)/K_x(z); razões nulas ou
    infinitas dão distância +∞.

    Raises:
        DomainError: views de tabelas/bolas diferentes ou bola vazia
    """
    if view_x.table is not view_y.table or view_x.points != view_y.points:
        raise DomainError("Views de Martin sobre tabelas ou bolas diferentes", {})
    idx = np.arange(len(view_x.points)) if ball is None else np.asarray(list(ball), dtype=np.int64)
    if idx.size == 0:
        raise DomainError("Métrica de Hilbert sobre bola vazia", {})
    kx = view_x.values[idx]
    ky = view_y.values[idx]
    spec = view_x.table.spec
    if np.any(kx <= 0) or np.any(ky <= 0):
        return HilbertDistance(math.inf, 0.0, math.inf, "", "")
    ratio = ky / kx
    top, bottom = int(np.argmax(ratio)), int(np.argmin(ratio))
    beta, alpha = float(ratio[top]), float(ratio[bottom])
    return HilbertDistance(
        distance=0.5 * math.log(beta / alpha),
        alpha=alpha,
        beta=beta,
        argsup=format_word(spec, view_x.points[idx[top]]),
        arginf=format_word(spec, view_x.points[idx[bottom]]),
    )


@dataclass(frozen=True)
class HilbertGreenReport:
    """Desvio máximo |ρ(K_x,K_y) − d_G(x,y)| sobre pares de ball(R − margem)."""
    max_deviation: float
    worst_pair: Tuple[str, str]
    argsup: str
    arginf: str
    pairs: int
    radius: int
    pair_radius: int
    table: Dict[str, object]

    def as_dict(self) -> Dict[str, object]:
        return {
            "max_deviation": self.max_deviation,
            "worst_pair": list(self.worst_pair),
            "argsup": self.argsup,
            "arginf": self.arginf,
            "pairs": self.pairs,
            "radius": self.radius,
            "pair_radius": self.pair_radius,
            "table": self.table,
        }


def verify_hilbert_green(
    spec: GroupSpec,
    mu: StepDistribution,
    R: int,
    N: int,
    margin: int = 2,
    tolerance: float = 1e-3,
    support_cap: int = 5_000_000,
) -> HilbertGreenReport:
    """
    Compara a métrica de Hilbert dos kernels de Martin com d_G.

    z percorre ball(R); x, y percorrem ball(R − margin). A tabela cobre
    ball(2R − margin). As constantes de normalização dos kernels se cancelam
    em β/α, então ρ(K_x,K_y) = ½·(max_z − min_z) de log G(z,y) − log G(z,x).
    """
    pair_radius = R - margin
    if pair_radius < 0:
        raise DomainError("Margem maior que o raio", {"R": R, "margin": margin})
    table = green_kernel(spec, mu, N, R + pair_radius, tolerance, support_cap)
    z_points = CayleyBall.build(spec, R).elements()
    z_inverse = [invert(spec, z) for z in z_points]
    pairs_ball = CayleyBall.build(spec, pair_radius)
    xs = pairs_ball.elements()

    log_g = np.empty((len(xs), len(z_points)))
    for i, x in enumerate(xs):
        log_g[i] = np.log([table.value(multiply(spec, zi, x)) for zi in z_inverse])
    diff = log_g[None, :, :] - log_g[:, None, :]
    hilbert = 0.5 * (diff.max(axis=2) - diff.min(axis=2))

    log_e = math.log(table.at_identity)
    d_green = np.empty((len(xs), len(xs)))
    for i, x in enumerate(xs):
        x_inv = invert(spec, x)
        for j, y in enumerate(xs):
            d_green[i, j] = log_e - math.log(table.value(multiply(spec, x_inv, y)))

    deviation = np.abs(hilbert - d_green)
    i, j = np.unravel_index(int(np.argmax(deviation)), deviation.shape)
    worst = diff[i, j]
    report = HilbertGreenReport(
        max_deviation=float(deviation[i, j]),
        worst_pair=(format_word(spec, xs[i]), format_word(spec, xs[j])),
        argsup=format_word(spec, z_points[int(np.argmax(worst))]),
        arginf=format_word(spec, z_points[int(np.argmin(worst))]),
        pairs=len(xs) ** 2,
        radius=R,
        pair_radius=pair_radius,
        table=table.summary(),
    )
    logger.info(
        f"Hilbert vs Green: desvio máximo {report.max_deviation:.3g} em {report.worst_pair}"
    )
    return report
