"""
Módulo de Fronteira - Geometria exata na árvore de Cayley de grupos livres
Produtos de Gromov, δ, horofunções, ação na fronteira e convergência de raios

Pontos de fronteira:
- periódicos: cabeça·período^∞ (ex.: "(a)" = a^∞, "a.(b)" = ab^∞), conhecidos
  em qualquer profundidade;
- por prefixo: apenas as m primeiras letras (cilindro [w]); toda operação
  declara quanta profundidade consome e levanta PrecisionError quando falta.

Numa árvore, com métrica aditiva por letra:
    h_ξ(x) = d(e,x) − 2·w((x,ξ)_e)
onde w(k) é o peso das k primeiras letras comuns.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import CapabilityError, ConfigError, DomainError, PrecisionError
from .green import LetterMetric
from .groups import (
    GroupElement,
    GroupKind,
    GroupSpec,
    common_prefix_length,
    element_from_word,
    format_word,
    invert,
    multiply,
    parse_word,
    reduce_word,
    word_length,
)
from .logger import get_logger
from .walk import Trajectory, make_rng

logger = get_logger(__name__)

DELTA_SAMPLE_CAP = 200

Metric = Callable[[GroupElement, GroupElement], float]
Scale = Union[float, LetterMetric]


def _require_tree(spec: GroupSpec, operation: str) -> None:
    if spec.kind is not GroupKind.FREE:
        raise CapabilityError(
            f"{operation} só é exato em árvores (grupos livres)",
            {"group": spec.name, "operation": operation},
        )


# ============================================================================
# Pontos de fronteira
# ============================================================================

@dataclass(frozen=True, eq=False)
class BoundaryPoint:
    """
    Palavra reduzida infinita, representada por `prefix` (+ `period`).

    Com período: ξ = prefix·period^∞ em forma canônica (cabeça mínima,
    período primitivo). Sem período: só o cilindro [prefix] é conhecido.
    """
    spec: GroupSpec = field(repr=False)
    prefix: Tuple[int, ...]
    period: Tuple[int, ...] = ()

    def __post_init__(self):
        _require_tree(self.spec, "BoundaryPoint")
        if self.period:
            head, period = _canonical_pattern(self.spec, self.prefix, self.period)
            object.__setattr__(self, "prefix", head)
            object.__setattr__(self, "period", period)
        elif not self.prefix:
            raise DomainError("Ponto de fronteira precisa de prefixo não vazio", {})
        elif reduce_word(self.spec, self.prefix) != tuple(self.prefix):
            raise DomainError(
                "Prefixo de ponto de fronteira precisa ser reduzido",
                {"prefix": list(self.prefix)},
            )

    @property
    def is_periodic(self) -> bool:
        return bool(self.period)

    @property
    def depth(self) -> float:
        """Letras conhecidas (∞ para pontos periódicos)."""
        return math.inf if self.period else len(self.prefix)

    def letters(self, k: int) -> Tuple[int, ...]:
        """As k primeiras letras; PrecisionError além da profundidade."""
        if k <= len(self.prefix):
            return self.prefix[:k]
        if not self.period:
            raise PrecisionError(
                f"Profundidade {len(self.prefix)} insuficiente: pedidas {k} letras",
                {"depth": len(self.prefix), "requested": k},
            )
        extra = k - len(self.prefix)
        reps = extra // len(self.period) + 1
        return (self.prefix + self.period * reps)[:k]

    def materialize(self, depth: int) -> "BoundaryPoint":
        """Ponto por prefixo com `depth` letras."""
        return BoundaryPoint(self.spec, self.letters(depth))

    def truncate(self, depth: int) -> "BoundaryPoint":
        return BoundaryPoint(self.spec, self.letters(min(depth, self.depth)))

    def agrees_with(self, other: "BoundaryPoint", depth: int) -> bool:
        return self.letters(depth) == other.letters(depth)

    def text(self) -> str:
        return format_boundary_point(self)

    def __eq__(self, other):
        if not isinstance(other, BoundaryPoint):
            return NotImplemented
        return (
            self.spec.name == other.spec.name
            and self.prefix == other.prefix
            and self.period == other.period
        )

    def __hash__(self):
        return hash((self.spec.name, self.prefix, self.period))

    def __str__(self) -> str:
        return self.text()


def _canonical_pattern(
    spec: GroupSpec, head: Sequence[int], period: Sequence[int]
) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    head, period = tuple(head), tuple(period)
    inverse = spec.inverse_of
    reduced = reduce_word(spec, period) == period and inverse[period[-1]] != period[0]
    if not reduced or reduce_word(spec, head) != head or (head and inverse[head[-1]] == period[0]):
        raise DomainError(
            "Padrão periódico não é uma palavra reduzida infinita",
            {"head": list(head), "period": list(period)},
        )
    n = len(period)
    for k in range(1, n + 1):
        if n % k == 0 and period[:k] * (n // k) == period:
            period = period[:k]
            break
    while head and head[-1] == period[-1]:
        head = head[:-1]
        period = period[-1:] + period[:-1]
    return head, period


def boundary_point(
    spec: GroupSpec, prefix: Union[GroupElement, Sequence[int]], period: Optional[Union[GroupElement, Sequence[int]]] = None
) -> BoundaryPoint:
    """Construtor a partir de elementos ou ids de sílaba."""
    head = prefix.word if isinstance(prefix, GroupElement) else tuple(prefix)
    tail = () if period is None else (period.word if isinstance(period, GroupElement) else tuple(period))
    return BoundaryPoint(spec, head, tail)


def parse_boundary_point(spec: GroupSpec, text: str) -> BoundaryPoint:
    """
    Interpreta "a.(b)" (ab^∞), "(a.b)" ((ab)^∞) ou "a.b" (cilindro [ab]).
    """
    text = text.strip()
    head_text, sep, rest = text.partition("(")
    if not sep:
        return boundary_point(spec, parse_word(spec, text))
    if not rest.endswith(")"):
        raise ConfigError(
            f"Ponto de fronteira malformado {text!r}: falta ')'",
            {"input": text, "position": len(text)},
        )
    head = parse_word(spec, head_text.rstrip(".")) if head_text.strip(". ") else None
    period = parse_word(spec, rest[:-1])
    if not period.word:
        raise ConfigError(f"Período vazio em {text!r}", {"input": text})
    return boundary_point(spec, head.word if head is not None else (), period)


def format_boundary_point(xi: BoundaryPoint) -> str:
    spec = xi.spec
    head = format_word(spec, element_from_word(spec, xi.prefix)) if xi.prefix else ""
    if not xi.period:
        return head
    tail = ".".join(spec.label_of(s) for s in xi.period)
    return f"{head}.({tail})" if head else f"({tail})"


# ============================================================================
# Produtos de Gromov e δ
# ============================================================================

def gromov_product(metric: Metric, x: GroupElement, y: GroupElement, z: GroupElement) -> float:
    """(x,y)_z = (d(x,z) + d(y,z) − d(x,y))/2."""
    return 0.5 * (metric(x, z) + metric(y, z) - metric(x, y))


def word_distance(spec: GroupSpec) -> Metric:
    """d(x,y) = |x⁻¹y| para qualquer grupo suportado."""

    def distance(x: GroupElement, y: GroupElement) -> float:
        return float(word_length(spec, multiply(spec, invert(spec, x), y)))

    return distance


def estimate_delta(
    spec: GroupSpec,
    metric: Metric,
    points: Sequence[GroupElement],
    sample_size: int = DELTA_SAMPLE_CAP,
    seed: int = 0,
) -> float:
    """
    δ̂ = max sobre quádruplas de min{(x,z)_w, (z,y)_w} − (x,y)_w, limitado em 0.

    Com mais de `sample_size` pontos, usa uma amostra fixa pela semente.

    Raises:
        DomainError: menos de 4 pontos
    """
    points = list(points)
    if len(points) < 4:
        raise DomainError(f"δ requer ≥ 4 pontos, recebidos {len(points)}", {"points": len(points)})
    if len(points) > sample_size:
        pick = make_rng(seed).choice(len(points), size=sample_size, replace=False)
        points = [points[i] for i in sorted(pick)]
    n = len(points)
    D = np.array([[metric(x, y) for y in points] for x in points])
    delta = 0.0
    for w in range(n):
        G = 0.5 * (D[:, w][:, None] + D[w, :][None, :] - D)
        # (max, min)-produto: M[x,y] = max_z min(G[x,z], G[z,y])
        M = np.minimum(G[:, :, None], G[None, :, :]).max(axis=1)
        delta = max(delta, float((M - G).max()))
    logger.info(f"δ̂ em {spec.name} sobre {n} pontos: {delta:.6g}")
    return max(delta, 0.0)


def boundary_gromov_product(xi: BoundaryPoint, eta: BoundaryPoint, metric: Scale = 1.0) -> float:
    """(ξ,η)_e = peso do maior prefixo comum; ξ = η rejeitado."""
    if xi == eta:
        raise DomainError("Produto de Gromov de ξ consigo mesmo é infinito", {"point": xi.text()})
    depth = min(xi.depth, eta.depth)
    if math.isinf(depth):
        depth = len(xi.prefix) + len(eta.prefix) + 2 * len(xi.period) * len(eta.period)
    depth = int(depth)
    cp = common_prefix_length(xi.letters(depth), eta.letters(depth))
    if cp == depth:
        raise PrecisionError(
            f"Pontos concordam em toda a profundidade {depth}",
            {"xi": xi.text(), "eta": eta.text(), "depth": depth},
        )
    return _prefix_weight(xi.letters(cp), metric)


def _prefix_weight(word: Sequence[int], metric: Scale) -> float:
    if isinstance(metric, LetterMetric):
        return float(sum(metric.weights[s] for s in word))
    return float(metric) * len(word)


# ============================================================================
# Horofunções e ação na fronteira
# ============================================================================

def horofunction_eval(xi: BoundaryPoint, x: GroupElement, metric: Scale = 1.0) -> float:
    """
    h_ξ(x) = d(e,x) − 2·w((x,ξ)_e); h_ξ(e) = 0.

    `metric` é uma escala (1 = métrica de palavra) ou uma LetterMetric.

    Raises:
        PrecisionError: prefixo comum atinge a profundidade de ξ e |x| a excede
    """
    word = x.word
    known = xi.letters(int(min(len(word), xi.depth)))
    cp = common_prefix_length(word, known)
    if not xi.is_periodic and cp == len(xi.prefix) and len(word) > cp:
        raise PrecisionError(
            f"Profundidade {len(xi.prefix)} de ξ não determina (x,ξ) para |x| = {len(word)}",
            {"xi": xi.text(), "x_length": len(word)},
        )
    return _prefix_weight(word, metric) - 2.0 * _prefix_weight(word[:cp], metric)


@dataclass(frozen=True)
class Horofunction:
    """h_ξ normalizada em e, avaliável como função."""
    point: BoundaryPoint
    metric: Scale = 1.0

    def __call__(self, x: GroupElement) -> float:
        return horofunction_eval(self.point, x, self.metric)


def boundary_action(
    g: GroupElement, xi: BoundaryPoint, metric: Scale = 1.0
) -> Tuple[BoundaryPoint, float]:
    """
    g·ξ (concatenação reduzida) e o deslocamento de cociclo h_ξ(g⁻¹).

    h_{g·ξ}(x) = h_ξ(g⁻¹x) − h_ξ(g⁻¹). Pontos por prefixo com profundidade
    m ≤ |g| levantam PrecisionError; o resultado tem profundidade m + |g| − 2c.
    """
    spec = xi.spec
    if xi.is_periodic:
        reps = len(g.word) // len(xi.period) + 2
        word = reduce_word(spec, g.word + xi.prefix + xi.period * reps)
        return BoundaryPoint(spec, word, xi.period), _cocycle_shift(g, xi, metric)
    m = len(xi.prefix)
    if m <= len(g.word):
        raise PrecisionError(
            f"Profundidade {m} de ξ não excede |g| = {len(g.word)}",
            {"xi": xi.text(), "g": format_word(spec, g), "depth": m},
        )
    word = reduce_word(spec, g.word + xi.prefix)
    return BoundaryPoint(spec, word), _cocycle_shift(g, xi, metric)


def _cocycle_shift(g: GroupElement, xi: BoundaryPoint, metric: Scale) -> float:
    return horofunction_eval(xi, invert(xi.spec, g), metric) if g.word else 0.0


# ============================================================================
# Trajetórias na árvore
# ============================================================================

class _TreeCursor:
    """Palavra reduzida corrente, prefixo comum com ξ e último toque no prefixo."""

    def __init__(self, spec: GroupSpec, target: Optional[Sequence[int]], watch: int):
        self.spec = spec
        self.stack: List[int] = []
        self.target = target
        self.cp = 0
        self.watch = watch
        self.last_touch = 0

    def apply(self, word: Sequence[int], k: int) -> None:
        inverse = self.spec.inverse_of
        for s in word:
            if self.stack and self.stack[-1] == inverse[s]:
                self.stack.pop()
                position = len(self.stack)
                self.cp = min(self.cp, position)
            else:
                position = len(self.stack)
                self.stack.append(s)
                if (
                    self.target is not None
                    and self.cp == position
                    and position < len(self.target)
                    and self.target[position] == s
                ):
                    self.cp += 1
            if position < self.watch:
                self.last_touch = k


@dataclass(frozen=True)
class RayConvergence:
    """Prefixo estabilizado, instante de estabilização e status."""
    point: Optional[BoundaryPoint]
    stabilization_time: int
    conclusive: bool
    final_length: int


def ray_convergence(
    spec: GroupSpec, trajectory: Trajectory, m: int, settle_fraction: float = 0.5
) -> RayConvergence:
    """
    Último instante em que o prefixo de comprimento m de Z_n mudou.

    Inconclusivo (não é erro) quando |Z_n| < m no fim ou a estabilização
    acontece depois de `settle_fraction`·n.
    """
    _require_tree(spec, "ray_convergence")
    if m < 1:
        raise DomainError(f"Profundidade m deve ser ≥ 1, recebido {m}", {"m": m})
    cursor = _TreeCursor(spec, None, m)
    cursor.apply(trajectory.origin.word, 0)
    for k, g in enumerate(trajectory.steps, start=1):
        cursor.apply(g.word, k)
    final = len(cursor.stack)
    if final < m:
        return RayConvergence(None, cursor.last_touch, False, final)
    conclusive = cursor.last_touch <= settle_fraction * trajectory.n
    point = BoundaryPoint(spec, tuple(cursor.stack[:m]))
    return RayConvergence(point, cursor.last_touch, conclusive, final)


@dataclass(frozen=True)
class BusemannTrace:
    """d(Z_k,e) − h_ξ(Z_k) = 2·w((Z_k,ξ)_e) ao longo da trajetória."""
    values: np.ndarray
    maximum: float
    saturated: bool


def busemann_vs_distance(
    trajectory: Trajectory, xi: BoundaryPoint, metric: Scale = 1.0
) -> BusemannTrace:
    """
    Sequência d(Z_k, e) − h_ξ(Z_k) (limitada quando ξ não é o limite).

    Pontos periódicos são materializados até o maior comprimento possível;
    pontos por prefixo levantam PrecisionError se o prefixo comum satura.
    """
    spec = xi.spec
    _require_tree(spec, "busemann_vs_distance")
    reach = len(trajectory.origin.word) + sum(len(g.word) for g in trajectory.steps)
    target = xi.letters(reach) if xi.is_periodic else xi.prefix
    cursor = _TreeCursor(spec, target, 0)
    cursor.apply(trajectory.origin.word, 0)
    weights = _prefix_weights(target, metric)
    values = [2.0 * weights[cursor.cp]]
    saturated = False
    for k, g in enumerate(trajectory.steps, start=1):
        cursor.apply(g.word, k)
        if cursor.cp == len(target) and len(cursor.stack) > len(target):
            saturated = True
        values.append(2.0 * weights[cursor.cp])
    if saturated and not xi.is_periodic:
        raise PrecisionError(
            f"Trajetória acompanha ξ além da profundidade {len(target)}",
            {"xi": xi.text(), "depth": len(target)},
        )
    arr = np.asarray(values)
    return BusemannTrace(values=arr, maximum=float(arr.max()), saturated=saturated)


def _prefix_weights(word: Sequence[int], metric: Scale) -> np.ndarray:
    if isinstance(metric, LetterMetric):
        per_letter = metric.weights[np.asarray(word, dtype=np.int64)] if word else np.zeros(0)
    else:
        per_letter = np.full(len(word), float(metric))
    return np.concatenate([[0.0], np.cumsum(per_letter)])


@dataclass(frozen=True)
class CocycleIdentity:
    """Os dois lados da identidade de deslocamento do produto de Gromov."""
    lhs: float
    rhs: float
    doubled_rhs: float

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)


def gromov_busemann_cocycle(
    g: GroupElement, xi: BoundaryPoint, eta: BoundaryPoint, metric: Scale = 1.0
) -> CocycleIdentity:
    """
    (ξ,η)_e − (g⁻¹ξ, g⁻¹η)_e contra −½·(h_ξ(g) + h_η(g)).

    A forma 2·(h_ξ(g) + h_η(g)) é devolvida em `doubled_rhs` para comparação.
    """
    if xi == eta:
        raise DomainError("ξ e η precisam ser distintos", {"point": xi.text()})
    spec = xi.spec
    g_inv = invert(spec, g)
    moved_xi, _ = boundary_action(g_inv, xi, metric)
    moved_eta, _ = boundary_action(g_inv, eta, metric)
    lhs = boundary_gromov_product(xi, eta, metric) - boundary_gromov_product(moved_xi, moved_eta, metric)
    total = horofunction_eval(xi, g, metric) + horofunction_eval(eta, g, metric)
    return CocycleIdentity(lhs=lhs, rhs=-0.5 * total, doubled_rhs=2.0 * total)
