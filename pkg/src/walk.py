"""
Módulo de Passeios - Medidas de passo, convolução e trajetórias
Motor do cociclo Z_n = g₁·g₂·…·g_n

Contrato do gerador aleatório:
- Cada trajetória usa um fluxo Philox (contador) derivado de
  SeedSequence(seed, spawn_key=(índice,)); fluxos distintos são independentes
  e o resultado não depende de quantas threads foram usadas.
- Os passos são sorteados em blocos de tamanho fixo (STEP_CHUNK), de modo que
  a trajetória i de uma execução em lote é idêntica a
  sample_trajectory(..., seed, index=i).
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import ConfigError, DomainError, ResourceError
from .groups import (
    GroupElement,
    GroupKind,
    GroupSpec,
    commute,
    format_word,
    generators,
    identity,
    invert,
    multiply,
    parse_word,
    word_length,
)
from .logger import get_logger

logger = get_logger(__name__)

MASS_TOLERANCE = 1e-12
STEP_CHUNK = 4096
DEFAULT_SUPPORT_CAP = 5_000_000
UNIFORM_ALIASES = ("uniform-generators", "srw")


@dataclass(frozen=True)
class StepDistribution:
    """
    Medida de probabilidade μ de suporte finito.

    `symmetric` é um certificado calculado (μ(g) = μ(g⁻¹) para todo g do
    suporte), nunca declarado. Pesos positivos; massa total 1 dentro de
    `mass_tolerance`.
    """
    spec: GroupSpec
    elements: Tuple[GroupElement, ...]
    weights: Tuple[float, ...]
    mass_tolerance: float = field(default=MASS_TOLERANCE, compare=False, repr=False)
    symmetric: bool = field(init=False)

    def __post_init__(self):
        if len(self.elements) != len(self.weights) or not self.elements:
            raise DomainError(
                "Medida precisa de suporte não vazio e um peso por elemento",
                {"elements": len(self.elements), "weights": len(self.weights)},
            )
        if len(set(self.elements)) != len(self.elements):
            raise DomainError("Elementos repetidos no suporte", {"size": len(self.elements)})
        for g in self.elements:
            if g.group != self.spec.name:
                raise DomainError(
                    f"Elemento de '{g.group}' em medida sobre '{self.spec.name}'",
                    {"expected": self.spec.name, "received": g.group},
                )
        bad = [w for w in self.weights if not w > 0]
        if bad:
            raise DomainError("Pesos devem ser estritamente positivos", {"weights": list(self.weights)})
        total = float(np.sum(self.weights))
        if abs(total - 1.0) > self.mass_tolerance:
            logger.error(f"Massa total {total} fora da tolerância {self.mass_tolerance}")
            raise DomainError(
                f"Pesos somam {total!r}, esperado 1 ± {self.mass_tolerance}",
                {"total": total, "tolerance": self.mass_tolerance},
            )
        lookup = dict(zip(self.elements, self.weights))
        symmetric = all(
            abs(lookup.get(invert(self.spec, g), 0.0) - w) <= MASS_TOLERANCE
            for g, w in lookup.items()
        )
        object.__setattr__(self, "symmetric", symmetric)
        object.__setattr__(self, "_lookup", lookup)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[Tuple[GroupElement, float]]:
        return iter(zip(self.elements, self.weights))

    def weight(self, g: GroupElement) -> float:
        return self._lookup.get(g, 0.0)

    def as_dict(self) -> Dict[GroupElement, float]:
        return dict(self._lookup)

    @property
    def probabilities(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=np.float64)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    @property
    def max_length(self) -> int:
        """L = maior comprimento de palavra do suporte."""
        return max(word_length(self.spec, g) for g in self.elements)

    @property
    def max_syllables(self) -> int:
        return max(len(g.word) for g in self.elements)

    @property
    def is_nearest_neighbour(self) -> bool:
        """Suporte contido no conjunto de geradores."""
        gens = set(generators(self.spec))
        return all(g in gens for g in self.elements)

    def describe(self) -> List[Tuple[str, float]]:
        """Pares (palavra, peso) serializáveis."""
        return [(format_word(self.spec, g), w) for g, w in self]


# ============================================================================
# Construção e interpretação de medidas
# ============================================================================

def from_mapping(
    spec: GroupSpec,
    weights: Mapping[GroupElement, float],
    mass_tolerance: float = MASS_TOLERANCE,
) -> StepDistribution:
    """Medida a partir de um dicionário; ordem canônica pela palavra formatada."""
    items = sorted(
        ((g, w) for g, w in weights.items() if w != 0.0),
        key=lambda item: (word_length(spec, item[0]), format_word(spec, item[0])),
    )
    return StepDistribution(
        spec=spec,
        elements=tuple(g for g, _ in items),
        weights=tuple(float(w) for _, w in items),
        mass_tolerance=mass_tolerance,
    )


def dirac(spec: GroupSpec, g: Optional[GroupElement] = None) -> StepDistribution:
    """δ_g (δ_e por padrão)."""
    return from_mapping(spec, {g if g is not None else identity(spec): 1.0})


def uniform_generators(spec: GroupSpec) -> StepDistribution:
    """Passeio aleatório simples: uniforme sobre os geradores da spec."""
    gens = generators(spec)
    weight = 1.0 / len(gens)
    return StepDistribution(
        spec=spec,
        elements=tuple(gens),
        weights=tuple([weight] * len(gens)),
    )


def _parse_weight(text: str, source: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(
            f"Peso inválido {text!r} em {source!r}",
            {"input": source, "weight": text},
        ) from e


def measure_from_pairs(
    spec: GroupSpec, pairs: Iterable[Tuple[str, Union[float, str]]]
) -> StepDistribution:
    """
    Medida a partir de pares (palavra, peso), como no arquivo de configuração.

    Pesos aceitam frações ("3/8"); palavras repetidas somam seus pesos.
    """
    exact: Dict[GroupElement, Fraction] = {}
    pairs = list(pairs)
    source = repr(pairs)
    for word, weight in pairs:
        g = parse_word(spec, word)
        exact[g] = exact.get(g, Fraction(0)) + _parse_weight(str(weight), source)
    total = sum(exact.values(), Fraction(0))
    if total != 1:
        logger.error(f"Medida {source} tem massa {total}")
        raise ConfigError(
            f"Pesos da medida somam {float(total)!r}, esperado 1",
            {"input": source, "total": float(total)},
        )
    return from_mapping(spec, {g: float(w) for g, w in exact.items()})


def parse_measure(
    spec: GroupSpec,
    text: Union[str, Sequence[Tuple[str, Union[float, str]]]],
    presets: Optional[Mapping[str, object]] = None,
) -> StepDistribution:
    """
    Interpreta uma spec de medida.

    Formatos:
        "uniform-generators" (ou "srw")    passeio simples
        "<preset>"                         medida nomeada do lab_settings.yaml
        "a:3/8,a-:3/8,b:1/8,b-:1/8"        pares palavra:peso
        [("a", 0.25), ...]                 lista de pares (arquivo JSON)

    Raises:
        ConfigError: spec malformada, preset de outro grupo ou massa ≠ 1
    """
    if not isinstance(text, str):
        return measure_from_pairs(spec, [(str(w), p) for w, p in text])
    name = text.strip()
    if name in UNIFORM_ALIASES:
        return uniform_generators(spec)
    if presets and name in presets:
        preset = presets[name]
        if preset.group != spec.name:
            raise ConfigError(
                f"Medida '{name}' é definida sobre {preset.group}, não sobre {spec.name}",
                {"measure": name, "preset_group": preset.group, "group": spec.name},
            )
        return measure_from_pairs(spec, list(preset.weights.items()))
    if ":" not in name:
        raise ConfigError(
            f"Medida desconhecida {name!r}. Use 'uniform-generators', um preset "
            "ou pares 'palavra:peso'",
            {"input": name, "presets": sorted(presets or {})},
        )
    pairs = []
    offset = 0
    for chunk in name.split(","):
        word, sep, weight = chunk.partition(":")
        if not sep or not word.strip():
            raise ConfigError(
                f"Par malformado {chunk!r} na posição {offset}",
                {"input": name, "position": offset},
            )
        pairs.append((word.strip(), weight))
        offset += len(chunk) + 1
    return measure_from_pairs(spec, pairs)


# ============================================================================
# Propriedades exigidas pelos pipelines
# ============================================================================

def is_non_elementary(spec: GroupSpec, mu: StepDistribution) -> bool:
    """Suporte ∪ inversos contém dois elementos que não comutam."""
    pool = set(mu.elements) | {invert(spec, g) for g in mu.elements}
    pool.discard(identity(spec))
    pool_list = sorted(pool, key=lambda g: format_word(spec, g))
    for i, x in enumerate(pool_list):
        for y in pool_list[i + 1:]:
            if not commute(spec, x, y):
                return True
    return False


def require_symmetric(mu: StepDistribution, operation: str) -> None:
    if not mu.symmetric:
        logger.error(f"{operation}: medida não simétrica rejeitada")
        raise DomainError(
            f"{operation} requer medida simétrica",
            {"operation": operation, "measure": mu.describe()},
        )


def require_non_elementary(spec: GroupSpec, mu: StepDistribution, operation: str) -> None:
    if not is_non_elementary(spec, mu):
        logger.error(f"{operation}: suporte gera subgrupo elementar")
        raise DomainError(
            f"{operation} requer suporte não elementar (dois elementos que não comutam)",
            {"operation": operation, "measure": mu.describe()},
        )


# ============================================================================
# Convolução
# ============================================================================

def convolve(
    spec: GroupSpec,
    m1: StepDistribution,
    m2: StepDistribution,
    cap: int = DEFAULT_SUPPORT_CAP,
) -> StepDistribution:
    """
    (m1 ∗ m2)(x) = Σ_g m1(g)·m2(g⁻¹x).

    Raises:
        DomainError: medidas sobre specs diferentes
        ResourceError: suporte do produto excede `cap` (limite ecoado)
    """
    if m1.spec != spec or m2.spec != spec:
        raise DomainError(
            "Convolução de medidas sobre grupos diferentes",
            {"left": m1.spec.name, "right": m2.spec.name, "spec": spec.name},
        )
    out: Dict[GroupElement, float] = {}
    for g, w1 in m1:
        for h, w2 in m2:
            x = multiply(spec, g, h)
            out[x] = out.get(x, 0.0) + w1 * w2
            if len(out) > cap:
                logger.error(f"Suporte da convolução excedeu o limite {cap}")
                raise ResourceError(
                    f"Suporte da convolução excede o limite de {cap} entradas",
                    {"cap": cap, "left_support": len(m1), "right_support": len(m2)},
                )
    return from_mapping(spec, out, mass_tolerance=1e-9)


def convolution_power(
    spec: GroupSpec,
    mu: StepDistribution,
    n: int,
    cap: int = DEFAULT_SUPPORT_CAP,
) -> StepDistribution:
    """μ^{*n} com μ^{*0} = δ_e."""
    if n < 0:
        raise DomainError(f"Potência de convolução negativa: {n}", {"n": n})
    result = dirac(spec)
    for _ in range(n):
        result = convolve(spec, result, mu, cap)
    logger.debug(f"μ^{{*{n}}}: suporte {len(result)}")
    return result


# ============================================================================
# Gerador aleatório e trajetórias
# ============================================================================

def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Gerador Philox derivado de (seed, stream)."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(stream),)))
    )


def draw_steps(rng: np.random.Generator, probabilities: np.ndarray, n: int) -> np.ndarray:
    """Índices de n passos i.i.d., sorteados em blocos de STEP_CHUNK."""
    out = np.empty(n, dtype=np.int64)
    k = len(probabilities)
    for start in range(0, n, STEP_CHUNK):
        stop = min(n, start + STEP_CHUNK)
        out[start:stop] = rng.choice(k, size=stop - start, p=probabilities)
    return out


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Trajetória Z_0 = start, Z_k = Z_{k−1}·g_k.

    As posições parciais são calculadas sob demanda.
    """
    spec: GroupSpec
    steps: Tuple[GroupElement, ...]
    seed: Optional[int] = None
    index: int = 0
    start: Optional[GroupElement] = None

    @classmethod
    def from_steps(
        cls, spec: GroupSpec, steps: Sequence[GroupElement], start: Optional[GroupElement] = None
    ) -> "Trajectory":
        """Trajetória determinística (sem semente)."""
        return cls(spec=spec, steps=tuple(steps), start=start)

    @property
    def n(self) -> int:
        return len(self.steps)

    @property
    def origin(self) -> GroupElement:
        return self.start if self.start is not None else identity(self.spec)

    def positions(self) -> Iterator[GroupElement]:
        """Z_0, Z_1, ..., Z_n."""
        z = self.origin
        yield z
        for g in self.steps:
            z = multiply(self.spec, z, g)
            yield z

    def position(self, k: int) -> GroupElement:
        z = self.origin
        for g in self.steps[:k]:
            z = multiply(self.spec, z, g)
        return z

    def endpoint(self) -> GroupElement:
        return self.position(self.n)

    def translated(self, g: GroupElement) -> "Trajectory":
        """g·Z_k para todo k (mesmos passos, origem g·Z_0)."""
        return Trajectory(
            spec=self.spec,
            steps=self.steps,
            seed=self.seed,
            index=self.index,
            start=multiply(self.spec, g, self.origin),
        )


def sample_trajectory(
    spec: GroupSpec,
    mu: StepDistribution,
    n: int,
    seed: int,
    index: int = 0,
) -> Trajectory:
    """
    Trajetória com n passos i.i.d. segundo μ.

    Determinística para (seed, index) fixos; n = 0 devolve só Z_0 = e.
    """
    if n < 0:
        raise DomainError(f"Número de passos negativo: {n}", {"n": n})
    rng = make_rng(seed, index)
    picks = draw_steps(rng, mu.probabilities, n)
    steps = tuple(mu.elements[i] for i in picks)
    return Trajectory(spec=spec, steps=steps, seed=seed, index=index)


def exponential_moment(
    spec: GroupSpec,
    mu: StepDistribution,
    beta: float,
    metric: Optional[Callable[[GroupElement], float]] = None,
) -> float:
    """
    Σ_g μ(g)·exp(β·d(g, e)); finito para todo suporte finito.

    `metric` devolve a distância até a identidade (comprimento de palavra
    por padrão).
    """
    if beta <= 0:
        raise DomainError(f"β deve ser positivo, recebido {beta}", {"beta": beta})
    distance = metric if metric is not None else (lambda g: word_length(spec, g))
    return float(sum(w * np.exp(beta * distance(g)) for g, w in mu))


def is_tree_walk(spec: GroupSpec) -> bool:
    return spec.kind is GroupKind.FREE
