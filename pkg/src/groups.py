"""
Módulo de Grupos - Núcleo aritmético do laboratório
Formas canônicas, multiplicação exata, comprimento de palavra e bolas

Grupos suportados:
- free:k        grupo livre de posto k ≥ 2 (palavras reduzidas)
- freeprod:p,q  produto livre de grupos cíclicos finitos (sílabas reduzidas)
- zwrz          grupo do acendedor de lâmpadas ℤ≀ℤ (lâmpadas + posição)

Representação:
- Em grupos livres e produtos livres, cada elemento é uma tupla de "ids de
  sílaba" (inteiros ≥ 1). No grupo livre cada id é uma letra (a, a-, b, ...);
  no produto livre cada id é um elemento não trivial de um fator cíclico.
  As tabelas de fusão (`merge`) descrevem o que acontece quando uma sílaba é
  justaposta ao topo da palavra: empilha, cancela ou substitui.
- Em ℤ≀ℤ o elemento é (mapa de lâmpadas de suporte finito, posição).

Uso:
    spec = parse_group_spec("free:2")
    g = parse_word(spec, "a.b.a-")
    word_length(spec, multiply(spec, g, invert(spec, g)))  # 0
"""

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, List, Sequence, Set, Tuple

import numpy as np

from .exceptions import CapabilityError, ConfigError, DomainError, ResourceError
from .logger import get_logger

logger = get_logger(__name__)

# Resultado da fusão de duas sílabas adjacentes
MERGE_PUSH = -1
MERGE_CANCEL = 0

LAMPLIGHTER_LABELS = ("t", "t-", "a", "a-")
_SPEC_PATTERN = re.compile(r"^(free):(\d+)$|^(freeprod):(\d+(?:,\d+)+)$|^(zwrz)$")


class GroupKind(str, Enum):
    """Famílias de grupos suportadas pelo laboratório."""
    FREE = "free"
    FREE_PRODUCT = "freeprod"
    LAMPLIGHTER = "zwrz"


@dataclass(frozen=True)
class GroupSpec:
    """
    Especificação de um grupo concreto.

    Para grupos livres e produtos livres, `ids` enumera as sílabas
    (1..n); `factor_of`/`exponent_of` identificam cada sílaba e as tabelas
    derivadas são construídas em __post_init__. Os rótulos dos geradores
    são fechados sob inversão formal ("a" ↔ "a-"; geradores de ordem 2 são
    auto-inversos).
    """
    kind: GroupKind
    rank: int = 0
    orders: Tuple[int, ...] = ()
    labels: Tuple[str, ...] = ()
    factor_of: Tuple[int, ...] = ()
    exponent_of: Tuple[int, ...] = ()
    inverse_of: Tuple[int, ...] = ()
    letter_length: Tuple[int, ...] = ()
    generator_ids: Tuple[int, ...] = ()
    merge: Tuple[Tuple[int, ...], ...] = field(default=(), repr=False)

    @property
    def name(self) -> str:
        """Forma textual canônica (a mesma aceita por parse_group_spec)."""
        if self.kind is GroupKind.FREE:
            return f"free:{self.rank}"
        if self.kind is GroupKind.FREE_PRODUCT:
            return "freeprod:" + ",".join(str(p) for p in self.orders)
        return "zwrz"

    @property
    def is_tree(self) -> bool:
        """Grafo de Cayley é uma árvore (grupo livre com geradores livres)."""
        return self.kind is GroupKind.FREE

    @property
    def is_hyperbolic(self) -> bool:
        return self.kind is not GroupKind.LAMPLIGHTER

    @property
    def num_ids(self) -> int:
        return len(self.factor_of) - 1

    @property
    def degree(self) -> int:
        """Grau do grafo de Cayley."""
        return len(self.labels)

    def merge_array(self) -> np.ndarray:
        """Tabela de fusão como array (linha/coluna 0 = palavra vazia)."""
        return np.asarray(self.merge, dtype=np.int64)

    def label_of(self, syllable: int) -> str:
        """Tokens de uma sílaba, separados por '.'."""
        if self.kind is GroupKind.FREE:
            return self.labels[syllable - 1]
        factor = self.factor_of[syllable]
        exponent = self.exponent_of[syllable]
        order = self.orders[factor]
        letter = chr(ord("a") + factor)
        if exponent <= order - exponent:
            return ".".join([letter] * exponent)
        return ".".join([letter + "-"] * (order - exponent))


@dataclass(frozen=True)
class GroupElement:
    """
    Forma canônica de um elemento.

    `group` guarda o nome canônico da spec; elementos de specs diferentes
    nunca são iguais. Em ℤ≀ℤ `lamps` é ordenado por posição e não contém
    zeros explícitos.
    """
    group: str
    word: Tuple[int, ...] = ()
    lamps: Tuple[Tuple[int, int], ...] = ()
    position: int = 0

    def __len__(self) -> int:
        return len(self.word)


# ============================================================================
# Construção de specs
# ============================================================================

def _letter(i: int) -> str:
    return chr(ord("a") + i)


def free_group(rank: int) -> GroupSpec:
    """Grupo livre de posto `rank`: ids 2i+1 = gerador i, 2i+2 = inverso."""
    if rank < 2:
        raise ConfigError(
            f"Grupo livre requer posto k ≥ 2, recebido: {rank}",
            {"rank": rank},
        )
    if rank > 13:
        raise ConfigError(
            f"Posto {rank} excede os rótulos disponíveis (máximo 13)",
            {"rank": rank},
        )
    labels: List[str] = []
    factor_of = [-1]
    exponent_of = [0]
    inverse_of = [0]
    for i in range(rank):
        labels += [_letter(i), _letter(i) + "-"]
        factor_of += [i, i]
        exponent_of += [1, -1]
        inverse_of += [2 * i + 2, 2 * i + 1]
    n = 2 * rank
    merge = [[MERGE_PUSH] * (n + 1) for _ in range(n + 1)]
    for top in range(1, n + 1):
        merge[top][inverse_of[top]] = MERGE_CANCEL
    return GroupSpec(
        kind=GroupKind.FREE,
        rank=rank,
        labels=tuple(labels),
        factor_of=tuple(factor_of),
        exponent_of=tuple(exponent_of),
        inverse_of=tuple(inverse_of),
        letter_length=tuple([0] + [1] * n),
        generator_ids=tuple(range(1, n + 1)),
        merge=tuple(tuple(row) for row in merge),
    )


def free_product(orders: Sequence[int]) -> GroupSpec:
    """Produto livre de grupos cíclicos ℤ/p₁ * ℤ/p₂ * ..."""
    orders = tuple(int(p) for p in orders)
    if len(orders) < 2:
        raise ConfigError(
            "Produto livre requer pelo menos 2 fatores",
            {"orders": list(orders)},
        )
    if any(p < 2 for p in orders):
        raise ConfigError(
            f"Fatores cíclicos devem ter ordem ≥ 2: {list(orders)}",
            {"orders": list(orders)},
        )
    degree = sum(1 if p == 2 else 2 for p in orders)
    if degree < 3:
        raise ConfigError(
            f"Grau do grafo de Cayley {degree} < 3: o grupo é elementar",
            {"orders": list(orders), "degree": degree},
        )
    factor_of = [-1]
    exponent_of = [0]
    id_of: Dict[Tuple[int, int], int] = {}
    for f, p in enumerate(orders):
        for e in range(1, p):
            id_of[(f, e)] = len(factor_of)
            factor_of.append(f)
            exponent_of.append(e)
    n = len(factor_of) - 1
    inverse_of = [0] + [
        id_of[(factor_of[i], orders[factor_of[i]] - exponent_of[i])]
        for i in range(1, n + 1)
    ]
    merge = [[MERGE_PUSH] * (n + 1) for _ in range(n + 1)]
    for top in range(1, n + 1):
        for s in range(1, n + 1):
            if factor_of[top] != factor_of[s]:
                continue
            p = orders[factor_of[s]]
            total = (exponent_of[top] + exponent_of[s]) % p
            merge[top][s] = MERGE_CANCEL if total == 0 else id_of[(factor_of[s], total)]
    labels: List[str] = []
    generator_ids: List[int] = []
    for f, p in enumerate(orders):
        labels.append(_letter(f))
        generator_ids.append(id_of[(f, 1)])
        if p > 2:
            labels.append(_letter(f) + "-")
            generator_ids.append(id_of[(f, p - 1)])
    letter_length = [0] + [
        min(exponent_of[i], orders[factor_of[i]] - exponent_of[i])
        for i in range(1, n + 1)
    ]
    return GroupSpec(
        kind=GroupKind.FREE_PRODUCT,
        orders=orders,
        labels=tuple(labels),
        factor_of=tuple(factor_of),
        exponent_of=tuple(exponent_of),
        inverse_of=tuple(inverse_of),
        letter_length=tuple(letter_length),
        generator_ids=tuple(generator_ids),
        merge=tuple(tuple(row) for row in merge),
    )


def lamplighter() -> GroupSpec:
    """Grupo do acendedor ℤ≀ℤ com geradores t± (anda) e a± (lâmpada)."""
    return GroupSpec(kind=GroupKind.LAMPLIGHTER, labels=LAMPLIGHTER_LABELS)


def parse_group_spec(text: str) -> GroupSpec:
    """
    Interpreta uma especificação textual de grupo.

    Formatos aceitos: "free:2", "freeprod:2,3", "zwrz".

    Raises:
        ConfigError: com a posição do primeiro caractere inválido
    """
    raw = text
    text = text.strip().lower()
    match = _SPEC_PATTERN.match(text)
    if match is None:
        position = _parse_failure_position(text)
        logger.error(f"Spec de grupo inválida: {raw!r} (posição {position})")
        raise ConfigError(
            f"Spec de grupo inválida {raw!r}: erro na posição {position}. "
            "Formatos válidos: 'free:k', 'freeprod:p,q,...', 'zwrz'",
            {"input": raw, "position": position},
        )
    if match.group(1):
        return free_group(int(match.group(2)))
    if match.group(3):
        return free_product([int(p) for p in match.group(4).split(",")])
    return lamplighter()


def _parse_failure_position(text: str) -> int:
    """Primeira posição em que `text` deixa de ser prefixo de uma spec válida."""
    for prefix in ("freeprod:", "free:", "zwrz"):
        common = 0
        while common < min(len(prefix), len(text)) and text[common] == prefix[common]:
            common += 1
        if common == len(prefix):
            body = text[common:]
            allowed = "0123456789," if prefix == "freeprod:" else "0123456789"
            for i, ch in enumerate(body):
                if ch not in allowed:
                    return common + i
            return len(text)
    best = 0
    for prefix in ("freeprod:", "free:", "zwrz"):
        common = 0
        while common < min(len(prefix), len(text)) and text[common] == prefix[common]:
            common += 1
        best = max(best, common)
    return best


# ============================================================================
# Elementos
# ============================================================================

def identity(spec: GroupSpec) -> GroupElement:
    return GroupElement(group=spec.name)


def _check(spec: GroupSpec, *elements: GroupElement) -> None:
    for g in elements:
        if g.group != spec.name:
            logger.error(f"Elemento de {g.group} usado com a spec {spec.name}")
            raise DomainError(
                f"Elemento do grupo '{g.group}' não pertence a '{spec.name}'",
                {"expected": spec.name, "received": g.group},
            )


def reduce_word(spec: GroupSpec, syllables: Sequence[int]) -> Tuple[int, ...]:
    """Reduz uma sequência de ids de sílaba à forma canônica."""
    out: List[int] = []
    merge = spec.merge
    for s in syllables:
        if out:
            action = merge[out[-1]][s]
            if action == MERGE_CANCEL:
                out.pop()
                continue
            if action != MERGE_PUSH:
                out[-1] = action
                continue
        out.append(s)
    return tuple(out)


def element_from_word(spec: GroupSpec, syllables: Sequence[int]) -> GroupElement:
    """Elemento canônico a partir de ids de sílaba (grupos livres/produtos livres)."""
    if spec.kind is GroupKind.LAMPLIGHTER:
        raise CapabilityError("ℤ≀ℤ não usa palavras de sílabas", {"group": spec.name})
    return GroupElement(group=spec.name, word=reduce_word(spec, syllables))


def lamplighter_element(
    spec: GroupSpec, lamps: Dict[int, int], position: int
) -> GroupElement:
    """Elemento de ℤ≀ℤ a partir de um mapa de lâmpadas (zeros descartados)."""
    if spec.kind is not GroupKind.LAMPLIGHTER:
        raise CapabilityError("Lâmpadas só existem em ℤ≀ℤ", {"group": spec.name})
    canonical = tuple(sorted((int(p), int(v)) for p, v in lamps.items() if v != 0))
    return GroupElement(group=spec.name, lamps=canonical, position=int(position))


def generator(spec: GroupSpec, label: str) -> GroupElement:
    """Gerador pelo rótulo ("a", "a-", "t", ...)."""
    if label not in spec.labels:
        raise ConfigError(
            f"Gerador '{label}' não existe em {spec.name}. Válidos: {list(spec.labels)}",
            {"label": label, "labels": list(spec.labels)},
        )
    if spec.kind is GroupKind.LAMPLIGHTER:
        return {
            "t": lamplighter_element(spec, {}, 1),
            "t-": lamplighter_element(spec, {}, -1),
            "a": lamplighter_element(spec, {0: 1}, 0),
            "a-": lamplighter_element(spec, {0: -1}, 0),
        }[label]
    return GroupElement(group=spec.name, word=(spec.generator_ids[spec.labels.index(label)],))


def generators(spec: GroupSpec) -> List[GroupElement]:
    return [generator(spec, label) for label in spec.labels]


def parse_word(spec: GroupSpec, text: str) -> GroupElement:
    """
    Interpreta uma palavra em tokens de geradores separados por '.'.

    "e" ou "" denotam a identidade; "a.b.a-" é a·b·a⁻¹. O resultado é
    sempre canônico (palavras não reduzidas são reduzidas).
    """
    text = text.strip()
    result = identity(spec)
    if text in ("", "e"):
        return result
    offset = 0
    for token in text.split("."):
        if token not in spec.labels:
            raise ConfigError(
                f"Token '{token}' inválido na posição {offset} de {text!r}",
                {"input": text, "position": offset, "labels": list(spec.labels)},
            )
        result = multiply(spec, result, generator(spec, token))
        offset += len(token) + 1
    return result


def format_word(spec: GroupSpec, g: GroupElement) -> str:
    """Serializa um elemento como tokens ("a.b.a-" ou "e")."""
    _check(spec, g)
    if spec.kind is GroupKind.LAMPLIGHTER:
        return format_lamplighter_word(g)
    if not g.word:
        return "e"
    return ".".join(spec.label_of(s) for s in g.word)


def format_lamplighter_word(g: GroupElement) -> str:
    """Caminho geodésico em t±/a± que realiza o elemento de ℤ≀ℤ."""
    lamps = dict(g.lamps)
    support = list(lamps)
    lo = min(support + [0, g.position])
    hi = max(support + [0, g.position])
    left_cost = -lo + (hi - lo) + (hi - g.position)
    right_cost = hi + (hi - lo) + (g.position - lo)
    stops = [lo, hi] if left_cost <= right_cost else [hi, lo]
    stops.append(g.position)
    tokens: List[str] = []
    here = 0
    visited: Set[int] = set()

    def light(pos: int) -> None:
        if pos in lamps and pos not in visited:
            visited.add(pos)
            v = lamps[pos]
            tokens.extend(["a" if v > 0 else "a-"] * abs(v))

    light(here)
    for target in stops:
        step = 1 if target > here else -1
        while here != target:
            here += step
            tokens.append("t" if step > 0 else "t-")
            light(here)
    return ".".join(tokens) if tokens else "e"


# ============================================================================
# Operações do grupo
# ============================================================================

def multiply(spec: GroupSpec, a: GroupElement, b: GroupElement) -> GroupElement:
    """
    Produto canônico a·b.

    Raises:
        DomainError: se os operandos pertencem a specs diferentes
    """
    _check(spec, a, b)
    if spec.kind is GroupKind.LAMPLIGHTER:
        lamps = dict(a.lamps)
        for pos, value in b.lamps:
            shifted = pos + a.position
            lamps[shifted] = lamps.get(shifted, 0) + value
        return lamplighter_element(spec, lamps, a.position + b.position)
    return GroupElement(group=spec.name, word=reduce_word(spec, a.word + b.word))


def invert(spec: GroupSpec, g: GroupElement) -> GroupElement:
    """Inverso canônico g⁻¹ (involutivo)."""
    _check(spec, g)
    if spec.kind is GroupKind.LAMPLIGHTER:
        lamps = {pos - g.position: -value for pos, value in g.lamps}
        return lamplighter_element(spec, lamps, -g.position)
    return GroupElement(
        group=spec.name, word=tuple(spec.inverse_of[s] for s in reversed(g.word))
    )


def power(spec: GroupSpec, g: GroupElement, n: int) -> GroupElement:
    """g^n para n inteiro (n < 0 usa o inverso)."""
    base = g if n >= 0 else invert(spec, g)
    result = identity(spec)
    for _ in range(abs(n)):
        result = multiply(spec, result, base)
    return result


def lamplighter_travel(support: Sequence[int], position: int) -> int:
    """
    Deslocamento mínimo do andador: sai de 0, visita todo o suporte e
    termina em `position` (mínimo entre varrer primeiro à esquerda ou à direita).
    """
    lo = min(list(support) + [0, position])
    hi = max(list(support) + [0, position])
    left_first = -lo + (hi - lo) + (hi - position)
    right_first = hi + (hi - lo) + (position - lo)
    return min(left_first, right_first)


def word_length(spec: GroupSpec, g: GroupElement) -> int:
    """
    Comprimento de palavra |g| em relação aos geradores da spec.

    Grupos livres: comprimento da palavra reduzida. Produtos livres: soma de
    min(e, p−e) por sílaba. ℤ≀ℤ: Σ|lâmpadas| + deslocamento mínimo.
    """
    _check(spec, g)
    if spec.kind is GroupKind.LAMPLIGHTER:
        lamp_moves = sum(abs(v) for _, v in g.lamps)
        return lamp_moves + lamplighter_travel([p for p, _ in g.lamps], g.position)
    lengths = spec.letter_length
    return sum(lengths[s] for s in g.word)


def commute(spec: GroupSpec, a: GroupElement, b: GroupElement) -> bool:
    return multiply(spec, a, b) == multiply(spec, b, a)


# ============================================================================
# Bolas
# ============================================================================

def iter_spheres(spec: GroupSpec, r: int) -> Iterator[List[GroupElement]]:
    """
    Enumera as esferas S(0), S(1), ..., S(r) por busca em largura no grafo
    de Cayley, camada por camada (consumo em fluxo).

    A ordem dentro de cada esfera é determinística (ordem de descoberta,
    geradores na ordem de `spec.labels`).
    """
    gens = generators(spec)
    previous: List[GroupElement] = []
    current = [identity(spec)]
    yield current
    for _ in range(r):
        seen = set(previous) | set(current)
        shell: Dict[GroupElement, None] = {}
        for x in current:
            for s in gens:
                y = multiply(spec, x, s)
                if y not in seen and y not in shell:
                    shell[y] = None
        previous, current = current, list(shell)
        yield current


def free_ball_size(rank: int, r: int) -> int:
    """|B(r)| em F_k: 1 + 2k((2k−1)^r − 1)/(2k−2)."""
    q = 2 * rank - 1
    return 1 + 2 * rank * (q ** r - 1) // (q - 1)


def ball(
    spec: GroupSpec,
    r: int,
    lamplighter_limit: int = 8,
    enumeration_cap: int = 500_000,
) -> Set[GroupElement]:
    """
    Todos os elementos com comprimento de palavra ≤ r, cada um uma vez.

    Raises:
        CapabilityError: raio negativo ou ℤ≀ℤ com r > lamplighter_limit
        ResourceError: bola maior que `enumeration_cap` (qualquer tipo de grupo)
    """
    return set(ball_list(spec, r, lamplighter_limit, enumeration_cap))


def ball_list(
    spec: GroupSpec,
    r: int,
    lamplighter_limit: int = 8,
    enumeration_cap: int = 500_000,
) -> List[GroupElement]:
    """Mesma bola de `ball`, em ordem de BFS (identidade primeiro)."""
    if r < 0:
        raise CapabilityError(f"Raio negativo: {r}", {"radius": r})
    if spec.kind is GroupKind.LAMPLIGHTER and r > lamplighter_limit:
        logger.error(f"Bola de ℤ≀ℤ com raio {r} > {lamplighter_limit} rejeitada")
        raise CapabilityError(
            f"Bolas de ℤ≀ℤ crescem rápido demais: raio {r} > {lamplighter_limit}",
            {"group": spec.name, "radius": r, "limit": lamplighter_limit},
        )
    if spec.kind is GroupKind.FREE and free_ball_size(spec.rank, r) > enumeration_cap:
        size = free_ball_size(spec.rank, r)
        raise ResourceError(
            f"Bola de raio {r} tem {size} elementos (limite {enumeration_cap})",
            {"radius": r, "size": size, "cap": enumeration_cap},
        )
    elements: List[GroupElement] = []
    for radius, shell in enumerate(iter_spheres(spec, r)):
        elements.extend(shell)
        if len(elements) > enumeration_cap:
            logger.error(f"Bola {spec.name} passou de {enumeration_cap} elementos no raio {radius}")
            raise ResourceError(
                f"Bola de raio {r} excede {enumeration_cap} elementos já no raio {radius}",
                {"radius": r, "size": len(elements), "cap": enumeration_cap, "reached_radius": radius},
            )
    logger.debug(f"Bola {spec.name} raio {r}: {len(elements)} elementos")
    return elements


def bfs_distances(spec: GroupSpec, r: int, lamplighter_limit: int = 8) -> Dict[GroupElement, int]:
    """Distância de BFS até a identidade para toda a bola de raio r (oráculo)."""
    if spec.kind is GroupKind.LAMPLIGHTER and r > lamplighter_limit:
        raise CapabilityError(
            f"Raio {r} > {lamplighter_limit} para ℤ≀ℤ",
            {"radius": r, "limit": lamplighter_limit},
        )
    return {g: d for d, shell in enumerate(iter_spheres(spec, r)) for g in shell}


def common_prefix_length(u: Sequence[int], v: Sequence[int]) -> int:
    """Comprimento do maior prefixo comum de duas palavras."""
    n = 0
    for x, y in zip(u, v):
        if x != y:
            break
        n += 1
    return n
