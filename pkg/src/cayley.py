"""
Módulo Cayley - Bolas numéricas indexadas por arrays
Índice de uma bola do grafo de Cayley para grupos livres e produtos livres

Cada elemento da bola recebe um índice inteiro; as palavras reduzidas formam
uma árvore de prefixos (pai = palavra sem a última sílaba), guardada em
arrays numpy:

- parent[i]  índice da palavra sem a última sílaba (-1 na identidade)
- last[i]    última sílaba (0 na identidade)
- depth[i]   comprimento de palavra
- child[i,s] índice de i·s quando s apenas empilha (-1 fora da bola)

A multiplicação à direita por uma sílaba vira uma tabela de índices
(-1 quando o produto sai da bola), o que permite propagar medidas inteiras
com operações vetorizadas.

Uso:
    ball = CayleyBall.build(parse_group_spec("free:2"), radius=6)
    ball.size                    # 1457
    ball.index_of(parse_word(spec, "a.b"))
"""

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from .exceptions import CapabilityError, ResourceError
from .groups import (
    MERGE_CANCEL,
    MERGE_PUSH,
    GroupElement,
    GroupKind,
    GroupSpec,
    element_from_word,
    invert,
)
from .logger import get_logger

logger = get_logger(__name__)


def ball_sizes(spec: GroupSpec, r: int) -> List[int]:
    """
    Tamanhos |B(0)|, ..., |B(r)| sem enumerar elementos.

    Conta palavras reduzidas por comprimento e última sílaba: s pode seguir
    t quando a tabela de fusão empilha (t, s).
    """
    if spec.kind is GroupKind.LAMPLIGHTER:
        raise CapabilityError("Bolas numéricas não suportam ℤ≀ℤ", {"group": spec.name})
    n_ids = spec.num_ids
    merge = spec.merge_array()
    lengths = spec.letter_length
    # ending[d][t]: palavras reduzidas de comprimento d com última sílaba t (0 = vazia)
    ending = [[0] * (n_ids + 1) for _ in range(r + 1)]
    ending[0][0] = 1
    for d in range(1, r + 1):
        for s in range(1, n_ids + 1):
            ell = lengths[s]
            if ell > d:
                continue
            before = ending[d - ell]
            ending[d][s] = sum(before[t] for t in range(n_ids + 1) if merge[t, s] == MERGE_PUSH)
    sizes = []
    running = 0
    for d in range(r + 1):
        running += sum(ending[d])
        sizes.append(running)
    return sizes


def max_radius_within(spec: GroupSpec, cap: int, limit: int = 64) -> int:
    """Maior raio cuja bola cabe em `cap` elementos."""
    sizes = ball_sizes(spec, limit)
    best = 0
    for r, size in enumerate(sizes):
        if size > cap:
            break
        best = r
    return best


@dataclass(frozen=True, eq=False)
class CayleyBall:
    """Bola de raio `radius` (comprimento de palavra) indexada por arrays."""
    spec: GroupSpec
    radius: int
    parent: np.ndarray = field(repr=False)
    last: np.ndarray = field(repr=False)
    depth: np.ndarray = field(repr=False)
    child: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, spec: GroupSpec, radius: int, cap: int = 5_000_000) -> "CayleyBall":
        """
        Constrói a bola camada por camada (número de sílabas).

        Raises:
            CapabilityError: para ℤ≀ℤ ou raio negativo
            ResourceError: se a bola exceder `cap` elementos (limite ecoado)
        """
        if spec.kind is GroupKind.LAMPLIGHTER:
            raise CapabilityError("Bolas numéricas não suportam ℤ≀ℤ", {"group": spec.name})
        if radius < 0:
            raise CapabilityError(f"Raio negativo: {radius}", {"radius": radius})
        size = ball_sizes(spec, radius)[-1]
        if size > cap:
            logger.error(f"Bola de raio {radius} com {size} elementos excede o limite {cap}")
            raise ResourceError(
                f"Bola de raio {radius} tem {size} elementos; limite de suporte é {cap}",
                {"radius": radius, "size": size, "cap": cap},
            )

        n_ids = spec.num_ids
        merge = spec.merge_array()
        lengths = np.asarray(spec.letter_length, dtype=np.int64)
        parent = np.full(size, -1, dtype=np.int32)
        last = np.zeros(size, dtype=np.int32)
        depth = np.zeros(size, dtype=np.int32)
        child = np.full((size, n_ids + 1), -1, dtype=np.int32)

        frontier = np.array([0], dtype=np.int64)
        filled = 1
        while frontier.size:
            produced = []
            for s in range(1, n_ids + 1):
                ok = (merge[last[frontier], s] == MERGE_PUSH) & (
                    depth[frontier] + lengths[s] <= radius
                )
                parents = frontier[ok]
                if not parents.size:
                    continue
                new = np.arange(filled, filled + parents.size, dtype=np.int64)
                parent[new] = parents
                last[new] = s
                depth[new] = depth[parents] + lengths[s]
                child[parents, s] = new
                filled += parents.size
                produced.append(new)
            frontier = np.concatenate(produced) if produced else np.array([], dtype=np.int64)

        logger.debug(f"CayleyBall {spec.name} raio {radius}: {filled} elementos")
        return cls(spec=spec, radius=radius, parent=parent, last=last, depth=depth, child=child)

    @property
    def size(self) -> int:
        return int(self.parent.size)

    def index_of(self, g: GroupElement) -> int:
        """Índice de `g` na bola (-1 se estiver fora)."""
        return self.index_of_word(g.word)

    def index_of_word(self, word: Sequence[int]) -> int:
        i = 0
        for s in word:
            i = int(self.child[i, s])
            if i < 0:
                return -1
        return i

    def word_at(self, i: int) -> Tuple[int, ...]:
        """Palavra reduzida do elemento de índice `i`."""
        word: List[int] = []
        while i > 0:
            word.append(int(self.last[i]))
            i = int(self.parent[i])
        return tuple(reversed(word))

    def element_at(self, i: int) -> GroupElement:
        return element_from_word(self.spec, self.word_at(i))

    def elements(self) -> List[GroupElement]:
        return [self.element_at(i) for i in range(self.size)]

    def within(self, r: int) -> np.ndarray:
        """Índices dos elementos de comprimento ≤ r."""
        return np.nonzero(self.depth <= r)[0]

    def inverse_indices(self) -> np.ndarray:
        """inv[i] = índice de (elemento i)⁻¹ (a bola é fechada por inversão)."""
        inv = np.empty(self.size, dtype=np.int64)
        for i in range(self.size):
            g = self.element_at(i)
            inv[i] = self.index_of(invert(self.spec, g))
        return inv

    def right_multiplication(self, syllables: Sequence[int]) -> np.ndarray:
        """
        Tabela x ↦ índice de x·w para a palavra `syllables` (-1 fora da bola).

        A palavra é aplicada sílaba a sílaba; um -1 intermediário propaga
        mesmo que o produto final volte para dentro da bola.
        """
        merge = self.spec.merge_array()
        current = np.arange(self.size, dtype=np.int64)
        for s in syllables:
            alive = current >= 0
            idx = current[alive]
            action = merge[self.last[idx], s]
            result = np.full(idx.size, -1, dtype=np.int64)
            push = action == MERGE_PUSH
            result[push] = self.child[idx[push], s]
            cancel = action == MERGE_CANCEL
            result[cancel] = self.parent[idx[cancel]]
            replace = action > 0
            result[replace] = self.child[self.parent[idx[replace]], action[replace]]
            current[alive] = result
        return current

    def embed_into(self, larger: "CayleyBall") -> np.ndarray:
        """Índices, na bola `larger`, de cada elemento desta bola."""
        if larger.spec != self.spec or larger.radius < self.radius:
            raise CapabilityError(
                "Bola de destino não contém esta bola",
                {"radius": self.radius, "target_radius": larger.radius},
            )
        mapped = np.zeros(self.size, dtype=np.int64)
        # pais sempre têm índice menor que os filhos
        for i in range(1, self.size):
            mapped[i] = larger.child[mapped[self.parent[i]], self.last[i]]
        return mapped
