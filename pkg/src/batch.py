"""
Motor de Trajetórias em Lote
Simula muitas trajetórias em passo sincronizado com numpy

Grupos livres e produtos livres: cada trajetória é uma pilha de sílabas
(array T × capacidade). Um passo aplica as sílabas do elemento sorteado com a
tabela de fusão do grupo (empilha, cancela ou substitui o topo), atualizando
ao mesmo tempo:

- o comprimento ponderado (pesos por sílaba da métrica),
- o prefixo comum com um ponto de fronteira fixo (horofunção),
- o último instante em que alguma posição < m da pilha mudou (raios).

ℤ≀ℤ: posições do andador por soma acumulada e lâmpadas por bincount nos
instantes de registro.

Blocos de trajetórias podem rodar em threads; cada trajetória tem seu
próprio fluxo, então o resultado é o mesmo para qualquer número de threads.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import CapabilityError, DomainError
from .groups import MERGE_CANCEL, MERGE_PUSH, GroupKind, GroupSpec
from .logger import get_logger
from .walk import StepDistribution, draw_steps, make_rng

logger = get_logger(__name__)

INITIAL_CAPACITY = 1024


@dataclass
class BatchResult:
    """Resultados por trajetória (linhas) e por instante registrado (colunas)."""
    checkpoints: np.ndarray
    distances: np.ndarray
    horofunction: Optional[np.ndarray] = None
    horofunction_saturated: Optional[np.ndarray] = None
    final_words: List[Tuple[int, ...]] = field(default_factory=list)
    ray_prefixes: Optional[np.ndarray] = None
    ray_times: Optional[np.ndarray] = None
    ray_lengths: Optional[np.ndarray] = None

    @property
    def trajectories(self) -> int:
        return int(self.distances.shape[0])

    def column(self, n: int) -> np.ndarray:
        """Distâncias no instante n (precisa ser um instante registrado)."""
        hits = np.nonzero(self.checkpoints == n)[0]
        if not hits.size:
            raise DomainError(f"Instante {n} não foi registrado", {"n": n})
        return self.distances[:, hits[0]]


def _stream_rngs(rows: Sequence[int], seed: int, seeds: Optional[Sequence[int]]):
    if seeds is not None:
        return [make_rng(seeds[i], 0) for i in rows]
    return [make_rng(seed, i) for i in rows]


def _normalize_checkpoints(n: int, checkpoints: Optional[Sequence[int]]) -> np.ndarray:
    if checkpoints is None:
        return np.array([n], dtype=np.int64)
    points = np.unique(np.asarray(list(checkpoints), dtype=np.int64))
    if points.size and (points[0] < 0 or points[-1] > n):
        raise DomainError(
            f"Instantes de registro fora de [0, {n}]",
            {"n": n, "checkpoints": points.tolist()},
        )
    return points


# ============================================================================
# Grupos livres e produtos livres
# ============================================================================

class _WordState:
    """Estado vetorizado de um bloco de trajetórias em palavras reduzidas."""

    def __init__(self, size: int, capacity: int, weights: np.ndarray):
        self.stack = np.zeros((size, capacity), dtype=np.int16)
        self.length = np.zeros(size, dtype=np.int64)
        self.weighted = np.zeros(size, dtype=np.float64)
        self.weights = weights

    def ensure(self, extra: int) -> None:
        needed = int(self.length.max()) + extra + 1
        if needed > self.stack.shape[1]:
            grown = max(needed, 2 * self.stack.shape[1])
            stack = np.zeros((self.stack.shape[0], grown), dtype=np.int16)
            stack[:, : self.stack.shape[1]] = self.stack
            self.stack = stack


def _simulate_word_block(
    spec: GroupSpec,
    mu: StepDistribution,
    n: int,
    rows: Sequence[int],
    seed: int,
    seeds: Optional[Sequence[int]],
    weights: np.ndarray,
    checkpoints: np.ndarray,
    ray_depth: Optional[int],
    horo_prefix: Optional[Sequence[int]],
    keep_words: bool,
) -> BatchResult:
    size = len(rows)
    merge = spec.merge_array()
    syllables = max(1, mu.max_syllables)
    table = np.zeros((len(mu), syllables), dtype=np.int64)
    for k, g in enumerate(mu.elements):
        table[k, : len(g.word)] = g.word

    state = _WordState(size, min(INITIAL_CAPACITY, n * syllables + 1), weights)
    rngs = _stream_rngs(rows, seed, seeds)
    steps = np.stack([draw_steps(rng, mu.probabilities, n) for rng in rngs]) if n else np.zeros((size, 0), np.int64)

    distances = np.zeros((size, checkpoints.size), dtype=np.float64)
    horo_values = None
    cp = wcp_table = xi = None
    saturated = None
    if horo_prefix is not None:
        xi = np.asarray(horo_prefix, dtype=np.int64)
        depth = xi.size
        wcp_table = np.concatenate([[0.0], np.cumsum(weights[xi])])
        cp = np.zeros(size, dtype=np.int64)
        horo_values = np.zeros((size, checkpoints.size), dtype=np.float64)
        saturated = np.zeros(size, dtype=bool)
    last_touch = np.zeros(size, dtype=np.int64) if ray_depth else None

    column = 0
    if checkpoints.size and checkpoints[0] == 0:
        column = 1
    everyone = np.arange(size)
    for k in range(1, n + 1):
        choice = steps[:, k - 1]
        for j in range(syllables):
            s_all = table[choice, j]
            active = s_all > 0
            idx = everyone if active.all() else np.nonzero(active)[0]
            if not idx.size:
                continue
            s = s_all[idx]
            state.ensure(1)
            ln = state.length[idx]
            top = np.where(ln > 0, state.stack[idx, np.maximum(ln - 1, 0)], 0).astype(np.int64)
            action = merge[top, s]

            push = action == MERGE_PUSH
            pi, pl, ps = idx[push], ln[push], s[push]
            state.stack[pi, pl] = ps
            state.length[pi] += 1
            state.weighted[pi] += weights[ps]

            cancel = action == MERGE_CANCEL
            ci, cl = idx[cancel], ln[cancel] - 1
            state.weighted[ci] -= weights[top[cancel]]
            state.length[ci] -= 1

            replace = action > 0
            ri, rl, ra = idx[replace], ln[replace] - 1, action[replace]
            state.weighted[ri] += weights[ra] - weights[top[replace]]
            state.stack[ri, rl] = ra

            if last_touch is not None:
                last_touch[pi[pl < ray_depth]] = k
                last_touch[ci[cl < ray_depth]] = k
                last_touch[ri[rl < ray_depth]] = k

            if cp is not None:
                grow = (cp[pi] == pl) & (pl < depth)
                grow &= ps == xi[np.minimum(pl, depth - 1)]
                cp[pi[grow]] += 1
                cp[ci] = np.minimum(cp[ci], cl)
                cp[ri] = np.minimum(cp[ri], rl)
                regrow = (cp[ri] == rl) & (rl < depth)
                regrow &= ra == xi[np.minimum(rl, depth - 1)]
                cp[ri[regrow]] += 1

        if saturated is not None:
            saturated |= (cp == depth) & (state.length > depth)
        if column < checkpoints.size and checkpoints[column] == k:
            distances[:, column] = state.weighted
            if horo_values is not None:
                horo_values[:, column] = state.weighted - 2.0 * wcp_table[cp]
            column += 1

    result = BatchResult(checkpoints=checkpoints, distances=distances)
    if horo_values is not None:
        result.horofunction = horo_values
        result.horofunction_saturated = saturated
    if ray_depth:
        prefixes = np.zeros((size, ray_depth), dtype=np.int64)
        width = min(ray_depth, state.stack.shape[1])
        prefixes[:, :width] = state.stack[:, :width]
        short = state.length < ray_depth
        for r in np.nonzero(short)[0]:
            prefixes[r, state.length[r]:] = 0
        result.ray_prefixes = prefixes
        result.ray_times = last_touch
        result.ray_lengths = state.length.copy()
    if keep_words:
        result.final_words = [
            tuple(int(x) for x in state.stack[r, : state.length[r]]) for r in range(size)
        ]
    return result


# ============================================================================
# ℤ≀ℤ
# ============================================================================

def _lamplighter_tables(mu: StepDistribution) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    width = max(1, max(len(g.lamps) for g in mu.elements))
    shift = np.array([g.position for g in mu.elements], dtype=np.int64)
    lamp_pos = np.zeros((len(mu), width), dtype=np.int64)
    lamp_val = np.zeros((len(mu), width), dtype=np.int64)
    for k, g in enumerate(mu.elements):
        for j, (p, v) in enumerate(g.lamps):
            lamp_pos[k, j] = p
            lamp_val[k, j] = v
    return shift, lamp_pos, lamp_val


def _simulate_lamplighter_block(
    mu: StepDistribution,
    n: int,
    rows: Sequence[int],
    seed: int,
    seeds: Optional[Sequence[int]],
    checkpoints: np.ndarray,
) -> BatchResult:
    shift, lamp_pos, lamp_val = _lamplighter_tables(mu)
    distances = np.zeros((len(rows), checkpoints.size), dtype=np.float64)
    for r, rng in enumerate(_stream_rngs(rows, seed, seeds)):
        steps = draw_steps(rng, mu.probabilities, n)
        after = np.cumsum(shift[steps])
        before = np.concatenate([[0], after[:-1]]) if n else after
        where = (before[:, None] + lamp_pos[steps]).ravel()
        value = lamp_val[steps].ravel()
        per_step = lamp_pos.shape[1]
        lo = int(min(where.min(initial=0), after.min(initial=0)))
        for c, k in enumerate(checkpoints):
            if k == 0:
                continue
            lamps = np.bincount(
                where[: k * per_step] - lo,
                weights=value[: k * per_step],
                minlength=1,
            )
            lamps = np.rint(lamps).astype(np.int64)
            support = np.nonzero(lamps)[0] + lo
            walker = int(after[k - 1])
            left = min(int(support.min(initial=0)), 0, walker)
            right = max(int(support.max(initial=0)), 0, walker)
            travel = min(
                -left + (right - left) + (right - walker),
                right + (right - left) + (walker - left),
            )
            distances[r, c] = float(np.abs(lamps).sum() + travel)
    return BatchResult(checkpoints=checkpoints, distances=distances)


# ============================================================================
# Interface pública
# ============================================================================

def simulate_walks(
    spec: GroupSpec,
    mu: StepDistribution,
    n: int,
    trajectories: int,
    seed: int,
    *,
    letter_weights: Optional[np.ndarray] = None,
    checkpoints: Optional[Sequence[int]] = None,
    ray_depth: Optional[int] = None,
    horo_prefix: Optional[Sequence[int]] = None,
    keep_words: bool = False,
    threads: int = 1,
    seeds: Optional[Sequence[int]] = None,
) -> BatchResult:
    """
    Simula `trajectories` passeios de n passos e registra distâncias.

    Args:
        letter_weights: peso por sílaba (índice 0 = palavra vazia); padrão é
            o comprimento de palavra. Ignorado em ℤ≀ℤ.
        checkpoints: instantes registrados (padrão: só n)
        ray_depth: rastreia estabilização do prefixo de comprimento m
        horo_prefix: prefixo de ξ para registrar h_ξ(Z_n)
        keep_words: devolve as palavras finais
        threads: número de workers (blocos de trajetórias)
        seeds: uma semente por trajetória (substitui seed/índice)

    Raises:
        CapabilityError: raios/horofunções pedidos em ℤ≀ℤ
    """
    if n < 0 or trajectories < 1:
        raise DomainError(
            "n deve ser ≥ 0 e trajectories ≥ 1",
            {"n": n, "trajectories": trajectories},
        )
    if seeds is not None and len(seeds) != trajectories:
        raise DomainError(
            "Uma semente por trajetória",
            {"seeds": len(seeds), "trajectories": trajectories},
        )
    points = _normalize_checkpoints(n, checkpoints)
    blocks = np.array_split(np.arange(trajectories), max(1, min(threads, trajectories)))
    logger.info(
        f"Simulando {trajectories} trajetórias de {n} passos em {spec.name} "
        f"({len(blocks)} bloco(s))"
    )

    if spec.kind is GroupKind.LAMPLIGHTER:
        if ray_depth or horo_prefix is not None or keep_words:
            raise CapabilityError(
                "Raios e horofunções só existem para grupos livres",
                {"group": spec.name},
            )

        def run(rows):
            return _simulate_lamplighter_block(mu, n, rows, seed, seeds, points)
    else:
        weights = (
            np.asarray(letter_weights, dtype=np.float64)
            if letter_weights is not None
            else np.asarray(spec.letter_length, dtype=np.float64)
        )

        def run(rows):
            return _simulate_word_block(
                spec, mu, n, rows, seed, seeds, weights, points,
                ray_depth, horo_prefix, keep_words,
            )

    if len(blocks) == 1:
        parts = [run(blocks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            parts = list(pool.map(run, blocks))
    return _merge(parts, points)


def _merge(parts: List[BatchResult], points: np.ndarray) -> BatchResult:
    def stack(name):
        values = [getattr(p, name) for p in parts]
        if values[0] is None:
            return None
        return np.concatenate(values)

    return BatchResult(
        checkpoints=points,
        distances=np.concatenate([p.distances for p in parts]),
        horofunction=stack("horofunction"),
        horofunction_saturated=stack("horofunction_saturated"),
        final_words=[w for p in parts for w in p.final_words],
        ray_prefixes=stack("ray_prefixes"),
        ray_times=stack("ray_times"),
        ray_lengths=stack("ray_lengths"),
    )
