"""
Módulo de Teoremas Limite - Drift, TCL, LIL e verificações de martingal
Experimentos de Monte Carlo sobre o motor em lote

Todas as funções recebem a semente explicitamente; a mesma configuração
reproduz os mesmos números bit a bit.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .batch import simulate_walks
from .boundary import BoundaryPoint
from .dynamics import CylinderFunction, StationaryMeasure, cylinder_space, drift_from_measure
from .exceptions import CapabilityError, DomainError, StatisticalError
from .green import LetterMetric
from .groups import GroupKind, GroupSpec
from .logger import get_logger
from .models import Finding
from .walk import StepDistribution, draw_steps, make_rng, require_symmetric

logger = get_logger(__name__)

MIN_DRIFT_STEPS = 100
MIN_KS_SAMPLES = 100
MIN_LIL_STEPS = 1_000
SUBLINEAR_RATIO = 0.7
LIL_CHECKPOINTS = 40


def _weights(metric: Optional[LetterMetric]) -> Optional[np.ndarray]:
    return None if metric is None else metric.weights


def _z_value(confidence: float) -> float:
    return float(stats.norm.ppf(0.5 + confidence / 2.0))


# ============================================================================
# Drift
# ============================================================================

@dataclass(frozen=True)
class DriftEstimate:
    """Â = E[d(Z_n,e)]/n com intervalo normal e o traço subaditivo."""
    drift: float
    half_width: float
    confidence: float
    n: int
    trajectories: int
    seed: int
    subadditive: List[Tuple[int, float]] = field(default_factory=list)
    sublinear: bool = False
    decay_ratio: float = 1.0

    def as_dict(self) -> Dict[str, object]:
        return {
            "drift": self.drift,
            "half_width": self.half_width,
            "confidence": self.confidence,
            "n": self.n,
            "trajectories": self.trajectories,
            "seed": self.seed,
            "subadditive": [{"k": k, "value": v} for k, v in self.subadditive],
            "sublinear": self.sublinear,
            "decay_ratio": self.decay_ratio,
        }


def estimate_drift(
    spec: GroupSpec,
    mu: StepDistribution,
    n: int,
    trajectories: int,
    seed: int,
    metric: Optional[LetterMetric] = None,
    confidence: float = 0.95,
    threads: int = 1,
) -> DriftEstimate:
    """
    Média de d(Z_n,e)/n com IC normal, mais (1/k)·E[d(Z_k,e)] para k = 1, 2, 4, …

    `sublinear` indica Â_n/Â_{n/10} < 0.7 (drift linear nulo, caso amenável).

    Raises:
        DomainError: μ não simétrica ou n < 100
    """
    require_symmetric(mu, "estimate_drift")
    if n < MIN_DRIFT_STEPS:
        raise DomainError(f"estimate_drift requer n ≥ {MIN_DRIFT_STEPS}, recebido {n}", {"n": n})
    powers = [2 ** j for j in range(int(math.log2(n)) + 1)]
    tenth = max(1, n // 10)
    checkpoints = sorted(set(powers + [tenth, n]))
    batch = simulate_walks(
        spec, mu, n, trajectories, seed,
        letter_weights=_weights(metric), checkpoints=checkpoints, threads=threads,
    )
    final = batch.column(n)
    drift = float(final.mean() / n)
    std = float(final.std(ddof=1)) if trajectories > 1 else 0.0
    half_width = _z_value(confidence) * std / math.sqrt(trajectories) / n
    trace = [(k, float(batch.column(k).mean() / k)) for k in powers]
    early = float(batch.column(tenth).mean() / tenth)
    ratio = drift / early if early > 0 else 1.0
    estimate = DriftEstimate(
        drift=drift,
        half_width=half_width,
        confidence=confidence,
        n=n,
        trajectories=trajectories,
        seed=seed,
        subadditive=trace,
        sublinear=ratio < SUBLINEAR_RATIO,
        decay_ratio=ratio,
    )
    logger.info(f"Â = {drift:.5f} ± {half_width:.5f} ({spec.name}, n={n}, {trajectories} trajetórias)")
    return estimate


def drift_formula(
    spec: GroupSpec, mu: StepDistribution, nu: StationaryMeasure, metric=1.0
) -> float:
    """A = Σ_cyl ν · Σ_g μ(g)·h_ξ(g)."""
    value = drift_from_measure(spec, mu, nu, metric)
    logger.info(f"Drift pela fórmula integral: {value:.6f}")
    return value


# ============================================================================
# TCL
# ============================================================================

@dataclass(frozen=True)
class CltSamples:
    samples: np.ndarray = field(repr=False)
    drift: float
    drift_source: str
    mean: float
    variance: float


def clt_samples(
    spec: GroupSpec,
    mu: StepDistribution,
    n: int,
    trajectories: int,
    seed: int,
    drift: Optional[float] = None,
    metric: Optional[LetterMetric] = None,
    threads: int = 1,
) -> CltSamples:
    """
    (d(Z_n,e) − n·Â)/√n, uma amostra por trajetória.

    Sem drift analítico, Â vem de um bloco independente (semente seed + 1).
    """
    if n == 0:
        zeros = np.zeros(trajectories)
        return CltSamples(zeros, drift or 0.0, "trivial", 0.0, 0.0)
    source = "analytic"
    if drift is None:
        drift = estimate_drift(spec, mu, n, trajectories, seed + 1, metric, threads=threads).drift
        source = "independent"
    batch = simulate_walks(
        spec, mu, n, trajectories, seed, letter_weights=_weights(metric), threads=threads
    )
    samples = (batch.column(n) - n * drift) / math.sqrt(n)
    variance = float(samples.var(ddof=1)) if trajectories > 1 else 0.0
    logger.info(f"TCL: média {samples.mean():.4f}, variância {variance:.4f} (Â {source})")
    return CltSamples(samples, float(drift), source, float(samples.mean()), variance)


@dataclass(frozen=True)
class KsResult:
    statistic: float
    p_value: float
    samples: int


def ks_normality_test(samples: Sequence[float], sigma: float) -> KsResult:
    """
    Kolmogorov–Smirnov contra N(0, σ²).

    Raises:
        DomainError: σ ≤ 0
        StatisticalError: menos de 100 amostras ou variância nula
    """
    data = np.asarray(samples, dtype=np.float64)
    if sigma <= 0:
        raise DomainError(f"σ deve ser positivo, recebido {sigma}", {"sigma": sigma})
    if data.size < MIN_KS_SAMPLES:
        raise StatisticalError(
            f"KS requer ≥ {MIN_KS_SAMPLES} amostras, recebidas {data.size}",
            {"samples": int(data.size)},
        )
    if float(data.var()) == 0.0:
        raise StatisticalError("Amostras com variância nula", {"value": float(data[0])})
    result = stats.kstest(data, "norm", args=(0.0, sigma))
    logger.info(f"KS: estatística {result.statistic:.4f}, p = {result.pvalue:.4f}")
    return KsResult(float(result.statistic), float(result.pvalue), int(data.size))


# ============================================================================
# LIL
# ============================================================================

def lil_checkpoints(n_max: int, count: int = LIL_CHECKPOINTS, start: int = MIN_LIL_STEPS) -> np.ndarray:
    """Instantes geométricos em [start, n_max]."""
    if n_max < start:
        raise DomainError(f"lil_trace requer n_max ≥ {start}, recebido {n_max}", {"n_max": n_max})
    return np.unique(np.rint(np.geomspace(start, n_max, count)).astype(np.int64))


def lil_statistic(distances: np.ndarray, checkpoints: np.ndarray, drift: float) -> Tuple[np.ndarray, np.ndarray]:
    """(d − nA)/√(n log log n) e (d − nA)/√(2n log log n)."""
    n = np.asarray(checkpoints, dtype=np.float64)
    centered = np.asarray(distances, dtype=np.float64) - n * drift
    scale = np.sqrt(n * np.log(np.log(n)))
    return centered / scale, centered / (math.sqrt(2.0) * scale)


@dataclass(frozen=True)
class LilTrace:
    """Estatística do LIL por semente nos instantes registrados."""
    checkpoints: np.ndarray = field(repr=False)
    plain: np.ndarray = field(repr=False)
    sqrt2: np.ndarray = field(repr=False)
    running_max_plain: np.ndarray = field(repr=False)
    running_max_sqrt2: np.ndarray = field(repr=False)
    envelope: Tuple[float, float]
    sigma: float
    within_envelope: bool
    diverging: bool
    seeds: List[int] = field(default_factory=list)

    def rows(self) -> List[Dict[str, float]]:
        out = []
        for s, seed in enumerate(self.seeds):
            for c, n in enumerate(self.checkpoints):
                out.append({
                    "seed": seed,
                    "n": int(n),
                    "statistic": float(self.plain[s, c]),
                    "statistic_sqrt2": float(self.sqrt2[s, c]),
                })
        return out


def lil_trace(
    spec: GroupSpec,
    mu: StepDistribution,
    n_max: int,
    seed: int,
    sigma: float,
    drift: float,
    metric: Optional[LetterMetric] = None,
    seeds: int = 1,
    envelope: Tuple[float, float] = (0.3, 3.0),
    divergence_sigmas: float = 5.0,
    threads: int = 1,
) -> LilTrace:
    """
    Estatística do LIL sob as duas normalizações para `seeds` sementes
    consecutivas (seed, seed + 1, …).

    O envelope [low·σ, high·σ] é verificado no máximo, entre sementes, dos
    máximos corridos sob √(2n log log n). O detector de divergência dispara
    quando |estatística final| > divergence_sigmas·σ.
    """
    points = lil_checkpoints(n_max)
    seed_list = [seed + i for i in range(seeds)]
    batch = simulate_walks(
        spec, mu, n_max, seeds, seed,
        letter_weights=_weights(metric), checkpoints=points, threads=threads, seeds=seed_list,
    )
    plain, sqrt2 = lil_statistic(batch.distances, points, drift)
    run_plain = np.maximum.accumulate(plain, axis=1)
    run_sqrt2 = np.maximum.accumulate(sqrt2, axis=1)
    top = float(run_sqrt2[:, -1].max())
    low, high = envelope
    within = low * sigma <= top <= high * sigma
    diverging = bool(np.any(np.abs(sqrt2[:, -1]) > divergence_sigmas * sigma))
    if diverging:
        logger.warning(f"LIL: estatística final além de {divergence_sigmas}σ (drift mal especificado?)")
    logger.info(f"LIL: máximo corrido √2 = {top:.4f} (envelope [{low * sigma:.3f}, {high * sigma:.3f}])")
    return LilTrace(
        checkpoints=points,
        plain=plain,
        sqrt2=sqrt2,
        running_max_plain=run_plain,
        running_max_sqrt2=run_sqrt2,
        envelope=(low * sigma, high * sigma),
        sigma=sigma,
        within_envelope=within,
        diverging=diverging,
        seeds=seed_list,
    )


# ============================================================================
# Martingal e Lindeberg
# ============================================================================

@dataclass(frozen=True)
class MartingaleReport:
    """Médias condicionais dos incrementos por cilindro de Z_{k−1}⁻¹·h."""
    bins: List[Dict[str, float]]
    max_z: float
    passed: bool
    increments: np.ndarray = field(repr=False)


def martingale_check(
    spec: GroupSpec,
    mu: StepDistribution,
    u: CylinderFunction,
    A: float,
    h: BoundaryPoint,
    trajectories: int,
    n: int,
    seed: int,
    metric=1.0,
    se_threshold: float = 3.0,
    min_occupancy: int = 30,
) -> MartingaleReport:
    """
    Incrementos D_k = h_{ξ_{k−1}}(g_k) − A + u(ξ_k) − u(ξ_{k−1}),
    ξ_k = g_k⁻¹·ξ_{k−1}, ξ_0 = h; agrupados pela primeira letra de ξ_{k−1}.

    Raises:
        CapabilityError: grupo não livre
        StatisticalError: algum cilindro com menos de `min_occupancy` amostras
    """
    if spec.kind is not GroupKind.FREE:
        raise CapabilityError("martingale_check requer grupo livre", {"group": spec.name})
    m = u.depth
    L = mu.max_length
    letters = np.asarray(spec.letter_length, dtype=np.float64)
    weights = metric.weights if isinstance(metric, LetterMetric) else float(metric) * letters
    inverse = spec.inverse_of
    cell_of = {tuple(int(s) for s in row): i for i, row in enumerate(u.space.words)}
    depth = n * L + m + L
    base = list(reversed(h.letters(depth)))
    step_words = [g.word for g in mu.elements]
    step_inverse = [tuple(inverse[s] for s in reversed(w)) for w in step_words]

    bins: Dict[int, List[float]] = {s: [] for s in range(1, spec.num_ids + 1)}
    all_increments: List[float] = []
    for index in range(trajectories):
        picks = draw_steps(make_rng(seed, index), mu.probabilities, n)
        xi = list(base)
        u_prev = u.values[cell_of[tuple(reversed(xi[-m:]))]]
        for pick in picks:
            word = step_words[pick]
            first = xi[-1]
            cp = 0
            while cp < len(word) and word[cp] == xi[-1 - cp]:
                cp += 1
            horo = float(weights[list(word)].sum() - 2.0 * weights[list(word[:cp])].sum())
            for s in reversed(step_inverse[pick]):
                if xi and xi[-1] == inverse[s]:
                    xi.pop()
                else:
                    xi.append(s)
            u_next = u.values[cell_of[tuple(reversed(xi[-m:]))]]
            increment = horo - A + u_next - u_prev
            bins[first].append(increment)
            all_increments.append(increment)
            u_prev = u_next

    rows = []
    for s, values in bins.items():
        if len(values) < min_occupancy:
            raise StatisticalError(
                f"Cilindro [{spec.label_of(s)}] com {len(values)} amostras < {min_occupancy}",
                {"cell": spec.label_of(s), "count": len(values), "minimum": min_occupancy},
            )
        arr = np.asarray(values)
        mean = float(arr.mean())
        se = float(arr.std(ddof=1) / math.sqrt(arr.size))
        z = abs(mean) / se if se > 0 else (0.0 if mean == 0 else math.inf)
        rows.append({"cell": spec.label_of(s), "count": int(arr.size), "mean": mean, "se": se, "z": z})
    max_z = max(row["z"] for row in rows)
    passed = max_z <= se_threshold
    logger.info(f"Martingal: maior desvio {max_z:.3f} SE ({'ok' if passed else 'falhou'})")
    return MartingaleReport(bins=rows, max_z=max_z, passed=passed, increments=np.asarray(all_increments))


def lindeberg_check(
    increments: Sequence[float],
    eps_grid: Sequence[float] = (0.1, 0.5, 1.0, 10.0),
    n_grid: Sequence[int] = (1, 10, 100, 1_000, 10_000),
    bound: Optional[float] = None,
) -> List[Dict[str, float]]:
    """
    (1/n)Σ E[X²·1{|X| > ε√n}] estimado pela média empírica, por (ε, n).

    `crossover` = ⌈(B/ε)²⌉ é o primeiro n em que o termo é zero para
    incrementos limitados por B; `bound_violated` sinaliza |X| > B.
    """
    x = np.asarray(increments, dtype=np.float64)
    observed = float(np.abs(x).max(initial=0.0))
    B = observed if bound is None else bound
    rows = []
    for eps in eps_grid:
        crossover = int(math.ceil((B / eps) ** 2))
        for n in n_grid:
            tail = np.abs(x) > eps * math.sqrt(n)
            term = float(np.mean(x ** 2 * tail)) if x.size else 0.0
            rows.append({
                "eps": eps,
                "n": n,
                "term": term,
                "crossover": crossover,
                "bound_violated": observed > B,
            })
    return rows


# ============================================================================
# ℤ≀ℤ e positividade
# ============================================================================

@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    n_grid: List[int]
    means: List[float]


def fit_exponent(n_grid: Sequence[int], means: Sequence[float]) -> ExponentFit:
    """Inclinação de mínimos quadrados de log E[d] contra log n."""
    n = np.asarray(n_grid, dtype=np.float64)
    d = np.asarray(means, dtype=np.float64)
    if np.any(d <= 0) or n.size < 2:
        raise DomainError("Ajuste log-log requer ≥ 2 pontos com média positiva", {"means": d.tolist()})
    slope, intercept = np.polyfit(np.log(n), np.log(d), 1)
    return ExponentFit(float(slope), float(intercept), [int(v) for v in n], d.tolist())


def lamplighter_exponent(
    spec: GroupSpec,
    mu: StepDistribution,
    n_grid: Sequence[int],
    trajectories: int,
    seed: int,
    threads: int = 1,
) -> ExponentFit:
    """Expoente de crescimento de E[d(Z_n,e)] numa grade de n (uma execução até max n)."""
    grid = sorted(int(v) for v in n_grid)
    batch = simulate_walks(spec, mu, grid[-1], trajectories, seed, checkpoints=grid, threads=threads)
    means = [float(batch.column(n).mean()) for n in grid]
    fit = fit_exponent(grid, means)
    logger.info(f"Expoente em {spec.name}: {fit.slope:.4f}")
    return fit


def positivity_check(
    spec: GroupSpec,
    mu: StepDistribution,
    n: int,
    trajectories: int,
    seed: int,
    m: int = 2,
    metric: Optional[LetterMetric] = None,
    confidence: float = 0.95,
    threads: int = 1,
) -> Finding:
    """
    Â − 3·meia-largura > 0 e, em grupos livres, o ínfimo sobre cilindros de
    profundidade m de (1/n)·E[cota inferior de h_ξ(Z_n)] > 0.

    A cota inferior usa (Z_n, ξ) ≤ |Z_n| quando Z_n estende o cilindro.

    Raises:
        CapabilityError: grupo não hiperbólico
    """
    if not spec.is_hyperbolic:
        raise CapabilityError("positivity_check requer grupo hiperbólico", {"group": spec.name})
    estimate = estimate_drift(spec, mu, n, trajectories, seed, metric, confidence, threads)
    drift_ok = estimate.drift - 3 * estimate.half_width > 0
    detail = f"Â = {estimate.drift:.4f} ± {estimate.half_width:.4f}"
    cylinder_inf = None
    if spec.kind is GroupKind.FREE:
        weights = metric.weights if metric is not None else np.asarray(spec.letter_length, dtype=np.float64)
        batch = simulate_walks(
            spec, mu, n, trajectories, seed,
            letter_weights=_weights(metric), keep_words=True, threads=threads,
        )
        space = cylinder_space(spec, m)
        lengths = batch.column(n)
        lows = []
        for cell in space.words:
            total = 0.0
            for word, length in zip(batch.final_words, lengths):
                cp = 0
                while cp < min(m, len(word)) and word[cp] == cell[cp]:
                    cp += 1
                shared = length if cp == m else float(weights[list(word[:cp])].sum())
                total += length - 2.0 * shared
            lows.append(total / (trajectories * n))
        cylinder_inf = float(min(lows))
        detail += f"; ínfimo por cilindro {cylinder_inf:.4f}"
    passed = drift_ok and (cylinder_inf is None or cylinder_inf > 0)
    if not passed:
        logger.warning(f"Positividade do drift falhou: {detail}")
    return Finding(
        check="positivity",
        passed=passed,
        detail=detail,
        observed=estimate.drift,
        expected=0.0,
    )
