"""
Interface de Linha de Comando - Laboratório de Passeios Hiperbólicos
Executa um experimento por invocação e grava os artefatos em --out

Comandos:
    green        tabela G_N(e,x) e ajuste de quase-isometria
    hilbert      métrica de Hilbert dos kernels de Martin contra d_G
    boundary     ν, τ̂, equação de Poisson, σ² e identidade de cociclo
    drift        Â por Monte Carlo contra a fórmula integral
    clt          amostras normalizadas, KS, martingal e Lindeberg
    lil          estatística do LIL nas duas normalizações
    lamplighter  expoente de crescimento de E[d(Z_n,e)]
    delta        δ̂ pela condição dos quatro pontos
    selftest     valores de referência exatos e derivados

Precedência da configuração: flags > --config (JSON) > commands.<comando>
do lab_settings.yaml > padrões do ExperimentConfig.

Códigos de saída: 0 sucesso, 2 verificação falhou, 3 configuração,
4 recursos/precisão.
"""

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence

import numpy as np
from pydantic import ValidationError
from rich.console import Console

from . import __version__
from .batch import simulate_walks
from .boundary import (
    DELTA_SAMPLE_CAP,
    boundary_point,
    estimate_delta,
    gromov_busemann_cocycle,
    word_distance,
)
from .dynamics import (
    consistency_deviation,
    depth_sensitivity,
    duality_defect,
    empirical_stationary,
    holder_norm,
    indicator,
    proximality_frontier,
    psi,
    random_boundary_pairs,
    sigma_squared_formula,
    solve_poisson,
    solve_stationary,
    spectral_radius_estimate,
    stationarity_defect,
)
from .exceptions import CapabilityError, ConfigError, LabError
from .green import (
    factorization_gap,
    first_passage,
    green_kernel,
    green_letter_metric,
    green_metric,
    quasi_isometry_constants,
    resolve_metric,
    verify_hilbert_green,
)
from .groups import GroupKind, GroupSpec, ball_list, generators, identity, parse_group_spec
from .limits import (
    clt_samples,
    drift_formula,
    estimate_drift,
    ks_normality_test,
    lamplighter_exponent,
    lil_trace,
    lindeberg_check,
    martingale_check,
    positivity_check,
)
from .logger import get_logger, setup_logging
from .models import COMMANDS, ExperimentConfig, Finding, LabSettings
from .reporting import build_report, render_summary, write_artifacts
from .selftest import run_selftest
from .settings import DEFAULT_SETTINGS_PATH, load_settings
from .walk import StepDistribution, make_rng, parse_measure, uniform_generators

logger = get_logger(__name__)

CONFIG_FIELDS = (
    "group", "measure", "metric", "n", "trajectories", "depth", "truncation",
    "radius", "tolerance", "seed", "threads", "out", "format",
)

HILBERT_THRESHOLD = 0.01
DRIFT_AGREEMENT = 0.02
TV_LIMIT = 0.04
VARIANCE_RELATIVE = 0.10
COCYCLE_TRIPLES = 1_000
MARTINGALE_STEPS = 200
MARTINGALE_TRAJECTORIES = 400
APPROXIMATE_STATIONARY = "ν aproximada por extensão de Markov (suporte de μ além dos vizinhos)"


@dataclass
class CommandOutput:
    """Resultado bruto de um comando antes de virar relatório."""
    results: Dict[str, Any] = field(default_factory=dict)
    findings: List[Finding] = field(default_factory=list)
    tables: Dict[str, List[Dict[str, Any]]] = field(default_factory=dict)
    provenance: Dict[str, str] = field(default_factory=dict)


# ============================================================================
# Configuração efetiva
# ============================================================================

def _load_config_file(path: str) -> Dict[str, Any]:
    """Lê o JSON de --config (espelha as flags)."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"Arquivo de configuração não encontrado: {path}", {"path": path}) from e
    except json.JSONDecodeError as e:
        raise ConfigError(
            f"JSON inválido em {path}: {e.msg}",
            {"path": path, "line": e.lineno, "column": e.colno, "position": e.pos},
        ) from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path} deve conter um objeto JSON", {"path": path})
    return data


def build_config(
    command: str,
    overrides: Optional[Mapping[str, Any]] = None,
    config_file: Optional[str] = None,
    settings: Optional[LabSettings] = None,
) -> ExperimentConfig:
    """
    Mescla padrões do comando, arquivo JSON e flags numa configuração válida.

    Raises:
        ConfigError: comando desconhecido, spec de grupo inválida (com a
            posição do erro) ou campos fora do schema
    """
    if command not in COMMANDS:
        raise ConfigError(f"Comando desconhecido: {command!r}", {"command": command, "commands": list(COMMANDS)})
    merged: Dict[str, Any] = {}
    if settings is not None and command in settings.commands:
        merged.update(settings.commands[command].model_dump(exclude_none=True))
    if config_file:
        data = _load_config_file(config_file)
        if data.get("command", command) != command:
            raise ConfigError(
                f"--config é de '{data['command']}', não de '{command}'",
                {"config_command": data["command"], "command": command},
            )
        data.pop("command", None)
        merged.update(data)
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    merged["command"] = command
    if "group" in merged:
        # Erros de spec carregam a posição; fora do pydantic para não perdê-la
        merged["group"] = parse_group_spec(str(merged["group"])).name
    try:
        return ExperimentConfig(**merged)
    except ValidationError as e:
        logger.error(f"Configuração inválida: {e}")
        raise ConfigError(
            f"Configuração inválida para '{command}'",
            {"errors": e.errors(include_url=False, include_context=False)},
        ) from e


# ============================================================================
# Auxiliares
# ============================================================================

def _context(config: ExperimentConfig, settings: LabSettings):
    spec = parse_group_spec(config.group)
    mu = parse_measure(spec, config.measure, settings.measures)
    return spec, mu


def _is_simple_walk(spec: GroupSpec, mu: StepDistribution) -> bool:
    """μ uniforme nos geradores de um grupo livre (caso com fórmulas fechadas)."""
    return spec.kind is GroupKind.FREE and mu.as_dict() == uniform_generators(spec).as_dict()


def _metric_scale(spec: GroupSpec, config: ExperimentConfig) -> float:
    """Fator da métrica de Green sobre a de palavra para o passeio simples em F_k."""
    return math.log(2 * spec.rank - 1) if config.metric == "green" else 1.0


def _srw_constants(spec: GroupSpec, scale: float):
    """(drift, σ²) do passeio simples em F_k pela cadeia de distância ±1."""
    k = spec.rank
    drift = (k - 1) / k
    return scale * drift, scale ** 2 * (1.0 - drift ** 2)


def _close(check: str, observed: float, expected: float, tolerance: float, detail: str) -> Finding:
    return Finding(
        check=check,
        passed=abs(observed - expected) <= tolerance,
        detail=detail,
        observed=float(observed),
        expected=float(expected),
    )


def _report_only(check: str, observed: float, detail: str) -> Finding:
    return Finding(check=check, passed=True, detail=f"{detail} (reportado, não verificado)", observed=float(observed))


def _tree_pipeline(spec, mu, metric, m: int, settings: LabSettings):
    """ν, A, solução de Poisson e σ² em profundidade m (grupos livres)."""
    numerics = settings.numerics
    nu = solve_stationary(spec, mu, m, numerics.stationary_tolerance, numerics.stationary_max_iterations)
    scale = metric if metric is not None else 1.0
    A = drift_formula(spec, mu, nu, scale)
    solution = solve_poisson(
        spec, mu, psi(spec, mu, A, m, scale), nu,
        numerics.poisson_tolerance, numerics.poisson_max_iterations,
    )
    variance = sigma_squared_formula(spec, mu, nu, solution.u, A, scale)
    return nu, A, solution, variance


# ============================================================================
# Comandos
# ============================================================================

def cmd_green(config: ExperimentConfig, settings: LabSettings) -> CommandOutput:
    spec, mu = _context(config, settings)
    table = green_kernel(
        spec, mu, config.truncation, config.radius, config.tolerance, settings.numerics.support_cap
    )
    out = CommandOutput()
    out.results["table"] = table.summary()
    out.findings.append(Finding(
        check="accuracy_budget",
        passed=table.spatial_bound <= config.tolerance,
        detail="cota espacial de truncagem da bola",
        observed=table.spatial_bound,
        expected=config.tolerance,
    ))
    if config.radius >= 1:
        fit = quasi_isometry_constants(table)
        out.results["quasi_isometry"] = fit.as_dict()
        s = generators(spec)[0]
        gap = factorization_gap(table, s)
        out.results["factorization_gap"] = gap
        out.findings.append(Finding(
            check="factorization",
            passed=gap <= config.tolerance + table.tail_bound,
            detail="|G_N(e,s) − G_N(e,e)·F_N(e,s)|",
            observed=gap,
            expected=0.0,
        ))
        if _is_simple_walk(spec, mu):
            q = 2 * spec.rank - 1
            idx = table.ball.within(max(config.radius - 2, 0))
            ratio = table.values[idx] / table.at_identity
            worst = float(np.abs(ratio - float(q) ** (-table.ball.depth[idx].astype(np.float64))).max())
            out.findings.append(_close(
                "closed_form_ratio", worst, 0.0, config.tolerance,
                f"max |G(e,x)/G(e,e) − {q}^(−|x|)| em |x| ≤ {max(config.radius - 2, 0)}",
            ))
            out.findings.append(_close(
                "green_identity", table.at_identity, q / (q - 1), config.tolerance, f"G(e,e) = {q}/{q - 1}",
            ))
            out.findings.append(Finding(
                check="quasi_isometry",
                passed=abs(fit.C - math.log(q)) <= 0.01 * math.log(q) and abs(fit.b) <= 0.02,
                detail=f"C ≈ log {q}, b ≈ 0 (b = {fit.b:.4g})",
                observed=fit.C,
                expected=math.log(q),
            ))
            F = first_passage(spec, mu, identity(spec), s, config.truncation)
            out.findings.append(_close("first_passage", F, 1.0 / q, config.tolerance, f"F(e,s) = 1/{q}"))
        else:
            out.findings.append(_report_only("quasi_isometry", fit.C, f"C = {fit.C:.4f}, b = {fit.b:.4f}"))
    out.tables["green"] = [{"word": w, "G": v} for w, v in table.rows()]
    out.provenance["green"] = f"soma truncada em N={config.truncation}, bola de trabalho {table.working_radius}"
    return out


def cmd_hilbert(config: ExperimentConfig, settings: LabSettings) -> CommandOutput:
    spec, mu = _context(config, settings)
    report = verify_hilbert_green(
        spec, mu, config.radius, config.truncation,
        tolerance=config.tolerance, support_cap=settings.numerics.support_cap,
    )
    threshold = HILBERT_THRESHOLD
    out = CommandOutput(results={"hilbert": report.as_dict()})
    out.findings.append(Finding(
        check="hilbert_equals_green",
        passed=report.max_deviation <= threshold,
        detail=f"pior par {report.worst_pair}; sup em {report.argsup}, inf em {report.arginf}",
        observed=report.max_deviation,
        expected=threshold,
    ))
    return out


def cmd_boundary(config: ExperimentConfig, settings: LabSettings) -> CommandOutput:
    spec, mu = _context(config, settings)
    if spec.kind is not GroupKind.FREE:
        raise CapabilityError("boundary requer grupo livre", {"group": spec.name})
    metric = resolve_metric(spec, mu, config.metric)
    m = max(config.depth, mu.max_length)
    nu, A, solution, variance = _tree_pipeline(spec, mu, metric, m, settings)
    spectral = spectral_radius_estimate(spec, mu, max(m, 2), seed=config.seed, nu=nu if m >= 2 else None)
    stationarity = stationarity_defect(spec, mu, nu)
    consistency = consistency_deviation(nu)
    duality = duality_defect(spec, mu, indicator(spec, generators(spec)[0].word, 1), nu)
    norms = solution.norms[:21]

    out = CommandOutput()
    out.results.update({
        "depth": m,
        "drift": A,
        "stationary": nu.diagnostics(),
        "spectral": {"tau_hat": spectral.tau_hat, "poisson_tau_hat": solution.tau_hat},
        "poisson": {
            "iterations": solution.iterations,
            "residual": solution.residual,
            "lifted_residual": solution.lifted_residual,
            "psi_mean": solution.psi_mean,
            "norms": norms,
            "monotone": all(b <= a for a, b in zip(norms[:-1], norms[1:])),
            "holder_norm": holder_norm(solution.u, nu, settings.numerics.holder_alpha),
        },
        "sigma_squared": variance.sigma_squared,
        "sensitivity": depth_sensitivity(spec, mu, m, metric if metric is not None else 1.0,
                                         settings.numerics.poisson_tolerance),
    })
    out.findings += [
        _close("stationarity", stationarity, 0.0, 1e-9, "‖μ∗ν − ν‖₁"),
        _close("depth_consistency", consistency, 0.0, 1e-9, "ν([w]) = Σ_s ν([ws])"),
        _close("duality", duality, 0.0, 1e-9, "∫P1_[s] dν = ∫1_[s] dν"),
        Finding(check="spectral_gap", passed=spectral.tau_hat < 1.0, detail="τ̂ < 1",
                observed=spectral.tau_hat, expected=1.0),
        _close("poisson_residual", solution.residual, 0.0, 1e-6, "‖(I − ΠP)u − ψ‖∞"),
        Finding(check="variance_nondegenerate", passed=not variance.degenerate, detail="σ² > 0",
                observed=variance.sigma_squared),
    ]
    if _is_simple_walk(spec, mu):
        drift, sigma2 = _srw_constants(spec, _metric_scale(spec, config))
        out.findings.append(_close("closed_form_drift", A, drift, 1e-9, "A pela cadeia de distância"))
        out.findings.append(_close("closed_form_variance", variance.sigma_squared, sigma2, 1e-3,
                                   "σ² pela cadeia de distância"))

    # ν empírica pelos raios estabilizados
    k = min(m, 2)
    batch = simulate_walks(
        spec, mu, config.n, config.trajectories, config.seed,
        letter_weights=None if metric is None else metric.weights,
        ray_depth=k, threads=config.threads,
    )
    stable = (batch.ray_lengths >= k) & (batch.ray_times <= settings.numerics.settle_fraction * config.n)
    freq, tv = empirical_stationary(spec, batch.ray_prefixes[stable], k, nu, settings.statistics.min_stabilized_rays)
    cells = freq.size
    limit = max(TV_LIMIT, math.sqrt(cells / int(stable.sum())))
    out.results["empirical"] = {"depth": k, "rays": int(stable.sum()), "tv": tv, "limit": limit}
    out.findings.append(_close("empirical_stationary", tv, 0.0, limit, f"TV com {int(stable.sum())} raios"))

    # Identidade de cociclo de Gromov–Busemann em triplas aleatórias
    rng = make_rng(config.seed, 1)
    pool = ball_list(spec, 4)
    pairs = random_boundary_pairs(spec, COCYCLE_TRIPLES, config.seed)
    scale = metric if metric is not None else 1.0
    residual = 0.0
    doubled_gap = 0.0
    for xi, eta in pairs:
        g = pool[int(rng.integers(len(pool)))]
        identity_check = gromov_busemann_cocycle(g, xi, eta, scale)
        residual = max(residual, identity_check.residual)
        doubled_gap = max(doubled_gap, abs(identity_check.lhs - identity_check.doubled_rhs))
    out.findings.append(_close("cocycle_identity", residual, 0.0, 1e-9,
                               f"LHS = −½(h_ξ(g) + h_η(g)) em {COCYCLE_TRIPLES} triplas"))
    out.findings.append(_report_only("cocycle_constant", doubled_gap,
                                     "discrepância da forma 2·(h_ξ(g) + h_η(g))"))

    frontier_pairs = random_boundary_pairs(spec, 20, config.seed + 1)
    out.results["proximality"] = proximality_frontier(spec, mu, frontier_pairs)
    out.tables["stationary"] = [{"cylinder": c, "nu": p} for c, p in nu.rows()]
    out.tables["poisson"] = [{"cylinder": c, "u": v} for c, v in solution.u.rows()]
    out.tables["proximality"] = out.results["proximality"]
    out.provenance["drift"] = "fórmula integral"
    if not nu.exact:
        out.provenance["stationary"] = APPROXIMATE_STATIONARY
    return out


def cmd_drift(config: ExperimentConfig, settings: LabSettings) -> CommandOutput:
    spec, mu = _context(config, settings)
    stats = settings.statistics
    metric = resolve_metric(spec, mu, config.metric)
    estimate = estimate_drift(
        spec, mu, config.n, config.trajectories, config.seed, metric,
        stats.confidence_level, config.threads,
    )
    out = CommandOutput(results={"estimate": estimate.as_dict()})
    out.tables["subadditive"] = [{"k": k, "value": v} for k, v in estimate.subadditive]
    out.provenance["drift"] = "Monte Carlo"
    if spec.kind is GroupKind.FREE:
        nu = solve_stationary(spec, mu, max(2, mu.max_length))
        A = drift_formula(spec, mu, nu, metric)
        out.results["formula"] = A
        out.results["stationary"] = nu.diagnostics()
        if not nu.exact:
            out.provenance["formula"] = APPROXIMATE_STATIONARY
        limit = max(DRIFT_AGREEMENT, 2 * estimate.half_width)
        out.findings.append(_close("drift_formula", estimate.drift, A, limit, "Â contra a fórmula integral"))
        if _is_simple_walk(spec, mu):
            expected, _ = _srw_constants(spec, _metric_scale(spec, config))
            out.findings.append(_close("closed_form_drift", estimate.drift, expected, 0.02 * expected,
                                       "Â contra a cadeia de distância"))
    if spec.is_hyperbolic:
        out.findings.append(positivity_check(
            spec, mu, config.n, config.trajectories, config.seed,
            metric=metric, confidence=stats.confidence_level, threads=config.threads,
        ))
    else:
        out.findings.append(Finding(
            check="sublinear",
            passed=estimate.sublinear,
            detail=f"Â_n/Â_(n/10) = {estimate.decay_ratio:.3f} (drift linear nulo esperado)",
            observed=estimate.decay_ratio,
        ))
    return out


def cmd_clt(config: ExperimentConfig, settings: LabSettings) -> CommandOutput:
    spec, mu = _context(config, settings)
    stats = settings.statistics
    metric = resolve_metric(spec, mu, config.metric)
    out = CommandOutput()
    solution = None
    if spec.kind is GroupKind.FREE:
        m = max(config.depth, mu.max_length)
        nu, A, solution, variance = _tree_pipeline(spec, mu, metric, m, settings)
        sigma2 = variance.sigma_squared
        out.provenance["sigma_squared"] = f"fórmula em profundidade {variance.depth}"
        if not nu.exact:
            out.provenance["stationary"] = APPROXIMATE_STATIONARY
        samples = clt_samples(spec, mu, config.n, config.trajectories, config.seed, A, metric, config.threads)
    else:
        samples = clt_samples(spec, mu, config.n, config.trajectories, config.seed,
                              metric=metric, threads=config.threads)
        sigma2 = clt_samples(spec, mu, config.n, config.trajectories, config.seed + 2,
                             samples.drift, metric, config.threads).variance
        out.provenance["sigma_squared"] = "variância de um bloco independente"
    out.provenance["drift"] = samples.drift_source
    sigma = math.sqrt(sigma2)
    ks = ks_normality_test(samples.samples, sigma)
    out.results.update({
        "sigma_squared": sigma2,
        "drift": samples.drift,
        "sample_mean": samples.mean,
        "sample_variance": samples.variance,
        "ks": {"statistic": ks.statistic, "p_value": ks.p_value, "samples": ks.samples},
    })
    out.findings.append(Finding(
        check="ks_normality",
        passed=ks.p_value > stats.ks_threshold,
        detail=f"KS contra N(0, {sigma2:.4f})",
        observed=ks.p_value,
        expected=stats.ks_threshold,
    ))
    out.findings.append(_close(
        "sample_variance", samples.variance, sigma2, VARIANCE_RELATIVE * sigma2, "variância empírica ±10%",
    ))
    if _is_simple_walk(spec, mu):
        _, expected = _srw_constants(spec, _metric_scale(spec, config))
        out.findings.append(_close("closed_form_variance", sigma2, expected, 1e-3 * max(1.0, expected),
                                   "σ² pela cadeia de distância"))

    if solution is not None:
        h = boundary_point(spec, (), generators(spec)[0].word)
        martingale = martingale_check(
            spec, mu, solution.u, samples.drift, h,
            min(config.trajectories, MARTINGALE_TRAJECTORIES), MARTINGALE_STEPS, config.seed,
            metric if metric is not None else 1.0,
            stats.martingale_se_threshold, stats.martingale_min_occupancy,
        )
        out.results["martingale"] = {"max_z": martingale.max_z, "bins": martingale.bins}
        out.findings.append(Finding(
            check="martingale",
            passed=martingale.passed,
            detail=f"médias condicionais por cilindro ≤ {stats.martingale_se_threshold} SE",
            observed=martingale.max_z,
            expected=stats.martingale_se_threshold,
        ))
        weights = metric.weights if metric is not None else np.asarray(spec.letter_length, dtype=np.float64)
        step_bound = max(float(weights[list(g.word)].sum()) for g in mu.elements)
        bound = step_bound + abs(samples.drift) + 2.0 * solution.u.sup_norm
        rows = lindeberg_check(martingale.increments, bound=bound)
        out.tables["lindeberg"] = rows
        out.findings.append(Finding(
            check="lindeberg_bound",
            passed=not any(r["bound_violated"] for r in rows),
            detail="|X_k| ≤ max|h(g)| + A + 2‖u‖∞",
            observed=float(np.abs(martingale.increments).max(initial=0.0)),
            expected=bound,
        ))
        out.tables["martingale"] = martingale.bins
    out.tables["samples"] = [{"index": i, "sample": float(s)} for i, s in enumerate(samples.samples)]
    return out


def cmd_lil(config: ExperimentConfig, settings: LabSettings) -> CommandOutput:
    spec, mu = _context(config, settings)
    stats = settings.statistics
    if not spec.is_hyperbolic:
        raise CapabilityError("lil requer grupo hiperbólico (drift linear positivo)", {"group": spec.name})
    metric = resolve_metric(spec, mu, config.metric)
    out = CommandOutput()
    if spec.kind is GroupKind.FREE:
        m = max(config.depth, mu.max_length)
        nu, A, _, variance = _tree_pipeline(spec, mu, metric, m, settings)
        sigma = math.sqrt(variance.sigma_squared)
        out.provenance["sigma"] = "fórmula"
        if not nu.exact:
            out.provenance["stationary"] = APPROXIMATE_STATIONARY
    else:
        block = clt_samples(spec, mu, config.n, max(config.trajectories, 100), config.seed + 1,
                            metric=metric, threads=config.threads)
        A, sigma = block.drift, math.sqrt(block.variance)
        out.provenance["sigma"] = "bloco independente"
    trace = lil_trace(
        spec, mu, config.n, config.seed, sigma, A, metric,
        seeds=config.trajectories, envelope=stats.lil_envelope,
        divergence_sigmas=stats.divergence_sigmas, threads=config.threads,
    )
    top_sqrt2 = float(trace.running_max_sqrt2[:, -1].max())
    out.results.update({
        "drift": A,
        "sigma": sigma,
        "envelope": list(trace.envelope),
        "running_max_sqrt2": top_sqrt2,
        "running_max_plain": float(trace.running_max_plain[:, -1].max()),
        "checkpoints": trace.checkpoints,
    })
    out.findings.append(Finding(
        check="lil_envelope",
        passed=trace.within_envelope,
        detail="máximo corrido sob √(2n log log n) no envelope",
        observed=top_sqrt2,
        expected=sigma,
    ))
    out.findings.append(Finding(
        check="lil_divergence",
        passed=not trace.diverging,
        detail=f"|estatística final| ≤ {stats.divergence_sigmas}σ",
    ))
    out.tables["lil"] = trace.rows()
    return out


def cmd_lamplighter(config: ExperimentConfig, settings: LabSettings) -> CommandOutput:
    spec, mu = _context(config, settings)
    start = max(10, config.n // 100)
    grid = sorted({int(v) for v in np.rint(np.geomspace(start, config.n, 5))})
    fit = lamplighter_exponent(spec, mu, grid, config.trajectories, config.seed, config.threads)
    out = CommandOutput(results={"slope": fit.slope, "intercept": fit.intercept,
                                 "n_grid": fit.n_grid, "means": fit.means})
    out.tables["exponent"] = [{"n": n, "mean": d} for n, d in zip(fit.n_grid, fit.means)]
    if spec.kind is GroupKind.LAMPLIGHTER and _is_uniform(spec, mu):
        out.findings.append(Finding(
            check="lamplighter_exponent",
            passed=0.65 <= fit.slope <= 0.85,
            detail="inclinação log-log em [0.65, 0.85]",
            observed=fit.slope,
            expected=0.75,
        ))
    elif spec.kind is GroupKind.LAMPLIGHTER and all(not g.lamps for g in mu.elements):
        out.findings.append(_close("projected_walk_exponent", fit.slope, 0.5, 0.1, "passeio só em ℤ: √n"))
    else:
        out.findings.append(_report_only("growth_exponent", fit.slope, "inclinação log-log"))
    return out


def _is_uniform(spec: GroupSpec, mu: StepDistribution) -> bool:
    return mu.as_dict() == uniform_generators(spec).as_dict()


def cmd_delta(config: ExperimentConfig, settings: LabSettings) -> CommandOutput:
    spec, mu = _context(config, settings)
    numerics = settings.numerics
    points = ball_list(spec, config.radius, numerics.lamplighter_ball_limit, numerics.ball_enumeration_cap)
    out = CommandOutput()
    if config.metric == "word":
        distance = word_distance(spec)
    elif spec.kind is GroupKind.FREE:
        distance = green_letter_metric(spec, mu).distance
    else:
        table = green_kernel(spec, mu, config.truncation, 2 * config.radius, numerics.green_tolerance,
                             numerics.support_cap)

        def distance(x, y):
            return green_metric(table, x, y)

    delta = estimate_delta(spec, distance, points, DELTA_SAMPLE_CAP, config.seed)
    out.results.update({"delta": delta, "points": len(points), "sampled": min(len(points), DELTA_SAMPLE_CAP)})
    if spec.kind is GroupKind.FREE:
        tolerance = 0.0 if config.metric == "word" else config.tolerance
        out.findings.append(_close("tree_delta", delta, 0.0, tolerance, "árvores são 0-hiperbólicas"))
    else:
        out.findings.append(_report_only("delta", delta, f"δ̂ em {spec.name}"))
    return out


def cmd_selftest(config: ExperimentConfig, settings: LabSettings) -> CommandOutput:
    findings = run_selftest()
    return CommandOutput(
        results={"checks": len(findings), "failed": sum(not f.passed for f in findings)},
        findings=findings,
    )


HANDLERS: Dict[str, Callable[[ExperimentConfig, LabSettings], CommandOutput]] = {
    "green": cmd_green,
    "hilbert": cmd_hilbert,
    "boundary": cmd_boundary,
    "drift": cmd_drift,
    "clt": cmd_clt,
    "lil": cmd_lil,
    "lamplighter": cmd_lamplighter,
    "delta": cmd_delta,
    "selftest": cmd_selftest,
}


# ============================================================================
# Execução
# ============================================================================

def _emit_error(error: LabError) -> int:
    print(json.dumps(error.to_dict(), sort_keys=True, ensure_ascii=False, default=str), file=sys.stderr)
    return error.exit_code


def run(
    command: str,
    config: ExperimentConfig,
    settings: Optional[LabSettings] = None,
    console: Optional[Console] = None,
) -> int:
    """
    Executa um comando, grava os artefatos e devolve o código de saída.

    0 quando todas as verificações passam, 2 quando alguma falha; erros do
    laboratório saem com o próprio código e o diagnóstico JSON em stderr.
    """
    settings = settings or load_settings()
    try:
        logger.info(f"Executando '{command}' com {config.model_dump_json()}")
        output = HANDLERS[command](config, settings)
        provenance = {"lab_version": __version__, "numpy": np.__version__, **output.provenance}
        report = build_report(config, output.results, output.findings, provenance)
        write_artifacts(report, output.tables)
    except LabError as e:
        logger.error(f"{type(e).__name__}: {e.message}")
        return _emit_error(e)
    render_summary(report, console)
    return 0 if report.passed else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperbolic-lab",
        description="Passeios aleatórios em grupos hiperbólicos: Green, fronteira e teoremas limite",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--group", help="free:k | freeprod:p,q,... | zwrz")
    parser.add_argument("--measure", help="uniform-generators, preset ou 'a:3/8,a-:3/8,...'")
    parser.add_argument("--metric", choices=("word", "green"))
    parser.add_argument("--n", type=int)
    parser.add_argument("--trajectories", type=int)
    parser.add_argument("--depth", type=int)
    parser.add_argument("--truncation", type=int)
    parser.add_argument("--radius", type=int)
    parser.add_argument("--tolerance", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--threads", type=int)
    parser.add_argument("--out", help="diretório dos artefatos (padrão: results)")
    parser.add_argument("--format", choices=("json", "csv"))
    parser.add_argument("--config", help="JSON com os mesmos campos das flags")
    parser.add_argument("--settings", default=DEFAULT_SETTINGS_PATH, help="YAML de configurações do laboratório")
    parser.add_argument("--log-level", default="WARNING")
    parser.add_argument("--log-file", type=Path)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Ponto de entrada da CLI; devolve o código de saída."""
    args = build_parser().parse_args(argv)
    setup_logging(level=args.log_level, log_file=args.log_file)
    try:
        settings = load_settings(args.settings)
        overrides = {name: getattr(args, name) for name in CONFIG_FIELDS}
        config = build_config(args.command, overrides, args.config, settings)
    except LabError as e:
        return _emit_error(e)
    return run(args.command, config, settings)


if __name__ == "__main__":
    sys.exit(main())
