"""
Módulo de Relatórios - Emissão de artefatos JSON/CSV e resumo no terminal

Todo comando produz um ExperimentReport (config efetiva + resultados +
verificações). O JSON é serializado com chaves ordenadas, então a mesma
configuração e semente geram bytes idênticos fora do campo `timestamp`.
"""

import csv
import hashlib
import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from . import __version__
from .logger import get_logger
from .models import ExperimentConfig, ExperimentReport, Finding

logger = get_logger(__name__)

DEFAULT_OUT_DIR = "results"


def to_jsonable(value: Any) -> Any:
    """Converte tipos numpy e não finitos para JSON estrito."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return "inf" if value > 0 else ("-inf" if value < 0 else "nan")
    return value


def build_report(
    config: ExperimentConfig,
    results: Dict[str, Any],
    findings: Sequence[Finding],
    provenance: Optional[Dict[str, str]] = None,
) -> ExperimentReport:
    return ExperimentReport(
        command=config.command,
        config=config,
        results=to_jsonable(results),
        findings=list(findings),
        provenance=dict(provenance or {}),
        lab_version=__version__,
        timestamp=datetime.now(timezone.utc).isoformat(),
    )


def report_json(report: ExperimentReport, include_timestamp: bool = True) -> str:
    """JSON canônico (chaves ordenadas, indentação 2)."""
    data = report.model_dump(mode="json")
    if not include_timestamp:
        data.pop("timestamp", None)
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False)


def report_digest(report: ExperimentReport) -> str:
    """SHA-256 do relatório sem o timestamp (comparação de reprodutibilidade)."""
    return hashlib.sha256(report_json(report, include_timestamp=False).encode("utf-8")).hexdigest()


def write_csv(path: Path, rows: Sequence[Mapping[str, Any]]) -> None:
    """Tabela como CSV; colunas na ordem da primeira linha."""
    rows = list(rows)
    fields: List[str] = list(rows[0].keys()) if rows else []
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow(to_jsonable(dict(row)))


def write_artifacts(
    report: ExperimentReport,
    tables: Optional[Dict[str, Sequence[Mapping[str, Any]]]] = None,
    out_dir: Optional[str] = None,
) -> List[Path]:
    """
    Grava <comando>_report.json e, com format = csv, uma tabela por
    entrada de `tables` (<comando>_<nome>.csv).
    """
    directory = Path(out_dir or report.config.out or DEFAULT_OUT_DIR)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    path = directory / f"{report.command}_report.json"
    path.write_text(report_json(report) + "\n", encoding="utf-8")
    written.append(path)
    if report.config.format == "csv":
        for name, rows in (tables or {}).items():
            table_path = directory / f"{report.command}_{name}.csv"
            write_csv(table_path, rows)
            written.append(table_path)
    logger.info(f"Artefatos gravados em {directory}: {[p.name for p in written]}")
    return written


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return "-"
    return f"{value:.6g}"


def render_summary(report: ExperimentReport, console: Optional[Console] = None) -> None:
    """Painel com a configuração e tabela de verificações."""
    console = console or Console()
    cfg = report.config
    status = "[bold green]OK[/bold green]" if report.passed else "[bold red]FALHOU[/bold red]"
    console.print(
        Panel.fit(
            f"[bold cyan]{report.command}[/bold cyan] em {cfg.group} · medida {cfg.measure} · "
            f"métrica {cfg.metric} · semente {cfg.seed}\n"
            f"[dim]Resultado: {status}[/dim]",
            border_style="cyan",
        )
    )
    table = Table(show_header=True, header_style="bold magenta")
    table.add_column("Verificação", style="cyan")
    table.add_column("Status")
    table.add_column("Observado", justify="right")
    table.add_column("Esperado", justify="right")
    table.add_column("Detalhe", style="dim")
    for finding in report.findings:
        table.add_row(
            finding.check,
            "[green]✓[/green]" if finding.passed else "[red]✗[/red]",
            _fmt(finding.observed),
            _fmt(finding.expected),
            finding.detail,
        )
    console.print(table)
    console.print(f"[dim]digest {report_digest(report)[:16]}[/dim]")
