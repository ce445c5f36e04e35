"""
Testes Unitários - Relatórios JSON/CSV
"""

import json
import math
import tempfile
from pathlib import Path

import numpy as np
from rich.console import Console

from src.models import ExperimentConfig, Finding
from src.reporting import (
    build_report,
    render_summary,
    report_digest,
    report_json,
    to_jsonable,
    write_artifacts,
)


def _report(fmt="json", out=None):
    config = ExperimentConfig(command="drift", n=200, trajectories=10, format=fmt, out=out)
    findings = [Finding(check="drift_agreement", passed=True, observed=0.5, expected=0.5)]
    return build_report(config, {"drift": np.float64(0.5), "trace": np.arange(3)}, findings)


class TestJsonable:
    """Testes para a conversão para JSON estrito."""

    def test_numpy_values(self):
        """Testa escalares e vetores numpy."""
        data = to_jsonable({"x": np.int64(3), "v": np.array([1.0, 2.0])})
        assert data == {"x": 3, "v": [1.0, 2.0]}
        assert isinstance(data["x"], int)

    def test_non_finite(self):
        """Testa inf, −inf e nan como texto."""
        assert to_jsonable([math.inf, -math.inf, math.nan]) == ["inf", "-inf", "nan"]

    def test_tuple_keys_and_nesting(self):
        """Testa chaves numéricas e tuplas aninhadas."""
        assert to_jsonable({1: (np.float32(0.5),)}) == {"1": [0.5]}


class TestReport:
    """Testes para o envelope e a reprodutibilidade."""

    def test_build_report(self):
        """Testa comando, versão e resultados convertidos."""
        report = _report()
        assert report.command == "drift"
        assert report.results["trace"] == [0, 1, 2]
        assert report.passed

    def test_digest_ignores_timestamp(self):
        """Testa que só o timestamp difere entre execuções iguais."""
        first = _report()
        second = first.model_copy(update={"timestamp": "2000-01-01T00:00:00+00:00"})
        assert report_digest(first) == report_digest(second)
        assert report_json(first) != report_json(second)

    def test_digest_changes_with_results(self):
        """Testa digest sensível aos resultados."""
        first = _report()
        second = first.model_copy(update={"results": {"drift": 0.51}})
        assert report_digest(first) != report_digest(second)

    def test_sorted_keys(self):
        """Testa JSON com chaves ordenadas e sem timestamp quando pedido."""
        data = json.loads(report_json(_report(), include_timestamp=False))
        assert "timestamp" not in data
        assert list(data) == sorted(data)


class TestArtifacts:
    """Testes para a gravação de artefatos."""

    def test_json_only(self):
        """Testa format = json: só o relatório, mesmo com tabelas."""
        with tempfile.TemporaryDirectory() as tmp:
            written = write_artifacts(_report("json", tmp), {"trace": [{"k": 1, "value": 1.0}]})
            assert [p.name for p in written] == ["drift_report.json"]
            data = json.loads(Path(tmp, "drift_report.json").read_text(encoding="utf-8"))
            assert data["config"]["n"] == 200

    def test_csv_tables(self):
        """Testa format = csv: uma tabela por entrada."""
        with tempfile.TemporaryDirectory() as tmp:
            rows = [{"k": 1, "value": 1.0}, {"k": 2, "value": math.inf}]
            written = write_artifacts(_report("csv", tmp), {"trace": rows})
            assert [p.name for p in written] == ["drift_report.json", "drift_trace.csv"]
            lines = Path(tmp, "drift_trace.csv").read_text(encoding="utf-8").splitlines()
            assert lines == ["k,value", "1,1.0", "2,inf"]

    def test_out_dir_argument(self):
        """Testa diretório explícito sobre config.out."""
        with tempfile.TemporaryDirectory() as tmp:
            target = Path(tmp) / "nested"
            written = write_artifacts(_report(), out_dir=str(target))
            assert written[0].parent == target

    def test_render_summary(self):
        """Testa o painel no terminal."""
        console = Console(record=True, width=160)
        render_summary(_report(), console)
        text = console.export_text()
        assert "drift_agreement" in text
        assert "digest" in text
