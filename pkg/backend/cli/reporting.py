"""
Report emission: pandas CSV tables and sorted-key JSON documents.

Every file carries the same run metadata (config hash, truncation, log base,
tie rule) so reruns with the same config and seed are byte-identical.
"""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

import pandas as pd
from loguru import logger

from backend.cli.experiment import ExperimentConfig
from backend.components.audit.reports import render
from backend.components.distributions.majority import TIE_RULE
from backend.core.settings import settings


def config_hash(config: ExperimentConfig) -> str:
    """sha256 of the canonical JSON of the config."""
    canonical = json.dumps(config.canonical(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def run_metadata(config: ExperimentConfig, truncation: Optional[int] = None) -> Dict[str, Any]:
    return {
        "config_hash": config_hash(config),
        "truncation": config.truncation if truncation is None else truncation,
        "log_base": settings.log_base,
        "tie_rule": TIE_RULE,
        "seed": config.seed,
    }


class ReportWriter:
    """Writes the files of one pipeline run under ``directory``."""

    def __init__(self, directory: Path, metadata: Mapping[str, Any], prefix: Optional[str] = None):
        self.directory = Path(directory)
        self.metadata = dict(metadata)
        self.prefix = prefix
        self.written: List[Path] = []

    def _path(self, name: str) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        return self.directory / (f"{self.prefix}_{name}" if self.prefix else name)

    def csv(self, name: str, records: Sequence[Mapping[str, Any]], columns: Optional[Sequence[str]] = None) -> Path:
        path = self._path(name)
        frame = pd.DataFrame([{k: render(v) for k, v in r.items()} for r in records], columns=columns)
        for key, value in self.metadata.items():
            frame[key] = value
        frame.to_csv(path, index=False, lineterminator="\n")
        self.written.append(path)
        logger.info(f"Wrote {len(frame)} rows to {path}")
        return path

    def json(self, name: str, payload: Mapping[str, Any]) -> Path:
        path = self._path(name)
        document = {"meta": self.metadata, **render(dict(payload))}
        path.write_text(json.dumps(document, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        self.written.append(path)
        logger.info(f"Wrote {path}")
        return path


def dumps(payload: Any) -> str:
    """Sorted-key JSON for stdout."""
    return json.dumps(render(payload), sort_keys=True, indent=2)
