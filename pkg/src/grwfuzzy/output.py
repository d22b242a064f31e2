"""Result files: run manifests, JSON/CSV summaries and JSON-lines event logs.

JSON output has the layout ``{"schema_version", "manifest", "result"}`` and
is written with sorted keys, so identical inputs give identical bytes.
Non-finite floats become the strings ``"inf"``, ``"-inf"`` and ``"nan"``.

CSV output starts with one ``# manifest: {...}`` comment line followed by a
fixed header. The tables are:

* counting rows: ``n, a_sq, p, joint_mass, weak, strong``
* lattice snapshot: ``x, re, im, density``
* Monte Carlo trials: ``trial, manifestation_events, pointer_agreement``
  followed by the scenario's metric names in sorted order
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .config import config_sections, parse_config
from .dynamics import HitRecord
from .lattice import LatticeWavefunction
from .rng import RNG_ID
from .scenarios import MonteCarloSummary, ScenarioConfig
from .semantics import AnomalyReport

SCHEMA_VERSION = 1
COUNTING_COLUMNS = ("n", "a_sq", "p", "joint_mass", "weak", "strong")
LATTICE_COLUMNS = ("x", "re", "im", "density")
TRIAL_COLUMNS = ("trial", "manifestation_events", "pointer_agreement")


def _version() -> str:
    from . import __version__

    return __version__


def utc_now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="microseconds")


@dataclass
class RunManifest:
    scenario: str
    config: ScenarioConfig
    seed: int
    tool_version: str = field(default_factory=_version)
    rng: str = RNG_ID
    started: str = field(default_factory=utc_now)
    finished: str | None = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def start(cls, scenario: str, config: ScenarioConfig, **extra) -> "RunManifest":
        return cls(scenario, config, config.seed, extra=extra)

    def finish(self) -> "RunManifest":
        self.finished = utc_now()
        return self

    def to_dict(self) -> dict:
        d = {
            "scenario": self.scenario,
            "config": config_sections(self.config),
            "seed": self.seed,
            "tool_version": self.tool_version,
            "rng": self.rng,
            "started": self.started,
            "finished": self.finished,
        }
        if self.extra:
            d["extra"] = self.extra
        return d


def config_from_manifest(manifest: dict) -> ScenarioConfig:
    """Rebuild the exact config recorded in a manifest dict."""
    overrides = {f"{sec}.{k}": v for sec, items in manifest["config"].items() for k, v in items.items()}
    return parse_config(overrides=overrides)


def to_jsonable(obj):
    """Plain JSON types; non-finite floats become strings."""
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [to_jsonable(v) for v in obj]
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def counting_row(report: AnomalyReport, n: int, a_sq: float, p: float) -> dict:
    return {
        "n": n,
        "a_sq": a_sq,
        "p": p,
        "joint_mass": report.joint_mass,
        "weak": report.weak_anomaly,
        "strong": report.strong_anomaly,
    }


def _result_payload(result, include_logs: bool):
    if isinstance(result, MonteCarloSummary):
        return result.to_dict(include_logs=include_logs)
    if isinstance(result, LatticeWavefunction):
        return {
            "dx": result.dx,
            "origin": result.origin,
            "log_amp": result.log_amp,
            "phase": result.phase,
        }
    return result


def render_json(result, manifest: RunManifest | dict, include_logs: bool = False) -> str:
    m = manifest.to_dict() if isinstance(manifest, RunManifest) else manifest
    doc = {
        "schema_version": SCHEMA_VERSION,
        "manifest": to_jsonable(m),
        "result": to_jsonable(_result_payload(result, include_logs)),
    }
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _csv_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def _table(result) -> tuple[tuple[str, ...], list[list]]:
    if isinstance(result, LatticeWavefunction):
        psi = result.to_complex()
        rows = [[x, z.real, z.imag, d] for x, z, d in zip(result.x, psi, result.density())]
        return LATTICE_COLUMNS, rows
    if isinstance(result, MonteCarloSummary):
        keys = sorted({k for r in result.results for k in r.metrics})
        cols = TRIAL_COLUMNS + tuple(keys)
        rows = [
            [k, r.manifestation_events, r.pointer_agreement] + [r.metrics.get(m) for m in keys]
            for k, r in enumerate(result.results)
        ]
        return cols, rows
    if isinstance(result, dict) and "rows" in result:
        return COUNTING_COLUMNS, [[row[c] for c in COUNTING_COLUMNS] for row in result["rows"]]
    if isinstance(result, list) and all(isinstance(r, dict) for r in result):
        return COUNTING_COLUMNS, [[row[c] for c in COUNTING_COLUMNS] for row in result]
    if isinstance(result, dict) and set(COUNTING_COLUMNS) <= set(result):
        return COUNTING_COLUMNS, [[result[c] for c in COUNTING_COLUMNS]]
    raise TypeError(f"no CSV layout for {type(result).__name__}")


def render_csv(result, manifest: RunManifest | dict) -> str:
    m = manifest.to_dict() if isinstance(manifest, RunManifest) else manifest
    cols, rows = _table(result)
    buf = io.StringIO()
    buf.write("# manifest: " + json.dumps(to_jsonable(m), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([_csv_cell(v) for v in row])
    return buf.getvalue()


def _write_text(path, text: str):
    p = Path(path)
    try:
        with p.open("w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {p}: {exc.strerror or exc}") from exc


def emit_results(result, manifest: RunManifest | dict, fmt: str = "json", path=None, include_logs: bool = False) -> str:
    """Render ``result`` and write it to ``path`` if given; returns the text."""
    if fmt == "json":
        text = render_json(result, manifest, include_logs)
    elif fmt == "csv":
        text = render_csv(result, manifest)
    else:
        raise ValueError(f"unknown format {fmt!r}; expected json or csv")
    if path is not None:
        _write_text(path, text)
    return text


def event_log_lines(summary: MonteCarloSummary, manifest: RunManifest | dict) -> str:
    """One header line with the manifest, then one line per hit."""
    m = manifest.to_dict() if isinstance(manifest, RunManifest) else manifest
    lines = [json.dumps({"schema_version": SCHEMA_VERSION, "manifest": to_jsonable(m)}, sort_keys=True)]
    for k, res in enumerate(summary.results):
        for rec in res.event_log:
            lines.append(json.dumps(to_jsonable({"trial": k, "rng": RNG_ID, **rec.to_dict()}), sort_keys=True))
    return "\n".join(lines) + "\n"


def write_event_log(summary: MonteCarloSummary, manifest, path) -> None:
    _write_text(path, event_log_lines(summary, manifest))


def read_event_log(path) -> tuple[dict, list[tuple[int, HitRecord]]]:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read {p}: {exc.strerror or exc}") from exc
    lines = text.splitlines()
    header = json.loads(lines[0])
    records = []
    for line in lines[1:]:
        d = json.loads(line)
        trial = d.pop("trial")
        d.pop("rng", None)
        records.append((trial, HitRecord(**d)))
    return header["manifest"], records
