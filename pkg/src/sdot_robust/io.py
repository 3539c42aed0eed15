"""Reading atom files and writing the JSON / CSV artifacts of the command line."""

from __future__ import annotations

import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .errors import InvalidMeasure
from .geometry import PowerDiagram
from .measures import DiscreteMeasure, ReferenceMeasure
from .sdot import SolveConfig, TransportMap, config_dict

SCHEMA_VERSION = 1


def parse_point(text: str) -> np.ndarray:
    """``"0.3,0.4"`` -> array([0.3, 0.4])."""
    try:
        return np.array([float(x) for x in text.split(",")], dtype=float)
    except ValueError as exc:
        raise ValueError(f"bad point {text!r}; expected comma-separated numbers") from exc


def parse_indices(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ValueError(f"bad index list {text!r}") from exc


def read_atoms(path) -> DiscreteMeasure:
    """Load a target from CSV (header ``x1,...,xd[,weight]``) or JSON (``atoms``, ``weights``)."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        data = json.loads(path.read_text(encoding="utf-8"))
        if "atoms" not in data:
            raise InvalidMeasure(f"{path}: JSON target needs an 'atoms' field")
        return DiscreteMeasure.from_points(np.asarray(data["atoms"], dtype=float), data.get("weights"))
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise InvalidMeasure(f"{path}: empty atom file")
    header = [h.strip() for h in rows[0]]
    coords = [k for k, h in enumerate(header) if h.startswith("x")]
    if not coords:
        raise InvalidMeasure(f"{path}: header must name coordinates x1,...,xd")
    wcol = header.index("weight") if "weight" in header else None
    try:
        body = np.array([[float(r[k]) for k in range(len(header))] for r in rows[1:]], dtype=float)
    except (ValueError, IndexError) as exc:
        raise InvalidMeasure(f"{path}: malformed row ({exc})") from exc
    if body.size == 0:
        raise InvalidMeasure(f"{path}: no atoms")
    weights = body[:, wcol] if wcol is not None else None
    return DiscreteMeasure.from_points(body[:, coords], weights)


def write_atoms(path, target: DiscreteMeasure) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{k + 1}" for k in range(target.dim)] + ["weight"])
        for x, lam in zip(target.atoms, target.weights):
            w.writerow([repr(float(v)) for v in x] + [repr(float(lam))])


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, shortest round-trip floats, trailing newline."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def map_document(tmap: TransportMap, config: dict | None = None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "reference": str(tmap.reference),
        "atoms": tmap.target.atoms,
        "weights": tmap.target.weights,
        "w": tmap.weight_vector,
        "residual": tmap.residual,
        "validation_residual": tmap.validation_residual,
        "iterations": tmap.iterations,
        "config": config if config is not None else config_dict(tmap.config),
    }


def load_map(path) -> TransportMap:
    """Rebuild a solved map from ``map.json`` without re-solving."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        reference = ReferenceMeasure.parse(data["reference"])
        target = DiscreteMeasure(np.asarray(data["atoms"], dtype=float), np.asarray(data["weights"]))
        diagram = PowerDiagram(target.atoms, np.asarray(data["w"], dtype=float), reference)
    except KeyError as exc:
        raise InvalidMeasure(f"{path}: map file lacks field {exc}") from exc
    cfg = data.get("config", {})
    fields = {k: cfg[k] for k in ("mass_tolerance", "max_iterations", "mc_budget", "seed", "validate")
              if k in cfg}
    return TransportMap(diagram, target, float(data.get("residual", 0.0)),
                        float(data.get("validation_residual", 0.0)),
                        int(data.get("iterations", 0)), SolveConfig(**fields))


def emit(text: str, out=None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")
