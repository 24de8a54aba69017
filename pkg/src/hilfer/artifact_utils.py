import csv
import enum
import hashlib
import json
import os
from pathlib import Path
from typing import Any, List, Optional, Tuple

import click
import numpy as np

try:
    from .errors import ParseError
    from .fracops import Grid, Trajectory
except ImportError:
    from errors import ParseError
    from fracops import Grid, Trajectory

FLOAT_FORMAT = ".17g"


def _determine_runs_root() -> Path:
    override = os.getenv('HILFER_RUNS_ROOT')
    if override:
        return Path(override).expanduser()
    return Path(os.getcwd()) / '.hilfer_runs'

RUNS_ROOT = _determine_runs_root()


def run_dir(command: str, out: Optional[str] = None) -> Path:
    """Return the output directory of a command, creating it; ``out`` wins over RUNS_ROOT/<command>."""
    path = Path(out).expanduser() if out else RUNS_ROOT / command
    path.mkdir(parents=True, exist_ok=True)
    return path


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    return str(value)


def signature_for_json(document: Any) -> str:
    """Return a deterministic SHA256 signature for JSON-serialisable data."""
    payload = json.dumps(document, default=_json_default, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def save_json_document(directory: Path, name: str, document: Any) -> Path:
    """Write ``document`` as <directory>/<name>.json with sorted keys."""
    path = Path(directory) / f"{name}.json"
    with path.open("w", encoding="utf-8") as handle:
        json.dump(document, handle, indent=2, sort_keys=True, ensure_ascii=False, default=_json_default)
        handle.write("\n")
    click.echo(f"[Info]: save_json_document - path: {path}", err=True)
    return path


def load_json_document(path: Path) -> Optional[Any]:
    """Load a JSON document if present and well formed."""
    path = Path(path)
    if not path.exists():
        return None
    try:
        with path.open("r", encoding="utf-8") as handle:
            return json.load(handle)
    except json.JSONDecodeError:
        return None


def _fmt(value: float) -> str:
    return format(float(value), FLOAT_FORMAT)


def write_trajectory_csv(path: Path, traj: Trajectory) -> Path:
    """Columns t, weight, xw_1..xw_d, x_1..x_d; x is left empty at t0 when gamma < 1."""
    dim = traj.dim
    header = ["t", "weight"] + [f"xw_{i + 1}" for i in range(dim)] + [f"x_{i + 1}" for i in range(dim)]
    unweighted = traj.unweighted()
    weights = traj.weights
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for j, t in enumerate(traj.grid.nodes):
            row = [_fmt(t), _fmt(weights[j])] + [_fmt(x) for x in traj.weighted_values[j]]
            if np.all(np.isfinite(unweighted[j])):
                row += [_fmt(x) for x in unweighted[j]]
            else:
                row += [""] * dim
            writer.writerow(row)
    click.echo(f"[Info]: write_trajectory_csv - path: {path}", err=True)
    return path


def write_samples_csv(path: Path, grid: Grid, values: np.ndarray, prefix: str = "f") -> Path:
    values = np.asarray(values, dtype=float)
    header = ["t"] + [f"{prefix}_{i + 1}" for i in range(values.shape[1])]
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for t, row in zip(grid.nodes, values):
            writer.writerow([_fmt(t)] + [_fmt(x) for x in row])
    click.echo(f"[Info]: write_samples_csv - path: {path}", err=True)
    return path


def read_samples_csv(path: Path) -> Tuple[List[float], np.ndarray]:
    """Read a ``t,f_1..f_d`` CSV; blank lines and '#' comments are skipped."""
    path = Path(path)
    if not path.exists():
        raise ParseError(f"No se encontró el archivo de muestras: {path}", path=str(path))
    times: List[float] = []
    rows: List[List[float]] = []
    with path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header_seen = False
        for line_number, row in enumerate(reader, start=1):
            if not row or not row[0].strip() or row[0].lstrip().startswith("#"):
                continue
            if not header_seen:
                header_seen = True
                if row[0].strip().lower() == "t":
                    continue
            try:
                numbers = [float(cell) for cell in row]
            except ValueError as exc:
                raise ParseError(str(exc), path=str(path), line=line_number) from exc
            if len(numbers) < 2 or (rows and len(numbers) - 1 != len(rows[0])):
                raise ParseError("each row needs t and the same number of values", path=str(path), line=line_number)
            times.append(numbers[0])
            rows.append(numbers[1:])
    if len(rows) < 3:
        raise ParseError("at least 3 sample rows are required", path=str(path))
    return times, np.asarray(rows, dtype=float)
