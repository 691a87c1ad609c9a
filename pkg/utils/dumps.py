"""
Output writers shared by the engines and the command line.
- matrix CSV: header `# dim=<n> ring=<exact|float> basis=<tag> L=<L>`, then row_index,col_index,value
- JSON files are written with sorted keys so reruns are byte-identical
"""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Iterable, List, Mapping, Sequence, Tuple, Union

from scipy import sparse

PathLike = Union[str, Path]


def _prepare(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def matrix_header(dim: int, ring: str, basis: str, L: int) -> str:
    return f"# dim={dim} ring={ring} basis={basis} L={L}"


def write_matrix_csv(path: PathLike, entries: Iterable[Tuple[int, int, str]], dim: int, ring: str, basis: str,
                     L: int) -> Path:
    """entries are (row, col, value text), written in the order given."""
    path = _prepare(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(matrix_header(dim, ring, basis, L) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row_index", "col_index", "value"])
        for i, j, v in entries:
            w.writerow([i, j, v])
    return path


def exact_entries(op) -> List[Tuple[int, int, str]]:
    return [(i, j, v.to_text()) for i, j, v in op.entries()]


def float_entries(mat: sparse.spmatrix) -> List[Tuple[int, int, str]]:
    coo = sparse.coo_matrix(mat)
    order = sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))
    return [(i, j, repr(float(v))) for i, j, v in order if v != 0.0]


def read_matrix_csv(path: PathLike) -> Tuple[Mapping[str, str], List[Tuple[int, int, str]]]:
    """Header fields and entries of a matrix dump."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("# "):
        raise ValueError(f"{path} has no matrix header")
    header = dict(part.split("=", 1) for part in lines[0][2:].split())
    rows = list(csv.reader(lines[1:]))
    return header, [(int(r[0]), int(r[1]), r[2]) for r in rows[1:]]


def write_json(path: PathLike, payload: Any) -> Path:
    path = _prepare(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def sidecar_path(path: PathLike) -> Path:
    path = Path(path)
    return path.with_suffix(".json")


def write_trajectory_csv(path: PathLike, events: Sequence[Tuple[float, int, int, int]]) -> Path:
    path = _prepare(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "site", "from_state", "to_state"])
        for t, site, a, b in events:
            w.writerow([repr(float(t)), site, a, b])
    return path
