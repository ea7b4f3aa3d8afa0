"""
File formats

Matrices are UTF-8 text, one row per line, comma-separated decimals, no
header. Packing sets and reports are JSON. Every write goes through a
temporary file in the target directory followed by an atomic rename.
"""

import json
import logging
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np

from .errors import InputError, MatrixParseError
from .linalg import DenseMatrix
from .packing import PackingSet

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def parse_matrix_text(text: str) -> DenseMatrix:
    """Parse matrix text; errors carry the 1-based line number."""
    rows: List[List[float]] = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            continue
        row = []
        for cell in line.split(","):
            cell = cell.strip()
            try:
                value = float(cell)
            except ValueError:
                raise MatrixParseError(f"not a decimal number: {cell!r}", line=lineno) from None
            if not math.isfinite(value):
                raise MatrixParseError(f"non-finite entry {cell!r}", line=lineno)
            row.append(value)
        if rows and len(row) != len(rows[0]):
            raise MatrixParseError(f"expected {len(rows[0])} columns, found {len(row)}", line=lineno)
        rows.append(row)
    if not rows:
        raise MatrixParseError("matrix file is empty")
    return DenseMatrix(np.array(rows, dtype=float))


def read_matrix_csv(path: PathLike) -> DenseMatrix:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise InputError(f"cannot read matrix {path}: {e}") from e
    matrix = parse_matrix_text(text)
    logger.debug("read %dx%d matrix from %s", matrix.rows, matrix.cols, path)
    return matrix


def format_matrix(a: DenseMatrix) -> str:
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in a.array)


def atomic_write_text(path: PathLike, text: str) -> None:
    """Write ``text`` so readers see either the old file or the complete new one."""
    target = Path(path)
    directory = target.parent if str(target.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_matrix_csv(path: PathLike, a: DenseMatrix) -> None:
    atomic_write_text(path, format_matrix(a))


def dumps_json(data: Dict[str, Any]) -> str:
    """Deterministic JSON with a trailing newline."""
    return json.dumps(data, indent=2, allow_nan=False) + "\n"


def save_packing(path: PathLike, packing: PackingSet) -> None:
    atomic_write_text(path, packing.to_json())


def load_packing(path: PathLike) -> PackingSet:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError) as e:
        raise InputError(f"cannot read packing {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise InputError(f"packing {path} is not valid JSON (line {e.lineno}): {e.msg}") from e
    if not isinstance(data, dict):
        raise InputError(f"packing {path} must hold a JSON object")
    return PackingSet.from_dict(data)
