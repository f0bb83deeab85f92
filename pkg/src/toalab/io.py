"""Serialization helpers: complex matrices as [re, im] pairs, CSV artifacts.

CSV cells use Python's shortest round-trip float representation, so identical
inputs produce bit-identical files.
"""

import json
from pathlib import Path

import numpy as np

from .errors import ValidationError


def complex_to_pairs(m: np.ndarray) -> list:
    """Encode a complex array as nested [re, im] pairs, row-major."""
    a = np.asarray(m, dtype=complex)
    if a.ndim == 1:
        return [[float(z.real), float(z.imag)] for z in a]
    return [complex_to_pairs(row) for row in a]


def pairs_to_complex(obj, name: str = "matrix") -> np.ndarray:
    try:
        a = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{name}: expected nested [re, im] pairs: {exc}") from None
    if a.ndim < 2 or a.shape[-1] != 2:
        raise ValidationError(f"{name}: complex entries must be [re, im] pairs, got shape {a.shape}")
    return a[..., 0] + 1j * a[..., 1]


def format_float(x: float) -> str:
    return repr(float(x))


def write_csv(path, header: list[str], columns: list[np.ndarray]) -> None:
    n = len(columns[0])
    if any(len(c) != n for c in columns):
        raise ValidationError("CSV columns must have equal length")
    lines = [",".join(header)]
    for i in range(n):
        lines.append(",".join(format_float(c[i]) for c in columns))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path) -> tuple[list[str], np.ndarray]:
    text = Path(path).read_text().strip().splitlines()
    if not text:
        raise ValidationError(f"{path}: empty CSV")
    header = text[0].split(",")
    data = np.array([[float(v) for v in line.split(",")] for line in text[1:]])
    if data.ndim != 2 or data.shape[1] != len(header):
        raise ValidationError(f"{path}: malformed CSV body")
    return header, data


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())
