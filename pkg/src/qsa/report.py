"""Structured key-value reports with stable field names."""
from __future__ import annotations

import hashlib
import json
from fractions import Fraction

import numpy as np

from .deffile import dump_definition
from .schemes import AdversaryStructure, ProtocolSpec


class Report:
    """Ordered fields; ``kv`` output is meant to be diffed, ``text`` to be read."""

    def __init__(self, command: str):
        self.fields: list[tuple[str, str]] = [("command", command)]
        self.flags: set[str] = set()

    def add(self, key: str, value) -> None:
        self.fields.append((key, render_value(value)))

    def get(self, key: str) -> str:
        for k, v in self.fields:
            if k == key:
                return v
        raise KeyError(key)

    def render(self, fmt: str = "text") -> str:
        if fmt == "kv":
            return "\n".join(f"{k}={v}" for k, v in self.fields) + "\n"
        width = max(len(k) for k, _ in self.fields)
        return "\n".join(f"{k.ljust(width)}  {v}" for k, v in self.fields) + "\n"


def render_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    if isinstance(value, AdversaryStructure):
        return structure_text(value)
    if isinstance(value, np.ndarray):
        return matrix_text(value)
    if isinstance(value, (list, tuple, dict)):
        return json.dumps(value, default=str, separators=(",", ":"))
    return str(value)


def subset_text(a) -> str:
    return "{" + ",".join(map(str, sorted(a))) + "}"


def structure_text(f: AdversaryStructure) -> str:
    return "{" + ",".join(subset_text(a) for a in f) + "}"


def exact_entry(x: complex, tol: float = 1e-10) -> str:
    """Small rationals print exactly; anything else as a float."""
    parts = []
    for v, suffix in ((x.real, ""), (x.imag, "j")):
        if abs(v) <= tol:
            continue
        q = Fraction(v).limit_denominator(64)
        parts.append((str(q) if abs(float(q) - v) <= tol else f"{v:.12g}") + suffix)
    if not parts:
        return "0"
    if len(parts) == 2 and not parts[1].startswith("-"):
        parts[1] = "+" + parts[1]
    return "".join(parts)


def matrix_text(m: np.ndarray) -> str:
    return "[" + ";".join(",".join(exact_entry(complex(x)) for x in row) for row in np.asarray(m)) + "]"


def definition_hash(obj) -> str:
    return hashlib.sha256(dump_definition(obj).encode()).hexdigest()[:16]


def identity_fields(report: Report, obj) -> None:
    kind = "protocol" if isinstance(obj, ProtocolSpec) else "scheme"
    report.add("name", obj.name)
    report.add("kind", kind)
    report.add("hash", definition_hash(obj))
    report.add("parties", obj.n)
    labels = obj.inputs if isinstance(obj, ProtocolSpec) else obj.secrets
    report.add("inputs" if kind == "protocol" else "secrets", len(labels))
    report.add("randomness", len(obj.randomness))
