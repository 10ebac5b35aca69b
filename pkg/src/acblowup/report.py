"""Deterministic machine-readable reports: a JSON-compatible tree with stable
key ordering, complex numbers as [re, im] pairs, and a text renderer over the
same tree.  Reruns with identical inputs and seed produce byte-identical
output.
"""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from typing import Any

import numpy as np

from .rational import GaussianRational, RadicalComplex

TOOL_NAME = "acblowup"
TOOL_VERSION = "0.1.0"


def canonical(value: Any) -> Any:
    """Normalize a value tree into JSON-safe, deterministic form."""
    if isinstance(value, dict):
        return {str(k): canonical(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [canonical(v) for v in value]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, (np.floating,)):
        value = float(value)
    if isinstance(value, (np.integer,)):
        value = int(value)
    if isinstance(value, complex):
        return [float(value.real), float(value.imag)]
    if isinstance(value, float):
        if value != value:  # NaN
            return "nan"
        if value in (float("inf"), float("-inf")):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (GaussianRational, RadicalComplex)):
        return str(value)
    if isinstance(value, (int, str)):
        return value
    return str(value)


def new_report(seed: int | None = None) -> dict:
    rep: dict[str, Any] = {
        "tool": {"name": TOOL_NAME, "version": TOOL_VERSION},
    }
    if seed is not None:
        rep["seed"] = seed
    return rep


def digest_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def render_json(tree: dict) -> str:
    return json.dumps(canonical(tree), indent=2, ensure_ascii=True) + "\n"


def render_text(tree: dict) -> str:
    lines: list[str] = []

    def walk(node, indent):
        pad = "  " * indent
        if isinstance(node, dict):
            for k, v in node.items():
                if isinstance(v, (dict, list)) and v and not _is_leaf_list(v):
                    lines.append(f"{pad}{k}:")
                    walk(v, indent + 1)
                else:
                    lines.append(f"{pad}{k}: {_leaf(v)}")
        elif isinstance(node, list):
            for v in node:
                if isinstance(v, (dict, list)) and v and not _is_leaf_list(v):
                    lines.append(f"{pad}-")
                    walk(v, indent + 1)
                else:
                    lines.append(f"{pad}- {_leaf(v)}")

    def _is_leaf_list(v):
        return isinstance(v, list) and all(
            not isinstance(x, (dict, list)) for x in v
        )

    def _leaf(v):
        if isinstance(v, list):
            return "[" + ", ".join(str(x) for x in v) + "]"
        return str(v)

    walk(canonical(tree), 0)
    return "\n".join(lines) + "\n"
