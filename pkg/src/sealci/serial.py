"""Canonical JSON, stable hashes and fixed-decimal CSV formatting."""

import hashlib
import json


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def stable_hash(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode("ascii")).hexdigest()[:16]


def fmt(value) -> str:
    """Six-decimal fixed point for floats, plain text otherwise."""
    if isinstance(value, float):
        out = f"{value:.6f}"
        return "0.000000" if out == "-0.000000" else out
    return str(value)


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"
