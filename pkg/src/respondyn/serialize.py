"""Deterministic CSV/JSON emission shared by the CLI.

Floats are written as their shortest round-trip decimal (repr), CSV uses
comma separators, dot decimal points, LF line endings and a mandatory
header row.  JSON is emitted with sorted keys and non-finite numbers
replaced by null so output bytes are reproducible across platforms.
"""

from __future__ import annotations

import json
import math
import sys


def fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def csv_text(header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _sanitize(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalars
        return _sanitize(obj.item())
    return obj


def json_text(obj):
    return json.dumps(_sanitize(obj), indent=2, sort_keys=True) + "\n"


def emit(text, out_path=None):
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="ascii", newline="") as fh:
            fh.write(text)


def sidecar_path(out_path):
    """foo.csv -> foo.json; None stays None (sidecar appended to stdout)."""
    if out_path is None:
        return None
    root, dot, _ = out_path.rpartition(".")
    return (root if dot else out_path) + ".json"


def operator_csv(op):
    """One row per basis element: index followed by that row's entries.

    Complex Fourier entries are written as re/im column pairs."""
    entries = op.entries
    if hasattr(entries, "toarray"):
        mat = entries.toarray()
        header = ["index"] + [f"c{j}" for j in range(mat.shape[1])]
        rows = [(i, *mat[i].tolist()) for i in range(mat.shape[0])]
    else:
        size = entries.shape[1]
        header = ["index"]
        for j in range(size):
            header += [f"c{j}re", f"c{j}im"]
        rows = []
        for i in range(entries.shape[0]):
            flat = []
            for v in entries[i]:
                flat += [v.real, v.imag]
            rows.append((i, *flat))
    return csv_text(header, rows)


def density_csv(dens):
    """One row per basis element: cell index+value, or mode index+re+im."""
    if dens.kind == "fourier":
        n = dens.modes
        rows = [(k, c.real, c.imag) for k, c in zip(range(-n, n + 1), dens.coeffs)]
        return csv_text(("index", "re", "im"), rows)
    return csv_text(("index", "value"), list(enumerate(dens.values.tolist())))
