"""Text formats: JSON density matrices, DOT/JSON graphs, CSV trajectories."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .digraph import ComponentReport, Digraph
from .graphs import bitstring
from .perm import Permutation, PermSet
from .qstate import ReducedState, _mat

CSV_FORMAT = "{:.12g}"


def matrix_to_json(a) -> list:
    """Row-major nested list of ``[re, im]`` pairs."""
    a = _mat(a)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def matrix_from_json(rows) -> np.ndarray:
    """Inverse of :func:`matrix_to_json`; plain real numbers are accepted as entries."""
    out = []
    for row in rows:
        vals = []
        for z in row:
            if isinstance(z, (list, tuple)):
                if len(z) != 2:
                    raise ValueError(f"complex entry must be [re, im], got {z!r}")
                vals.append(complex(float(z[0]), float(z[1])))
            else:
                vals.append(complex(float(z)))
        out.append(vals)
    a = np.array(out, dtype=complex)
    if a.ndim != 2:
        raise ValueError("matrix rows have unequal lengths")
    return a


def reduced_to_json(r: ReducedState) -> dict:
    return {"qubit": r.k, "matrix": matrix_to_json(r.data), "bloch": list(r.bloch)}


def perm_lines(s: PermSet) -> list[str]:
    return [str(p) for p in s]


def perms_from_lines(lines, n: int | None = None) -> PermSet:
    return PermSet([Permutation.parse(x) for x in lines], n=n)


def _dot_id(label, n: int | None) -> str:
    if isinstance(label, tuple) and n is not None:
        return f'"|{bitstring(label[0], n)}><{bitstring(label[1], n)}|"'
    return f'"{label}"'


def digraph_to_dot(g: Digraph, name: str = "G", n: int | None = None) -> str:
    """DOT text; operator labels ``(row, col)`` are written as ``|p><q|`` when ``n`` is given."""
    lines = [f"digraph {name} {{"]
    for v in g.nodes:
        lines.append(f"  {_dot_id(v, n)};")
    for u, v in g.sorted_arcs():
        lines.append(f"  {_dot_id(u, n)} -> {_dot_id(v, n)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _plain(label):
    return list(label) if isinstance(label, tuple) else label


def digraph_to_json(g: Digraph) -> dict:
    return {
        "nodes": [_plain(v) for v in g.nodes],
        "arcs": [[_plain(u), _plain(v)] for u, v in g.sorted_arcs()],
    }


def components_to_json(rep: ComponentReport) -> dict:
    return {
        "count": len(rep),
        "size_histogram": {str(k): v for k, v in rep.size_histogram().items()},
        "components": [
            {
                "nodes": [_plain(v) for v in c.nodes],
                "size": c.size,
                "arcs": c.arc_count,
                "strongly_connected": c.strongly_connected,
                "directed_cycle": c.is_directed_cycle,
            }
            for c in rep.components
        ],
    }


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def atomic_write(path, text: str) -> None:
    """Write ``text`` to a temporary file beside ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_csv(header: list[str], rows) -> str:
    out = [",".join(header)]
    for row in rows:
        out.append(",".join(CSV_FORMAT.format(float(v)) for v in row))
    return "\n".join(out) + "\n"
