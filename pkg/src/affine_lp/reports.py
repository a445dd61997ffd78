"""Deterministic report files: JSON, commented CSV and a bare SVG line plot."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def to_json(obj) -> str:
    return json.dumps(obj, default=_default, sort_keys=True, indent=2, allow_nan=True) + "\n"


def atomic_write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(columns, rows, comments=()) -> str:
    """CSV with ``#`` comment lines first; ``columns`` are ``(name, unit)`` pairs."""
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    buf.write("# columns: " + ", ".join(f"{n} [{u}]" for n, u in columns) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([n for n, _ in columns])
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def svg_line_plot(xs, ys, xlabel: str, ylabel: str, title: str = "", width: int = 480, height: int = 320) -> str:
    xs = [float(x) for x in xs]
    ys = [float(y) for y in ys]
    ml, mr, mt, mb = 60, 20, 30, 45
    pw, ph = width - ml - mr, height - mt - mb
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(0.0, min(ys)), max(ys)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    def sx(x):
        return ml + pw * (x - x0) / (x1 - x0)

    def sy(y):
        return mt + ph * (1 - (y - y0) / (y1 - y0))

    pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
        f'<polyline points="{pts}" fill="none" stroke="steelblue" stroke-width="2"/>',
    ]
    for x, y in zip(xs, ys):
        out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" fill="steelblue"/>')
    for x in xs:
        out.append(f'<text x="{sx(x):.2f}" y="{mt + ph + 16}" font-size="11" text-anchor="middle">{x:g}</text>')
    for y in (y0, y1):
        out.append(f'<text x="{ml - 6}" y="{sy(y) + 4:.2f}" font-size="11" text-anchor="end">{y:.4g}</text>')
    out.append(f'<text x="{ml + pw / 2}" y="{height - 8}" font-size="12" text-anchor="middle">{xlabel}</text>')
    out.append(
        f'<text x="14" y="{mt + ph / 2}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 14 {mt + ph / 2})">{ylabel}</text>'
    )
    if title:
        out.append(f'<text x="{width / 2}" y="18" font-size="13" text-anchor="middle">{title}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
