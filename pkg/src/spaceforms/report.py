"""Report emission: JSON, CSV and the two fixed SVG figures.

JSON output is deterministic (sorted keys, repr-precision floats) apart from
the timestamp field.  CSV columns follow the record schema in a fixed order.
The SVG figures, a length-spectrum bar chart and a unit-circle eigenvalue
plot, are decorative and hand-rolled to avoid a plotting dependency.
"""

from __future__ import annotations

import csv
import io
import json
import os
from datetime import datetime, timezone

import numpy as np

from .errors import ArtifactIOError

CSV_COLUMNS = ["length", "energy", "index", "nullity", "residual", "simple",
               "class_power", "eigenvalues"]


def eigenvalues_to_pairs(ev) -> list:
    """Complex spectrum as [re, im] pairs sorted by argument then modulus."""
    if ev is None:
        return None
    vals = sorted(
        (complex(z) for z in np.asarray(ev).ravel()),
        key=lambda z: (np.angle(z), abs(z)),
    )
    return [[float(z.real), float(z.imag)] for z in vals]


def report_bundle(records, checks: dict, config_echo: dict | None = None) -> dict:
    return {
        "geodesics": [r.to_json_dict() for r in records],
        "checks": checks,
        "config": config_echo or {},
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def render_json(bundle: dict) -> str:
    return json.dumps(bundle, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"not JSON serializable: {type(obj)}")


def render_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        d = r.to_json_dict()
        ev = d.get("eigenvalues")
        w.writerow([
            repr(d["length"]),
            repr(d["energy"]),
            d["index"],
            d["nullity"],
            repr(d["residual"]),
            d["simple"],
            d["class_power"],
            ";".join(repr(complex(p[0], p[1])).strip("()") for p in ev) if ev else "",
        ])
    return buf.getvalue()


def render_loop_csv(loop) -> str:
    """Loop samples as N rows of n+1 ambient coordinates."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in loop.samples:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def _svg_header(width: int, height: int) -> str:
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">\n'
            f'<rect width="{width}" height="{height}" fill="white"/>\n')


def render_length_spectrum_svg(records, width: int = 480, height: int = 320) -> str:
    """Bar chart of geodesic lengths, energy-sorted."""
    lengths = [r.length for r in records]
    parts = [_svg_header(width, height)]
    if lengths:
        lo, hi = 0.0, max(lengths) * 1.1
        bar_w = (width - 80) / max(len(lengths), 1)
        for i, L in enumerate(lengths):
            h = (L - lo) / (hi - lo) * (height - 80)
            x = 40 + i * bar_w
            y = height - 40 - h
            parts.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w * 0.8:.1f}" '
                         f'height="{h:.1f}" fill="steelblue"/>\n')
            parts.append(f'<text x="{x + bar_w * 0.4:.1f}" y="{y - 4:.1f}" '
                         f'font-size="10" text-anchor="middle">{L:.4f}</text>\n')
    parts.append(f'<text x="{width / 2}" y="20" font-size="12" text-anchor="middle">'
                 'length spectrum</text>\n</svg>\n')
    return "".join(parts)


def render_eigenvalue_svg(records, width: int = 360, height: int = 360) -> str:
    """All record eigenvalues plotted against the unit circle."""
    cx, cy, rad = width / 2, height / 2, min(width, height) / 2 - 30
    parts = [_svg_header(width, height),
             f'<circle cx="{cx}" cy="{cy}" r="{rad}" fill="none" stroke="gray"/>\n']
    for r in records:
        for pair in (r.eigenvalues or []):
            re, im = (pair if isinstance(pair, (list, tuple)) else (pair.real, pair.imag))
            parts.append(f'<circle cx="{cx + re * rad:.1f}" cy="{cy - im * rad:.1f}" '
                         f'r="3" fill="crimson"/>\n')
    parts.append(f'<text x="{cx}" y="20" font-size="12" text-anchor="middle">'
                 'Poincar&#233; spectrum</text>\n</svg>\n')
    return "".join(parts)


def write_artifact(path: str, content: str, partial: bool = False) -> str:
    """Write a text artifact; failures raise the I/O error for exit code 3.

    With partial=True the file is written under a `.partial` suffix, marking
    output salvaged from an interrupted pipeline.
    """
    target = path + ".partial" if partial else path
    try:
        os.makedirs(os.path.dirname(target) or ".", exist_ok=True)
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(content)
    except OSError as exc:
        raise ArtifactIOError(f"cannot write {target}: {exc}") from exc
    return target
