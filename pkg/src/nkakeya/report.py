"""CSV and SVG output. Floats are written as their shortest round-trip repr; the SVG is hand-built so it is byte-stable."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if hasattr(v, "dtype") and getattr(v, "ndim", 1) == 0:
        return fmt(v.item())
    if isinstance(v, float):
        return repr(float(v))
    if isinstance(v, (list, tuple)):
        return " ".join(fmt(float(x) if not isinstance(x, str) else x) for x in v)
    return str(v)


def write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    return path


def read_rows(path) -> tuple[list[str], list[dict]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        return list(reader.fieldnames or []), rows


def _nice_decades(lo: float, hi: float) -> list[int]:
    a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
    if a == b:
        b += 1
    return list(range(a, b + 1))


def loglog_svg(xs: Sequence[float], ys: Sequence[float], *, title: str, xlabel: str, ylabel: str,
               width: int = 480, height: int = 360) -> str:
    """One log-log chart as an SVG 1.1 document (markers joined by a polyline)."""
    pts = [(x, y) for x, y in zip(xs, ys) if x > 0 and y > 0 and math.isfinite(x) and math.isfinite(y)]
    ml, mr, mt, mb = 70, 20, 40, 50
    pw, ph = width - ml - mr, height - mt - mb
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>',
    ]
    if pts:
        xd = _nice_decades(min(p[0] for p in pts), max(p[0] for p in pts))
        yd = _nice_decades(min(p[1] for p in pts), max(p[1] for p in pts))
        x0, x1, y0, y1 = xd[0], xd[-1], yd[0], yd[-1]

        def X(v):
            return ml + (math.log10(v) - x0) / (x1 - x0) * pw

        def Y(v):
            return mt + ph - (math.log10(v) - y0) / (y1 - y0) * ph

        for e in xd:
            px = ml + (e - x0) / (x1 - x0) * pw
            out.append(f'<line x1="{px:.2f}" y1="{mt}" x2="{px:.2f}" y2="{mt + ph}" stroke="#dddddd"/>')
            out.append(f'<text x="{px:.2f}" y="{mt + ph + 18}" text-anchor="middle" font-family="sans-serif" '
                       f'font-size="11">1e{e}</text>')
        for e in yd:
            py = mt + ph - (e - y0) / (y1 - y0) * ph
            out.append(f'<line x1="{ml}" y1="{py:.2f}" x2="{ml + pw}" y2="{py:.2f}" stroke="#dddddd"/>')
            out.append(f'<text x="{ml - 6}" y="{py + 4:.2f}" text-anchor="end" font-family="sans-serif" '
                       f'font-size="11">1e{e}</text>')
        poly = " ".join(f"{X(x):.2f},{Y(y):.2f}" for x, y in pts)
        out.append(f'<polyline points="{poly}" fill="none" stroke="#1f4e99" stroke-width="1.5"/>')
        for x, y in pts:
            out.append(f'<circle cx="{X(x):.2f}" cy="{Y(y):.2f}" r="3.5" fill="#1f4e99"/>')
    out.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 10}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="12">{xlabel}</text>')
    out.append(f'<text x="16" y="{mt + ph / 2:.1f}" text-anchor="middle" font-family="sans-serif" font-size="12" '
               f'transform="rotate(-90 16 {mt + ph / 2:.1f})">{ylabel}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def endpoint_svg_from_csv(csv_path, svg_path) -> Path:
    """LB against achieved delta, read back from the endpoint CSV."""
    _, rows = read_rows(csv_path)
    xs, ys = [], []
    for r in rows:
        try:
            xs.append(float(r["delta_achieved"]))
            ys.append(float(r["lb"]))
        except (KeyError, ValueError):
            continue
    svg = loglog_svg(xs, ys, title="Implied lower bound vs achieved ratio", xlabel="delta (achieved)",
                     ylabel="LB")
    p = Path(svg_path)
    p.write_text(svg, encoding="utf-8")
    return p
