"""Dependency-free SVG line charts for the benchmark sweeps."""

from __future__ import annotations

from pathlib import Path

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]

_W, _H = 640, 420
_ML, _MR, _MT, _MB = 70, 30, 50, 60  # margins


def _ticks(lo: float, hi: float, count: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def line_chart(
    series: dict,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    comments: list | None = None,
) -> str:
    """Render named (x, y) series as an SVG string with axes and a legend.

    ``series`` maps a label to a list of (x, y) points. ``comments`` lines
    are embedded as an XML comment so outputs carry their provenance.
    """
    points = [p for pts in series.values() for p in pts]
    if not points:
        raise ValueError("no data to plot")
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(0.0, min(ys)), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def sx(x):
        return _ML + (x - x_lo) / (x_hi - x_lo) * (_W - _ML - _MR)

    def sy(y):
        return _H - _MB - (y - y_lo) / (y_hi - y_lo) * (_H - _MT - _MB)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">'
    ]
    if comments:
        safe = "\n".join(str(c).replace("--", "- -") for c in comments)
        out.append(f"<!--\n{safe}\n-->")
    out.append(f'<rect width="{_W}" height="{_H}" fill="white"/>')
    if title:
        out.append(
            f'<text x="{_W / 2}" y="24" text-anchor="middle" font-size="15">{title}</text>'
        )

    axis_y = _H - _MB
    out.append(
        f'<line x1="{_ML}" y1="{axis_y}" x2="{_W - _MR}" y2="{axis_y}" stroke="black"/>'
    )
    out.append(f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{axis_y}" stroke="black"/>')

    for xt in _ticks(x_lo, x_hi):
        px = sx(xt)
        out.append(f'<line x1="{px}" y1="{axis_y}" x2="{px}" y2="{axis_y + 5}" stroke="black"/>')
        out.append(
            f'<text x="{px}" y="{axis_y + 20}" text-anchor="middle">{xt:g}</text>'
        )
    for yt in _ticks(y_lo, y_hi):
        py = sy(yt)
        out.append(f'<line x1="{_ML - 5}" y1="{py}" x2="{_ML}" y2="{py}" stroke="black"/>')
        out.append(
            f'<text x="{_ML - 8}" y="{py + 4}" text-anchor="end">{yt:.3g}</text>'
        )
        out.append(
            f'<line x1="{_ML}" y1="{py}" x2="{_W - _MR}" y2="{py}" '
            f'stroke="#dddddd" stroke-dasharray="3,3"/>'
        )
    if xlabel:
        out.append(
            f'<text x="{(_ML + _W - _MR) / 2}" y="{_H - 15}" text-anchor="middle">{xlabel}</text>'
        )
    if ylabel:
        out.append(
            f'<text x="18" y="{(_MT + axis_y) / 2}" text-anchor="middle" '
            f'transform="rotate(-90 18 {(_MT + axis_y) / 2})">{ylabel}</text>'
        )

    for idx, (label, pts) in enumerate(series.items()):
        color = _PALETTE[idx % len(_PALETTE)]
        path = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in sorted(pts))
        out.append(
            f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
        for x, y in pts:
            out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" fill="{color}"/>')
        ly = _MT + 16 * idx
        out.append(
            f'<line x1="{_W - _MR - 110}" y1="{ly}" x2="{_W - _MR - 86}" y2="{ly}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        out.append(f'<text x="{_W - _MR - 80}" y="{ly + 4}">{label}</text>')

    out.append("</svg>")
    return "\n".join(out)


def save_chart(series: dict, path, **kwargs) -> None:
    Path(path).write_text(line_chart(series, **kwargs) + "\n")
