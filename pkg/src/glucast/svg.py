"""Static SVG line plots: one polyline per series, no dependencies.

Good enough for forecast overlays and daily profiles; anything interactive
is out of scope.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

__all__ = ["line_plot"]

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")

_MARGIN = 50.0


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def line_plot(
    series: list[tuple[str, list[float], list[float]]],
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    width: int = 800,
    height: int = 400,
) -> str:
    """Render ``(label, xs, ys)`` triples to an SVG document string."""
    if not series:
        raise ValueError("nothing to plot")
    all_x = [x for _, xs, _ in series for x in xs]
    all_y = [y for _, _, ys in series for y in ys]
    if not all_x:
        raise ValueError("series are empty")
    x_min, x_max = min(all_x), max(all_x)
    y_min, y_max = min(all_y), max(all_y)
    if x_max == x_min:
        x_max = x_min + 1.0
    if y_max == y_min:
        y_max = y_min + 1.0
    pad = 0.05 * (y_max - y_min)
    y_min -= pad
    y_max += pad

    plot_w = width - 2 * _MARGIN
    plot_h = height - 2 * _MARGIN

    def sx(x: float) -> float:
        return _MARGIN + (x - x_min) / (x_max - x_min) * plot_w

    def sy(y: float) -> float:
        return height - _MARGIN - (y - y_min) / (y_max - y_min) * plot_h

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{escape(title)}</text>'
        )
    # Axes
    parts.append(
        f'<line x1="{_MARGIN}" y1="{height - _MARGIN}" x2="{width - _MARGIN}" '
        f'y2="{height - _MARGIN}" stroke="black"/>'
    )
    parts.append(
        f'<line x1="{_MARGIN}" y1="{_MARGIN}" x2="{_MARGIN}" '
        f'y2="{height - _MARGIN}" stroke="black"/>'
    )
    for tx in _ticks(x_min, x_max):
        parts.append(
            f'<text x="{sx(tx):.1f}" y="{height - _MARGIN + 16:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{tx:.6g}</text>'
        )
    for ty in _ticks(y_min, y_max):
        parts.append(
            f'<text x="{_MARGIN - 6:.1f}" y="{sy(ty) + 3:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{ty:.6g}</text>'
        )
    if x_label:
        parts.append(
            f'<text x="{width / 2:.1f}" y="{height - 8:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{escape(x_label)}</text>'
        )
    if y_label:
        parts.append(
            f'<text x="14" y="{height / 2:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11" '
            f'transform="rotate(-90 14 {height / 2:.1f})">{escape(y_label)}</text>'
        )

    for i, (label, xs, ys) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        points = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
            f'points="{points}"/>'
        )
        parts.append(
            f'<text x="{width - _MARGIN - 4:.1f}" y="{_MARGIN + 14 + 14 * i:.1f}" '
            f'text-anchor="end" font-family="sans-serif" font-size="11" '
            f'fill="{color}">{escape(label)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
