"""Standalone SVG line charts (no renderer needed)."""

from html import escape
from typing import Dict, Sequence, Tuple

import numpy as np

WIDTH, HEIGHT = 640, 400
MARGIN = 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _scale(values: np.ndarray, log: bool):
    values = np.log10(values) if log else values
    low, high = float(np.min(values)), float(np.max(values))
    if high == low:
        low, high = low - 0.5, high + 0.5
    return values, low, high


def line_chart(
    title: str,
    series: Dict[str, Tuple[Sequence[float], Sequence[float]]],
    x_label: str = "",
    y_label: str = "",
    log_x: bool = False,
    log_y: bool = False,
) -> str:
    """Render named (x, y) series into one SVG document. Non-positive values are dropped on log axes."""
    cleaned = {}
    for name, (xs, ys) in series.items():
        xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
        keep = np.isfinite(xs) & np.isfinite(ys)
        if log_x:
            keep &= xs > 0
        if log_y:
            keep &= ys > 0
        if keep.any():
            cleaned[name] = (xs[keep], ys[keep])
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{escape(title)}</text>',
    ]
    if cleaned:
        all_x, x_low, x_high = _scale(np.concatenate([s[0] for s in cleaned.values()]), log_x)
        all_y, y_low, y_high = _scale(np.concatenate([s[1] for s in cleaned.values()]), log_y)
        plot_w, plot_h = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

        def px(x):
            return MARGIN + (x - x_low) / (x_high - x_low) * plot_w

        def py(y):
            return HEIGHT - MARGIN - (y - y_low) / (y_high - y_low) * plot_h

        parts.append(
            f'<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444"/>'
        )
        for value, anchor in ((x_low, "start"), (x_high, "end")):
            label = f"1e{value:.1f}" if log_x else f"{value:.4g}"
            parts.append(
                f'<text x="{px(value)}" y="{HEIGHT - MARGIN + 18}" text-anchor="{anchor}" font-family="sans-serif" font-size="11">{label}</text>'
            )
        for value in (y_low, y_high):
            label = f"1e{value:.1f}" if log_y else f"{value:.4g}"
            parts.append(
                f'<text x="{MARGIN - 6}" y="{py(value) + 4}" text-anchor="end" font-family="sans-serif" font-size="11">{label}</text>'
            )
        for index, (name, (xs, ys)) in enumerate(cleaned.items()):
            color = COLORS[index % len(COLORS)]
            xs_t = np.log10(xs) if log_x else xs
            ys_t = np.log10(ys) if log_y else ys
            points = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs_t, ys_t))
            parts.append(f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="2"/>')
            parts.append(
                f'<text x="{WIDTH - MARGIN + 4}" y="{MARGIN + 14 * (index + 1)}" font-family="sans-serif" font-size="11" fill="{color}">{escape(name)}</text>'
            )
    parts.append(
        f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" text-anchor="middle" font-family="sans-serif" font-size="12">{escape(x_label)}</text>'
    )
    parts.append(
        f'<text x="16" y="{HEIGHT / 2}" transform="rotate(-90 16 {HEIGHT / 2})" text-anchor="middle" font-family="sans-serif" font-size="12">{escape(y_label)}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts)
