"""Self-contained SVG emitters (no plotting dependency).

The reliability diagram draws one ``<rect>`` per bin (empty bins get a
zero-height rect, never NaN geometry), the y=x reference diagonal, and
the calibration error in the title.  The score-curve figure overlays
per-class model scores (solid) on the analytic posterior (dashed).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .io import atomic_write_text
from .metrics import BinningReport

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

_W, _H = 480.0, 420.0
_ML, _MR, _MT, _MB = 56.0, 16.0, 44.0, 44.0
_PW, _PH = _W - _ML - _MR, _H - _MT - _MB


def _x(frac: float) -> float:
    return _ML + frac * _PW


def _y(frac: float) -> float:
    return _MT + (1.0 - frac) * _PH


def _header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_W:g} {_H:g}" '
        f'font-family="sans-serif" font-size="12">',
        f'<title>{title}</title>',
        f'<text x="{_W / 2:g}" y="20" text-anchor="middle" font-size="14">{title}</text>',
    ]


def _frame(x_label: str, y_label: str, x_ticks=None) -> list[str]:
    if x_ticks is None:
        x_ticks = [("0", 0.0), ("0.5", 0.5), ("1", 1.0)]
    parts = [
        f'<path d="M {_x(0):g} {_y(0):g} H {_x(1):g} M {_x(0):g} {_y(0):g} V {_y(1):g}" '
        'stroke="#333" fill="none"/>',
        f'<text x="{_x(0.5):g}" y="{_H - 10:g}" text-anchor="middle">{x_label}</text>',
        f'<text x="14" y="{_y(0.5):g}" text-anchor="middle" '
        f'transform="rotate(-90 14 {_y(0.5):g})">{y_label}</text>',
    ]
    for tick_label, frac in x_ticks:
        parts.append(
            f'<text x="{_x(frac):g}" y="{_y(0) + 16:g}" text-anchor="middle" '
            f'font-size="10">{tick_label}</text>'
        )
    for frac in (0.0, 0.5, 1.0):
        parts.append(
            f'<text x="{_x(0) - 6:g}" y="{_y(frac) + 4:g}" text-anchor="end" '
            f'font-size="10">{frac:g}</text>'
        )
    return parts


def emit_reliability_svg(report: BinningReport, path) -> None:
    """Write a reliability diagram: accuracy bars vs the diagonal."""
    n = report.n_bins
    parts = _header(f"Reliability diagram (ECE = {report.ece:.4f})")
    parts += _frame("confidence", "accuracy")
    width = _PW / n
    for j in range(n):
        acc = float(report.accuracy[j])
        height = acc * _PH
        parts.append(
            f'<rect class="bin-bar" x="{_ML + j * width:.2f}" y="{_y(acc):.2f}" '
            f'width="{width:.2f}" height="{height:.2f}" '
            'fill="#4a90d9" fill-opacity="0.8" stroke="#1f5fa0"/>'
        )
    parts.append(
        f'<line x1="{_x(0):g}" y1="{_y(0):g}" x2="{_x(1):g}" y2="{_y(1):g}" '
        'stroke="#555" stroke-dasharray="5,4"/>'
    )
    parts.append("</svg>")
    atomic_write_text(Path(path), "\n".join(parts) + "\n")


def _polyline(xs: np.ndarray, ys: np.ndarray, x_lo: float, x_hi: float) -> str:
    fx = (xs - x_lo) / (x_hi - x_lo)
    points = " ".join(f"{_x(a):.2f},{_y(min(max(b, 0.0), 1.0)):.2f}" for a, b in zip(fx, ys))
    return points


def emit_score_curves_svg(xs, model_scores, reference_scores, path, title: str) -> None:
    """Overlay per-class model scores (solid) on reference scores (dashed)."""
    x = np.asarray(xs, dtype=float)
    model = np.asarray(model_scores, dtype=float)
    ref = np.asarray(reference_scores, dtype=float)
    x_lo, x_hi = float(x.min()), float(x.max())
    ticks = [(f"{x_lo:g}", 0.0), (f"{0.5 * (x_lo + x_hi):g}", 0.5), (f"{x_hi:g}", 1.0)]
    parts = _header(title)
    parts += _frame("x", "score", ticks)
    for cls in range(model.shape[1]):
        color = _PALETTE[cls % len(_PALETTE)]
        parts.append(
            f'<polyline points="{_polyline(x, ref[:, cls], x_lo, x_hi)}" fill="none" '
            f'stroke="{color}" stroke-width="1.2" stroke-dasharray="6,4" opacity="0.75"/>'
        )
        parts.append(
            f'<polyline points="{_polyline(x, model[:, cls], x_lo, x_hi)}" fill="none" '
            f'stroke="{color}" stroke-width="1.6"/>'
        )
    parts.append("</svg>")
    atomic_write_text(Path(path), "\n".join(parts) + "\n")
