"""Dependency-free SVG rendering for report figures.

Output is plain text with fixed number formatting so that identical inputs
give byte-identical files.
"""

from __future__ import annotations

from html import escape
from typing import Sequence

BAR_POS = "#d62728"
BAR_NEG = "#1f77b4"


def _f(v: float) -> str:
    return f"{v:.2f}"


def bar_chart(labels: Sequence[str], values: Sequence[float], title: str = "",
              value_format: str = "{:.3f}") -> str:
    """Horizontal bar chart, one bar per label, in the given order (top to bottom)."""
    row_h, label_w, bar_w, pad = 18, 190, 320, 10
    width = label_w + bar_w + 90
    height = 40 + row_h * len(labels) + pad
    vmax = max((abs(v) for v in values), default=0.0) or 1.0
    has_neg = any(v < 0 for v in values)
    zero_x = label_w + (bar_w / 2 if has_neg else 0)
    scale = (bar_w / 2 if has_neg else bar_w) / vmax
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="11">',
           f'<text x="{pad}" y="20" font-size="13" font-weight="bold">{escape(title)}</text>']
    for i, (lab, v) in enumerate(zip(labels, values)):
        y = 32 + i * row_h
        w = abs(v) * scale
        x = zero_x if v >= 0 else zero_x - w
        color = BAR_POS if v >= 0 else BAR_NEG
        out.append(f'<text x="{label_w - 6}" y="{_f(y + 12)}" text-anchor="end">{escape(lab)}</text>')
        out.append(f'<rect x="{_f(x)}" y="{y + 2}" width="{_f(w)}" height="{row_h - 4}" fill="{color}"/>')
        tx = zero_x + w + 4 if v >= 0 else zero_x + 4
        out.append(f'<text x="{_f(tx)}" y="{_f(y + 12)}">{value_format.format(v)}</text>')
    out.append(f'<line x1="{_f(zero_x)}" y1="28" x2="{_f(zero_x)}" y2="{height - pad}" stroke="#333"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def beeswarm(feature_order: Sequence[str], points: dict[str, list[tuple[float, float]]],
             title: str = "") -> str:
    """SHAP-style summary plot: one row per feature, dots at attribution, colour by value."""
    row_h, label_w, plot_w, pad = 20, 190, 360, 10
    height = 40 + row_h * len(feature_order) + pad
    width = label_w + plot_w + 30
    allphi = [phi for f in feature_order for _, phi in points.get(f, [])]
    span = max((abs(p) for p in allphi), default=0.0) or 1.0
    zero_x = label_w + plot_w / 2
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="11">',
           f'<text x="{pad}" y="20" font-size="13" font-weight="bold">{escape(title)}</text>',
           f'<line x1="{_f(zero_x)}" y1="28" x2="{_f(zero_x)}" y2="{height - pad}" stroke="#999"/>']
    for i, feat in enumerate(feature_order):
        y = 32 + i * row_h + row_h / 2
        out.append(f'<text x="{label_w - 6}" y="{_f(y + 4)}" text-anchor="end">{escape(feat)}</text>')
        pts = points.get(feat, [])
        vals = [v for v, _ in pts]
        lo, hi = (min(vals), max(vals)) if vals else (0.0, 1.0)
        for k, (v, phi) in enumerate(pts):
            t = (v - lo) / (hi - lo) if hi > lo else 0.5
            red, blue = int(255 * t), int(255 * (1 - t))
            cx = zero_x + phi / span * (plot_w / 2 - 5)
            jitter = ((k * 7) % 11 - 5) * 0.9
            out.append(f'<circle cx="{_f(cx)}" cy="{_f(y + jitter)}" r="2.2" '
                       f'fill="rgb({red},40,{blue})" fill-opacity="0.7"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def force_plot(labels: Sequence[str], phis: Sequence[float], base: float, prediction: float,
               title: str = "", top: int = 10) -> str:
    """Waterfall from the base value to the prediction, largest contributions first."""
    order = sorted(range(len(labels)), key=lambda j: (-abs(phis[j]), j))
    shown = order[:top]
    rest = sum(phis[j] for j in order[top:])
    steps = [(labels[j], phis[j]) for j in shown]
    if len(order) > top:
        steps.append((f"{len(order) - top} other features", rest))
    row_h, label_w, plot_w, pad = 18, 190, 360, 10
    height = 60 + row_h * (len(steps) + 1) + pad
    width = label_w + plot_w + 90
    cum = [base]
    for _, v in steps:
        cum.append(cum[-1] + v)
    lo, hi = min(cum), max(cum)
    span = (hi - lo) or 1.0

    def sx(v):
        return label_w + (v - lo) / span * plot_w

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="11">',
           f'<text x="{pad}" y="20" font-size="13" font-weight="bold">{escape(title)}</text>',
           f'<text x="{pad}" y="38">base {base:.3f} → f(x) {prediction:.3f}</text>']
    for i, (lab, v) in enumerate(steps):
        y = 48 + i * row_h
        a, b = sorted((cum[i], cum[i + 1]))
        color = BAR_POS if v >= 0 else BAR_NEG
        out.append(f'<text x="{label_w - 6}" y="{_f(y + 12)}" text-anchor="end">{escape(lab)}</text>')
        out.append(f'<rect x="{_f(sx(a))}" y="{y + 2}" width="{_f(max(sx(b) - sx(a), 0.5))}" '
                   f'height="{row_h - 4}" fill="{color}"/>')
        out.append(f'<text x="{_f(sx(b) + 4)}" y="{_f(y + 12)}">{v:+.3f}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
