"""Hand-rolled SVG scatter of the embedded model space.

Shows the candidate models, the estimated projection m, the true projection
M when known, and the Akaike-weight model average.  Output is deterministic;
the timestamp comment can be disabled for byte-identical reruns.
"""

from __future__ import annotations

import datetime

import numpy as np

_WIDTH, _HEIGHT = 720, 540
_MARGIN = 56


def model_space_svg(coords, names, m_hat=None, m_true=None, average=None,
                    title="model space", timestamp=True) -> str:
    coords = np.asarray(coords, dtype=float)
    extra = [p for p in (m_hat, m_true, average) if p is not None]
    pts = np.vstack([coords] + [np.asarray(p, float).reshape(1, -1) for p in extra])
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    pad = 0.08 * span
    lo, hi = lo - pad, hi + pad

    def sx(x):
        return _MARGIN + (x - lo[0]) / (hi[0] - lo[0]) * (_WIDTH - 2 * _MARGIN)

    def sy(y):
        # SVG y grows downward.
        return _HEIGHT - _MARGIN - (y - lo[1]) / (hi[1] - lo[1]) * (_HEIGHT - 2 * _MARGIN)

    out = ['<?xml version="1.0" encoding="UTF-8"?>']
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">'
    )
    if timestamp:
        now = datetime.datetime.now(datetime.timezone.utc).isoformat()
        out.append(f"<!-- generated {now} -->")
    out.append(f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>')
    out.append(
        f'<rect x="{_MARGIN}" y="{_MARGIN}" width="{_WIDTH - 2 * _MARGIN}" '
        f'height="{_HEIGHT - 2 * _MARGIN}" fill="none" stroke="#888" stroke-width="1"/>'
    )
    out.append(
        f'<text x="{_WIDTH / 2:.1f}" y="30" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{_esc(title)}</text>'
    )

    for (x, y), name in zip(coords, names):
        out.append(
            f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="4" '
            f'fill="#b0b0b0" stroke="#555" stroke-width="0.8"/>'
        )
        out.append(
            f'<text x="{sx(x) + 6:.2f}" y="{sy(y) - 5:.2f}" '
            f'font-family="sans-serif" font-size="9" fill="#444">{_esc(name)}</text>'
        )

    def marker(point, shape, color, label):
        x, y = sx(point[0]), sy(point[1])
        if shape == "cross":
            out.append(
                f'<path d="M {x - 6:.2f} {y:.2f} H {x + 6:.2f} '
                f'M {x:.2f} {y - 6:.2f} V {y + 6:.2f}" '
                f'stroke="{color}" stroke-width="2.5" fill="none"/>'
            )
        elif shape == "diamond":
            out.append(
                f'<path d="M {x:.2f} {y - 7:.2f} L {x + 7:.2f} {y:.2f} '
                f'L {x:.2f} {y + 7:.2f} L {x - 7:.2f} {y:.2f} Z" '
                f'fill="none" stroke="{color}" stroke-width="2"/>'
            )
        else:  # square
            out.append(
                f'<rect x="{x - 5:.2f}" y="{y - 5:.2f}" width="10" height="10" '
                f'fill="none" stroke="{color}" stroke-width="2"/>'
            )
        out.append(
            f'<text x="{x + 9:.2f}" y="{y + 4:.2f}" font-family="sans-serif" '
            f'font-size="11" fill="{color}">{_esc(label)}</text>'
        )

    legend = []
    if m_hat is not None:
        marker(m_hat, "cross", "#1f4fd8", "m")
        legend.append(("#1f4fd8", "m: estimated projection"))
    if m_true is not None:
        marker(m_true, "diamond", "#111111", "M")
        legend.append(("#111111", "M: true projection"))
    if average is not None:
        marker(average, "square", "#c42f2f", "a")
        legend.append(("#c42f2f", "a: model average"))
    legend.append(("#b0b0b0", "candidate models"))

    ly = _HEIGHT - 14 - 14 * (len(legend) - 1)
    for color, label in legend:
        out.append(
            f'<circle cx="{_MARGIN + 6}" cy="{ly - 4:.1f}" r="4" fill="{color}"/>'
        )
        out.append(
            f'<text x="{_MARGIN + 16}" y="{ly:.1f}" font-family="sans-serif" '
            f'font-size="11" fill="#333">{_esc(label)}</text>'
        )
        ly += 14

    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s) -> str:
    return (str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;"))
