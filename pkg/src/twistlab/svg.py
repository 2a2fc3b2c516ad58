"""Minimal self-contained SVG histogram writer."""

from __future__ import annotations

from xml.sax.saxutils import escape


def histogram_svg(edges, counts, title: str = "", xlabel: str = "", width: int = 640, height: int = 400) -> str:
    pad_l, pad_r, pad_t, pad_b = 60, 20, 40, 50
    pw, ph = width - pad_l - pad_r, height - pad_t - pad_b
    lo, hi = float(edges[0]), float(edges[-1])
    top = max(max(counts), 1)
    span = (hi - lo) or 1.0

    def sx(x):
        return pad_l + (x - lo) / span * pw

    def sy(y):
        return pad_t + ph - y / top * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{escape(title)}</text>',
    ]
    for i, c in enumerate(counts):
        x0, x1 = sx(edges[i]), sx(edges[i + 1])
        y = sy(c)
        parts.append(
            f'<rect x="{x0:.2f}" y="{y:.2f}" width="{max(x1 - x0 - 0.5, 0.5):.2f}" '
            f'height="{pad_t + ph - y:.2f}" fill="#4a76a8"/>'
        )
    parts.append(f'<line x1="{pad_l}" y1="{pad_t + ph}" x2="{pad_l + pw}" y2="{pad_t + ph}" stroke="black"/>')
    parts.append(f'<line x1="{pad_l}" y1="{pad_t}" x2="{pad_l}" y2="{pad_t + ph}" stroke="black"/>')
    for k in range(6):
        xv = lo + span * k / 5
        parts.append(
            f'<text x="{sx(xv):.1f}" y="{pad_t + ph + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{xv:.2f}</text>'
        )
        yv = top * k / 5
        parts.append(
            f'<text x="{pad_l - 6}" y="{sy(yv) + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{yv:.0f}</text>'
        )
    parts.append(
        f'<text x="{pad_l + pw / 2:.1f}" y="{height - 10}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{escape(xlabel)}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
