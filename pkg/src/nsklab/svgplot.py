"""Tiny dependency-free SVG writer for log-log norm curves with guide lines."""

from __future__ import annotations

import numpy as np

_W, _H = 640, 440
_ML, _MR, _MT, _MB = 70, 20, 20, 50


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def loglog_svg(times, values, *, title: str = "", guide_slope: float | None = None, guide_label: str = "") -> str:
    """Log-log polyline of a positive series, with an optional slope guide line."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    keep = (t > 0) & (v > 0)
    t, v = t[keep], v[keep]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" height="{_H - _MT - _MB}" fill="none" stroke="black"/>',
    ]
    if t.size >= 2:
        lt, lv = np.log10(t), np.log10(v)
        lt0, lt1 = lt.min(), lt.max()
        lv0, lv1 = lv.min(), lv.max()
        if lv1 - lv0 < 1e-12:
            lv0, lv1 = lv0 - 0.5, lv1 + 0.5

        def sx(x):
            return _ML + (x - lt0) / (lt1 - lt0) * (_W - _ML - _MR)

        def sy(y):
            return _H - _MB - (y - lv0) / (lv1 - lv0) * (_H - _MT - _MB)

        pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(lt, lv))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>')
        for a, b in zip(lt, lv):
            parts.append(f'<circle cx="{_fmt(sx(a))}" cy="{_fmt(sy(b))}" r="2.5" fill="#1f77b4"/>')
        if guide_slope is not None:
            gy0 = lv[0]
            gpts = f"{_fmt(sx(lt[0]))},{_fmt(sy(gy0))} {_fmt(sx(lt[-1]))},{_fmt(sy(gy0 + guide_slope * (lt[-1] - lt[0])))}"
            parts.append(f'<polyline points="{gpts}" fill="none" stroke="#d62728" stroke-width="1.2" stroke-dasharray="6,4"/>')
            if guide_label:
                parts.append(
                    f'<text x="{_W - _MR - 8}" y="{_MT + 18}" text-anchor="end" font-family="monospace" '
                    f'font-size="12" fill="#d62728">{guide_label}</text>'
                )
        # axis annotations: decade ticks
        for d in range(int(np.floor(lt0)), int(np.floor(lt1)) + 1):
            if lt0 <= d <= lt1:
                parts.append(
                    f'<text x="{_fmt(sx(d))}" y="{_H - _MB + 18}" text-anchor="middle" font-family="monospace" '
                    f'font-size="11">1e{d}</text>'
                )
        for d in range(int(np.floor(lv0)), int(np.floor(lv1)) + 1):
            if lv0 <= d <= lv1:
                parts.append(
                    f'<text x="{_ML - 6}" y="{_fmt(sy(d) + 4)}" text-anchor="end" font-family="monospace" '
                    f'font-size="11">1e{d}</text>'
                )
    if title:
        parts.append(
            f'<text x="{_ML}" y="{_MT - 6}" font-family="monospace" font-size="13">{title}</text>'
        )
    parts.append(f'<text x="{(_ML + _W - _MR) // 2}" y="{_H - 12}" text-anchor="middle" font-family="monospace" font-size="12">t</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
