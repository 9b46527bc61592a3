"""Plain SVG 1.1 snapshots of the first quadrant in log-polar coordinates.

A point at radius ``r`` and angle ``theta`` is drawn at radius proportional
to ``log10(r / r_min)``, so structure collapsing onto the origin stays
visible.  Concentric arcs mark each decade.
"""

from __future__ import annotations

import math

import numpy as np

from .regions import E_INV, sample_omega_boundary

SIZE = 480
MARGIN = 40


def _log_polar(log10_r, theta, lo, hi):
    rad = np.clip((log10_r - lo) / (hi - lo), 0.0, 1.0) * SIZE
    return MARGIN + rad * np.cos(theta), MARGIN + SIZE - rad * np.sin(theta)


def _path(log10_r, theta, lo, hi, closed=True):
    x, y = _log_polar(log10_r, theta, lo, hi)
    pts = " ".join(f"{a:.3f},{b:.3f}" for a, b in zip(x, y))
    return f"M {pts}{' Z' if closed else ''}"


def _polar(pts, log10_scale=0.0):
    pts = np.asarray(pts, dtype=float)
    with np.errstate(divide="ignore"):
        lr = np.log10(np.hypot(pts[:, 0], pts[:, 1])) + log10_scale
    return lr, np.arctan2(pts[:, 1], pts[:, 0])


def write_snapshot(path, contour, log_alpha: float, eps: float, window: float, t: float,
                   barrier_nodes: int = 256) -> None:
    """Patch contour, barrier outline ``alpha * Omega_eps`` and the proxy window."""
    lr_c, th_c = _polar(contour)
    bar = None
    if 0 < eps < E_INV:
        lr_b, th_b = _polar(sample_omega_boundary(eps, barrier_nodes), log_alpha / math.log(10))
        bar = (lr_b, th_b)
    finite = lr_c[np.isfinite(lr_c)]
    if bar is not None:
        finite = np.concatenate([finite, bar[0][np.isfinite(bar[0])]])
    hi = math.ceil(max(float(finite.max()), math.log10(window)) + 1e-9)
    lo = math.floor(float(finite.min())) - 1
    lo = max(lo, hi - 320)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" baseProfile="full" '
        f'width="{SIZE + 2 * MARGIN}" height="{SIZE + 2 * MARGIN}">',
        f'<title>t = {t:.6g}</title>',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    step = max(1, (hi - lo) // 12)
    for d in range(lo, hi + 1, step):
        r = (d - lo) / (hi - lo) * SIZE
        out.append(f'<path d="M {MARGIN + r:.3f},{MARGIN + SIZE:.3f} A {r:.3f},{r:.3f} 0 0 0 '
                   f'{MARGIN:.3f},{MARGIN + SIZE - r:.3f}" fill="none" stroke="#ddd"/>')
        out.append(f'<text x="{MARGIN + r:.3f}" y="{MARGIN + SIZE + 14}" font-size="9" '
                   f'text-anchor="middle">1e{d}</text>')
    th = np.linspace(0, math.pi / 2, 64)
    out.append(f'<path d="{_path(np.full(64, math.log10(window)), th, lo, hi, closed=False)}" '
               'fill="none" stroke="#888" stroke-dasharray="4 3"/>')
    if bar is not None:
        out.append(f'<path d="{_path(*bar, lo, hi)}" fill="none" stroke="#c33"/>')
    out.append(f'<path d="{_path(lr_c, th_c, lo, hi)}" fill="#36c" fill-opacity="0.3" stroke="#036"/>')
    out.append(f'<text x="{MARGIN}" y="{MARGIN - 12}" font-size="12">t = {t:.6g}, '
               f'ln alpha = {log_alpha:.6g}, eps = {eps:.6g}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
