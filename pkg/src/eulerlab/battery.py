"""Standard patch configurations used by the kernel checks and the C fit."""

import numpy as np

from .kernel import Patch, VorticityField, extract_b, remainder_weight, velocity_batch
from .quadrature import QuadratureSpec
from .regions import E_INV4, sample_omega_boundary

C_SAFETY = 1.5


def rectangle(x0, x1, y0, y1):
    return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=float)


def regular_polygon(center, radius, n=64):
    t = 2 * np.pi * np.arange(n) / n
    return np.column_stack([center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)])


def standard_battery() -> dict[str, VorticityField]:
    return {
        "far_square": VorticityField((Patch(rectangle(1, 2, 1, 2)),)),
        "profile_region": VorticityField((Patch(sample_omega_boundary(E_INV4, 128)),)),
        "corner_square": VorticityField((Patch(rectangle(0, 1, 0, 1)),)),
        "axis_rectangle": VorticityField((Patch(rectangle(0.05, 0.6, 0, 0.3)),)),
        "mixed_pair": VorticityField((
            Patch(regular_polygon((0.3, 0.25), 0.1)),
            Patch(rectangle(0.6, 0.9, 0.05, 0.35), strength=-0.5),
        )),
    }


def b_grid(n: int = 20, lo: float = 1e-3, hi: float = 0.45) -> np.ndarray:
    g = np.geomspace(lo, hi, n)
    x1, x2 = np.meshgrid(g, g, indexing="ij")
    return np.column_stack([x1.ravel(), x2.ravel()])


def b_samples(field: VorticityField, points, quad: QuadratureSpec | None = None) -> np.ndarray:
    """Rows ``(x1, x2, b1, b2, w1, w2)`` with ``w_j = 1 + ln((x1+x2)/x_j)``."""
    u = velocity_batch(field, points)
    rows = []
    for x, ux in zip(points, u):
        b1, b2 = extract_b(field, x, quad, velocity=ux)
        w1, w2 = remainder_weight(x)
        rows.append((x[0], x[1], b1, b2, w1, w2))
    return np.array(rows)


def fit_remainder_constant(fields=None, points=None, quad: QuadratureSpec | None = None,
                       safety: float = C_SAFETY):
    """``safety * max |b_j| / (1 + ln((x1+x2)/x_j))`` over fields and points.

    Returns ``(C_fit, samples)`` where ``samples`` maps field names to the
    arrays from :func:`b_samples`.
    """
    fields = standard_battery() if fields is None else fields
    points = b_grid() if points is None else points
    samples = {name: b_samples(f, points, quad) for name, f in fields.items()}
    worst = max(float(np.max(np.abs(s[:, 2:4]) / s[:, 4:6])) for s in samples.values())
    return safety * worst, samples


def remainder_constant(C_fit: float) -> float:
    """The constant handed to the profile formulas, which require ``C >= 1``."""
    return max(1.0, C_fit)


__all__ = ["standard_battery", "b_grid", "b_samples", "fit_remainder_constant",
           "remainder_constant", "rectangle", "regular_polygon", "C_SAFETY"]
