"""Pure-NumPy fallback for the leapfrog stepping kernel.

Keep every arithmetic expression in the same shape as in
``_kernels.pyx``: the two backends are required to agree bit for bit.
"""

from __future__ import annotations

LEFT_DIRICHLET_ZERO = 0
LEFT_ROBIN = 1
RIGHT_TIP_MASS = 0
RIGHT_DIRICHLET_VALUE = 1


def step_field(prev, curr, out, r, dx, dt,
               left_kind, ext, gamma, beta,
               right_kind, right_input, m):
    """Advance one field by one leapfrog step, boundaries included."""
    n = curr.shape[0]
    r2 = r * r
    out[1:-1] = 2.0 * curr[1:-1] - prev[1:-1] + r2 * (curr[2:] - 2.0 * curr[1:-1] + curr[:-2])
    if left_kind == LEFT_ROBIN:
        out[0] = (2.0 * (curr[1] - curr[0]) + (2.0 * curr[0] - prev[0]) / r2
                  + (gamma / r) * prev[0] - 2.0 * dx * beta * curr[0]
                  - 2.0 * dx * ext) / (1.0 / r2 + gamma / r)
    else:
        out[0] = 0.0
    if right_kind == RIGHT_TIP_MASS:
        out[n - 1] = (2.0 * curr[n - 1] - prev[n - 1]
                      + dt * dt * (right_input - (curr[n - 1] - curr[n - 2]) / dx)
                      / (m + 0.5 * dx))
    else:
        out[n - 1] = right_input
