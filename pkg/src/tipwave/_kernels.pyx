# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled leapfrog stepping kernel.

Mirrors ``tipwave._kernels_py.step_field`` expression by expression so
that both backends produce bit-identical trajectories (the build turns
FMA contraction off for the same reason).
"""

LEFT_DIRICHLET_ZERO = 0
LEFT_ROBIN = 1
RIGHT_TIP_MASS = 0
RIGHT_DIRICHLET_VALUE = 1


def step_field(double[::1] prev, double[::1] curr, double[::1] out,
               double r, double dx, double dt,
               int left_kind, double ext, double gamma, double beta,
               int right_kind, double right_input, double m):
    """Advance one field by one leapfrog step, boundaries included.

    left_kind 0: pinned zero; 1: Robin u_x(0)=gamma*u_t(0)+beta*u(0)+ext.
    right_kind 0: tip mass with boundary input right_input (= U+F);
    1: pin node to right_input.
    """
    cdef Py_ssize_t n = curr.shape[0]
    cdef Py_ssize_t j
    cdef double r2 = r * r
    for j in range(1, n - 1):
        out[j] = 2.0 * curr[j] - prev[j] + r2 * (curr[j + 1] - 2.0 * curr[j] + curr[j - 1])
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
