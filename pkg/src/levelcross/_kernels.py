"""Compiled inner loops for the segment Hamiltonian and Crank-Nicolson stepping."""
import math

import numpy as np
from numba import njit

# diagonal value given to nodes that are switched off (outside the wall, or the
# barrier node during full separation); far above any retained level
PARK = 1.0e8
SPLIT_TOL = 1.0e-8


@njit(cache=True)
def assemble(n, dx, j0, a, alpha, sign, diag, off, active):
    """Fill the tridiagonal Hamiltonian for right-wall position ``a`` and barrier ``alpha``.

    Node j (0-based) sits at x = -1 + (j+1)*dx; node ``j0`` is x = 0.
    ``off[j]`` couples nodes j and j+1.
    """
    inv = 1.0 / (dx * dx)
    for j in range(n):
        active[j] = True
        if j < j0:
            diag[j] = 2.0 * inv - 1.0
        elif j == j0:
            diag[j] = 2.0 * inv - 0.5
        else:
            diag[j] = 2.0 * inv
    for j in range(n - 1):
        off[j] = -inv

    if alpha >= 1.0 - SPLIT_TOL:
        diag[j0] = PARK
        active[j0] = False
        off[j0 - 1] = 0.0
        off[j0] = 0.0
    elif alpha > 0.0:
        diag[j0] += sign * alpha / (1.0 - alpha) / dx

    # sub-cell Dirichlet wall: the last active node J lies a distance
    # theta*dx inside the wall, with theta >= theta_min; the ghost value
    # beyond it is the linear extrapolation to zero at x = a
    theta_min = 1.0 / (PARK * dx * dx - 1.0)
    J = int(math.floor((a + 1.0 - theta_min * dx) / dx)) - 1
    if J > n - 1:
        J = n - 1
    theta = (a + 1.0) / dx - (J + 1)
    diag[J] = (1.0 + 1.0 / theta) * inv
    for j in range(J + 1, n):
        diag[j] = PARK
        active[j] = False
    for j in range(J, n - 1):
        off[j] = 0.0


@njit(cache=True)
def cn_run(psi, dx, j0, sign, a_mid, alpha_mid, dt):
    """Advance ``psi`` in place by one Crank-Nicolson step per entry of ``a_mid``.

    Each step solves (1 + i dt H/2) psi' = (1 - i dt H/2) psi with H frozen
    at the step midpoint, by the Thomas algorithm.
    """
    n = psi.size
    diag = np.empty(n)
    off = np.empty(n - 1)
    active = np.empty(n, dtype=np.bool_)
    rhs = np.empty(n, dtype=np.complex128)
    cp = np.empty(n, dtype=np.complex128)
    h = 0.5j * dt
    for s in range(a_mid.size):
        assemble(n, dx, j0, a_mid[s], alpha_mid[s], sign, diag, off, active)
        for j in range(n):
            v = diag[j] * psi[j]
            if j > 0:
                v += off[j - 1] * psi[j - 1]
            if j < n - 1:
                v += off[j] * psi[j + 1]
            rhs[j] = psi[j] - h * v
        # forward sweep
        b = 1.0 + h * diag[0]
        cp[0] = h * off[0] / b
        rhs[0] = rhs[0] / b
        for j in range(1, n):
            lo = h * off[j - 1]
            b = 1.0 + h * diag[j] - lo * cp[j - 1]
            if j < n - 1:
                cp[j] = h * off[j] / b
            rhs[j] = (rhs[j] - lo * rhs[j - 1]) / b
        psi[n - 1] = rhs[n - 1]
        for j in range(n - 2, -1, -1):
            psi[j] = rhs[j] - cp[j] * psi[j + 1]
