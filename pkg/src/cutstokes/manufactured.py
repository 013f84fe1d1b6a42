"""Closed-form exact Stokes fields used by the error studies.

u = (cos(pi x) sin(pi y), -sin(pi x) cos(pi y)) is divergence free and its
symmetric gradient is diagonal; p = (y-1/2) cos(2 pi x) + (x-1/2) sin(2 pi y)
has zero mean over the fluid region for the centered circle by symmetry.
"""

from dataclasses import dataclass

import numpy as np

PI = np.pi


def velocity(x):
    x = np.asarray(x, float)
    u1 = np.cos(PI * x[..., 0]) * np.sin(PI * x[..., 1])
    u2 = -np.sin(PI * x[..., 0]) * np.cos(PI * x[..., 1])
    return np.stack([u1, u2], axis=-1)


def velocity_gradient(x):
    """grad u with components [i, j] = d u_i / d x_j."""
    x = np.asarray(x, float)
    sx, cx = np.sin(PI * x[..., 0]), np.cos(PI * x[..., 0])
    sy, cy = np.sin(PI * x[..., 1]), np.cos(PI * x[..., 1])
    g = np.empty(x.shape[:-1] + (2, 2))
    g[..., 0, 0] = -PI * sx * sy
    g[..., 0, 1] = PI * cx * cy
    g[..., 1, 0] = -PI * cx * cy
    g[..., 1, 1] = PI * sx * sy
    return g


def pressure(x):
    x = np.asarray(x, float)
    return (x[..., 1] - 0.5) * np.cos(2 * PI * x[..., 0]) \
        + (x[..., 0] - 0.5) * np.sin(2 * PI * x[..., 1])


def pressure_gradient(x):
    x = np.asarray(x, float)
    gx = -2 * PI * (x[..., 1] - 0.5) * np.sin(2 * PI * x[..., 0]) \
        + np.sin(2 * PI * x[..., 1])
    gy = np.cos(2 * PI * x[..., 0]) \
        + 2 * PI * (x[..., 0] - 0.5) * np.cos(2 * PI * x[..., 1])
    return np.stack([gx, gy], axis=-1)


def body_force(x, nu=1.0):
    """f = -nu * Laplacian(u) + grad p, derived by hand from the closed forms."""
    x = np.asarray(x, float)
    lap1 = -2 * PI**2 * np.cos(PI * x[..., 0]) * np.sin(PI * x[..., 1])
    lap2 = 2 * PI**2 * np.sin(PI * x[..., 0]) * np.cos(PI * x[..., 1])
    lap = np.stack([lap1, lap2], axis=-1)
    return -nu * lap + pressure_gradient(x)


def traction(x, normal, nu=1.0):
    """lambda = sigma(u, p) n = 2 nu D(u) n - p n."""
    g = velocity_gradient(x)
    d = 0.5 * (g + np.swapaxes(g, -1, -2))
    sn = 2.0 * nu * np.einsum("...ij,...j->...i", d, normal)
    return sn - pressure(x)[..., None] * np.asarray(normal)


@dataclass(frozen=True)
class ManufacturedSolution:
    """Bundle of the exact fields with the viscosity baked into f and lambda."""

    nu: float = 1.0

    def u(self, x):
        return velocity(x)

    def grad_u(self, x):
        return velocity_gradient(x)

    def p(self, x):
        return pressure(x)

    def f(self, x):
        return body_force(x, self.nu)

    def g(self, x):
        return velocity(x)

    def lam(self, x, normal):
        return traction(x, normal, self.nu)
