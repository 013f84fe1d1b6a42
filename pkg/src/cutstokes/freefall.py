"""Quasi-static free fall of a rigid ball: Stokes drag + semi-implicit ODE.

The ball moves only vertically; at each (re)computation the stabilized
Stokes problem with g = (0, 1) on the current interface and u = 0 on the
box gives the drag coefficient alpha as the vertical component of the
multiplier integral.  The velocity update

    h2dot_next = (h2dot - 9.81 dt) / (1 + (alpha / M) dt)

is an unconditional contraction toward the terminal velocity -9.81 M / alpha.
"""

import csv
from dataclasses import dataclass, replace

import numpy as np

from .assembly import StokesCoefficients, assemble
from .discretization import Discretization
from .geometry import CircleLevelSet, ElementTag, build_mesh
from .harness import nodal_fields
from .solver import solve
from .vtk_io import vertex_values, write_vtk

GRAVITY = 9.81

TRAJECTORY_FIELDS = ("t", "h2", "h2dot", "alpha", "status")


class DragSignError(RuntimeError):
    """The computed drag coefficient was not positive."""


@dataclass(frozen=True)
class RigidBallState:
    t: float
    h2: float
    h2dot: float


@dataclass(frozen=True)
class FreefallConfig:
    n: int = 20
    dt: float = 1e-3
    t_end: float = 0.5
    mass: float = 0.02
    nu: float = 1.0
    gamma0: float = 0.05
    radius: float = 0.21
    x_c: float = 0.5
    h2_start: float = 0.75
    recompute_every: int = 1
    triplet: str = "p2_p1_p0"
    gravity: float = GRAVITY

    def __post_init__(self):
        if min(self.dt, self.t_end, self.mass, self.nu, self.radius) <= 0:
            raise ValueError("dt, t_end, mass, nu and radius must be positive")
        if self.recompute_every < 1:
            raise ValueError("recompute cadence must be at least 1")


def _solve_unit_problem(cfg, h2):
    """Stabilized solve with g = (0,1) on the ball, u = 0 on the box."""
    mesh = build_mesh(cfg.n, "triangle" if cfg.triplet.startswith("p")
                      else "quad")
    ls = CircleLevelSet((cfg.x_c, h2), cfg.radius)
    disc = Discretization(mesh, ls, cfg.triplet)
    coeffs = StokesCoefficients(nu=cfg.nu, gamma0=cfg.gamma0)

    def zero(x):
        return np.zeros(np.asarray(x).shape)

    def g_unit(x):
        out = np.zeros(np.asarray(x).shape)
        out[..., 1] = 1.0
        return out

    system = assemble(disc, coeffs, zero, g_unit)
    x, _ = solve(system)
    return disc, system, x


def multiplier_force(disc, system, x):
    """Integral of the discrete traction over the interface, (2,) vector."""
    lshift = system.prims.n_u + system.prims.n_p
    _, _, Lam, _ = system.split(x)
    force = np.zeros(2)
    for b in disc.surface_batches():
        if len(b.lamsys):
            force += b.w.sum() * Lam[b.lamsys - lshift]
    return force


def volume_force(disc, system, x):
    """Dual force evaluation: a(u, w) + b(w, p) for a lifted test field.

    w is the finite-element field equal to e2 at every velocity node of a
    cut element or inside the solid and zero elsewhere; by partition of
    unity w = e2 exactly on the interface, so the Galerkin residual makes
    this an independent estimate of the vertical traction integral.
    """
    vel = disc.layout.velocity
    wnod = np.zeros((len(vel.coords), 2))
    cut_nodes = vel.elem2node[disc.tags == ElementTag.CUT].ravel()
    wnod[cut_nodes, 1] = 1.0
    wnod[disc.ls.value(vel.coords) < 0.0, 1] = 1.0
    Unodal, Pnodal = nodal_fields(disc, x, system)
    pre = disc.layout.pressure
    nu = system.coeffs.nu
    total = 0.0
    for b in disc.volume_batches():
        Ue = Unodal[vel.elem2node[b.elems]]
        We = wnod[vel.elem2node[b.elems]]
        gU = np.einsum("qak,eao->eqok", b.ugrad, Ue)
        gW = np.einsum("qak,eao->eqok", b.ugrad, We)
        DU = 0.5 * (gU + np.swapaxes(gU, -1, -2))
        DW = 0.5 * (gW + np.swapaxes(gW, -1, -2))
        total += 2.0 * nu * np.einsum("q,eqok,eqok->", b.w, DU, DW)
        ph = np.einsum("qj,ej->eq", b.pval, Pnodal[pre.elem2node[b.elems]])
        divW = gW[..., 0, 0] + gW[..., 1, 1]
        total -= np.einsum("q,eq,eq->", b.w, ph, divW)
    return total


def drag_alpha(cfg, h2, check_sign=True):
    """Drag coefficient at ball height h2 from the multiplier integral."""
    disc, system, x = _solve_unit_problem(cfg, h2)
    raw = multiplier_force(disc, system, x)[1]
    alpha = abs(raw)
    if check_sign and alpha <= 0.0:
        raise DragSignError(f"drag coefficient {raw} is not positive")
    return alpha


def step(state, dt, alpha, mass, gravity=GRAVITY):
    """Semi-implicit update; exact reductions at alpha = 0 and at the
    terminal velocity are unit-test anchors."""
    v = (state.h2dot - gravity * dt) / (1.0 + (alpha / mass) * dt)
    return RigidBallState(t=state.t + dt, h2=state.h2 + dt * v, h2dot=v)


def terminal_velocity(alpha, mass, gravity=GRAVITY):
    return -gravity * mass / alpha


def simulate(cfg, vtk_every=0, output_dir=None):
    """Run the fall until t_end or wall clearance < one element diameter.

    Returns the trajectory as a list of row dicts following
    TRAJECTORY_FIELDS; alpha is refreshed every cfg.recompute_every steps.
    """
    mesh_h = np.sqrt(2.0) / cfg.n
    state = RigidBallState(t=0.0, h2=cfg.h2_start, h2dot=0.0)
    alpha = drag_alpha(cfg, state.h2)
    rows = [_row(state, alpha, "ok")]
    n_steps = int(round(cfg.t_end / cfg.dt))
    for k in range(1, n_steps + 1):
        if k > 1 and (k - 1) % cfg.recompute_every == 0:
            alpha = drag_alpha(cfg, state.h2)
        state = step(state, cfg.dt, alpha, cfg.mass, cfg.gravity)
        if state.h2 - cfg.radius < mesh_h:
            rows.append(_row(state, alpha, "contact"))
            break
        rows.append(_row(state, alpha, "ok"))
        if vtk_every and output_dir is not None and k % vtk_every == 0:
            _snapshot(cfg, state, output_dir, k)
    return rows


def _row(state, alpha, status):
    return {"t": format(state.t, ".12g"), "h2": format(state.h2, ".12g"),
            "h2dot": format(state.h2dot, ".12g"),
            "alpha": format(alpha, ".12g"), "status": status}


def _snapshot(cfg, state, output_dir, k):
    disc, system, x = _solve_unit_problem(cfg, state.h2)
    Unodal, Pnodal = nodal_fields(disc, x, system)
    # scale the unit-data solution by the current fall speed
    Unodal = Unodal * state.h2dot
    speed = np.hypot(Unodal[:, 0], Unodal[:, 1])
    umag = vertex_values(disc.layout.velocity, disc.mesh, speed)
    pres = vertex_values(disc.layout.pressure, disc.mesh,
                         Pnodal * state.h2dot) \
        if disc.layout.pressure.coords.shape[0] else None
    data = {"velocity_magnitude": umag}
    if pres is not None and disc.triplet.pressure.continuous:
        data["pressure"] = pres
    write_vtk(f"{output_dir}/freefall_{k:06d}.vtk", disc.mesh,
              point_data=data)


def write_trajectory(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=TRAJECTORY_FIELDS,
                                lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
