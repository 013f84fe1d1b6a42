"""Manufactured-solution error studies: convergence, sweeps, assumption scan.

All error norms are evaluated on the trimmed quadrature of the fluid region
and reported relative, in percent.  Experiments emit rows of the fixed
schema `triplet,n,h,gamma0,err_u_l2,err_u_h1,err_p_l2,err_lambda_l2,cond,
status` so every study shares one CSV writer.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .assembly import StokesCoefficients, assemble, assemble_aux_matrices
from .discretization import Discretization
from .geometry import CircleLevelSet, build_mesh
from .manufactured import ManufacturedSolution
from .solver import (SolveFailedError, condition_estimate, factorize,
                     generalized_eigmax, solve)

CSV_FIELDS = ("triplet", "n", "h", "gamma0", "err_u_l2", "err_u_h1",
              "err_p_l2", "err_lambda_l2", "cond", "status")


@dataclass(frozen=True)
class CaseConfig:
    triplet: str = "p2_p1_p0"
    n: int = 40
    gamma0: float = 0.05
    nu: float = 1.0
    center: tuple = (0.5, 0.5)
    radius: float = 0.21
    with_cond: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.radius <= 0.0 or self.radius >= 0.5:
            raise ValueError("radius must lie in (0, 0.5)")
        cx, cy = self.center
        if not (self.radius < cx < 1 - self.radius
                and self.radius < cy < 1 - self.radius):
            raise ValueError("circle must lie strictly inside the unit box")


@dataclass
class ErrorReport:
    triplet: str
    n: int
    h: float
    gamma0: float
    err_u_l2: float = np.nan
    err_u_h1: float = np.nan
    err_p_l2: float = np.nan
    err_lambda_l2: float = np.nan
    cond: float = np.nan
    status: str = "ok"
    dofs: int = 0

    def row(self):
        def fmt(v):
            return "nan" if np.isnan(v) else format(v, ".12g")

        return {"triplet": self.triplet, "n": self.n, "h": fmt(self.h),
                "gamma0": fmt(self.gamma0), "err_u_l2": fmt(self.err_u_l2),
                "err_u_h1": fmt(self.err_u_h1), "err_p_l2": fmt(self.err_p_l2),
                "err_lambda_l2": fmt(self.err_lambda_l2),
                "cond": fmt(self.cond), "status": self.status}


def write_csv(path, reports):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for r in reports:
            writer.writerow(r.row())


def nodal_fields(disc, x, system, ubc=None):
    """Expand a system vector into full nodal arrays (U (nn,2), P (np,))."""
    vel, pre = disc.layout.velocity, disc.layout.pressure
    U, P, _, _ = system.split(np.asarray(x, float))
    Unodal = np.zeros((len(vel.coords), 2))
    active = vel.index >= 0
    Unodal[active, 0] = U[2 * vel.index[active]]
    Unodal[active, 1] = U[2 * vel.index[active] + 1]
    if ubc is not None and vel.boundary.any():
        Unodal[vel.boundary] = ubc(vel.coords[vel.boundary])
    Pnodal = np.zeros(len(pre.coords))
    pact = pre.index >= 0
    Pnodal[pact] = P[pre.index[pact]]
    return Unodal, Pnodal


def compute_errors(disc, system, x, exact):
    """Relative percent errors of (u, p, lambda) against the closed forms.

    The discrete pressure carries the zero-mean normalization, so it is
    shifted by the fluid-mean mismatch before comparison (pressure is only
    determined up to a constant).
    """
    Unodal, Pnodal = nodal_fields(disc, x, system, ubc=exact.g)
    vel, pre = disc.layout.velocity, disc.layout.pressure

    num_u = den_u = num_g = den_g = 0.0
    p_mis = area = 0.0
    vol_data = []
    for b in disc.volume_batches():
        Ue = Unodal[vel.elem2node[b.elems]]
        uh = np.einsum("qa,eao->eqo", b.uval, Ue)
        gh = np.einsum("qak,eao->eqok", b.ugrad, Ue)
        ph = np.einsum("qj,ej->eq", b.pval, Pnodal[pre.elem2node[b.elems]])
        uex = exact.u(b.x)
        gex = exact.grad_u(b.x)
        pex = exact.p(b.x)
        num_u += np.einsum("q,eqo->", b.w, (uh - uex) ** 2)
        den_u += np.einsum("q,eqo->", b.w, uex ** 2)
        num_g += np.einsum("q,eqok->", b.w, (gh - gex) ** 2)
        den_g += np.einsum("q,eqok->", b.w, gex ** 2)
        p_mis += np.einsum("q,eq->", b.w, pex - ph)
        area += b.w.sum() * len(b.elems)
        vol_data.append((b, ph, pex))

    shift = p_mis / area
    num_p = den_p = 0.0
    for b, ph, pex in vol_data:
        num_p += np.einsum("q,eq->", b.w, (ph + shift - pex) ** 2)
        den_p += np.einsum("q,eq->", b.w, pex ** 2)

    lshift = system.prims.n_u + system.prims.n_p
    _, _, Lam, _ = system.split(np.asarray(x, float))
    num_l = den_l = 0.0
    for b in disc.surface_batches():
        lam_h = Lam[b.lamsys - lshift] if len(b.lamsys) else np.zeros(2)
        lam_ex = exact.lam(b.x, b.normal)
        num_l += np.einsum("s,sk->", b.w, (lam_h[None, :] - lam_ex) ** 2)
        den_l += np.einsum("s,sk->", b.w, lam_ex ** 2)

    pct = lambda num, den: 100.0 * np.sqrt(num / den)  # noqa: E731
    return (pct(num_u, den_u), pct(num_g, den_g), pct(num_p, den_p),
            pct(num_l, den_l))


def lambda_error_matrix_path(disc, system, x, exact):
    """Relative percent lambda error via the assembled interface mass matrix.

    ||lam_ex - lam_h||^2 = Lam' M_ll Lam - 2 Lam . b + c with b and c the
    moments of the closed-form traction over the chords; cross-checks the
    direct quadrature path of compute_errors.
    """
    lshift = system.prims.n_u + system.prims.n_p
    _, _, Lam, _ = system.split(np.asarray(x, float))
    b_mom = np.zeros(system.prims.n_lam)
    c = den = 0.0
    for b in disc.surface_batches():
        lam_ex = exact.lam(b.x, b.normal)
        c += np.einsum("s,sk->", b.w, lam_ex ** 2)
        den += np.einsum("s,sk->", b.w, lam_ex ** 2)
        if len(b.lamsys):
            b_mom[b.lamsys - lshift] = np.einsum("s,sk->k", b.w, lam_ex)
    quad = float(Lam @ (system.prims.M_ll @ Lam)) - 2.0 * float(Lam @ b_mom) + c
    return 100.0 * np.sqrt(max(quad, 0.0) / den)


def interpolate(disc, exact):
    """System vector holding the nodal interpolant of the exact fields.

    Vandermonde-solved per element so non-nodal enrichments (the bubble)
    are interpolated consistently; the multiplier takes the chord average
    of the closed-form traction.
    """
    layout = disc.layout
    x = np.zeros(layout.size)
    vel, pre = layout.velocity, layout.pressure

    V = disc.triplet.velocity.values(disc.triplet.velocity.nodes)
    Vinv = np.linalg.inv(V)
    coeffs = np.einsum("ab,nbo->nao", Vinv,
                       exact.u(vel.coords)[vel.elem2node])
    # scatter element-local coefficients to unknown slots (shared nodes get
    # identical values from every element)
    for e in range(len(vel.elem2node)):
        idx = vel.index[vel.elem2node[e]]
        ok = idx >= 0
        x[2 * idx[ok]] = coeffs[e, ok, 0]
        x[2 * idx[ok] + 1] = coeffs[e, ok, 1]

    pact = pre.index >= 0
    x[layout.n_u + pre.index[pact]] = exact.p(pre.coords[pact])

    for b in disc.surface_batches():
        if len(b.lamsys):
            lam_ex = exact.lam(b.x, b.normal)
            x[b.lamsys] = np.einsum("s,sk->k", b.w, lam_ex) / b.w.sum()
    return x


def build_case(cfg):
    mesh = build_mesh(cfg.n, "triangle" if cfg.triplet.startswith("p")
                      else "quad")
    ls = CircleLevelSet(np.asarray(cfg.center, float), cfg.radius)
    disc = Discretization(mesh, ls, cfg.triplet)
    exact = ManufacturedSolution(nu=cfg.nu)
    coeffs = StokesCoefficients(nu=cfg.nu, gamma0=cfg.gamma0)
    system = assemble(disc, coeffs, exact.f, exact.g, ubc=exact.g)
    return disc, exact, system


def run_case(cfg):
    """Assemble, solve and measure one configuration."""
    disc, exact, system = build_case(cfg)
    report = ErrorReport(triplet=cfg.triplet, n=cfg.n, h=disc.h,
                         gamma0=cfg.gamma0, dofs=system.size)
    try:
        lu = factorize(system.matrix)
        x, _ = solve(system, lu=lu)
    except SolveFailedError as exc:
        report.status = f"failed: {exc}"
        return report
    (report.err_u_l2, report.err_u_h1, report.err_p_l2,
     report.err_lambda_l2) = compute_errors(disc, system, x, exact)
    if cfg.with_cond:
        report.cond = condition_estimate(system.matrix, lu=lu)
    return report


def fit_orders(reports):
    """Least-squares convergence orders of each error column vs h."""
    ok = [r for r in reports if r.status == "ok"]
    if len(ok) < 2:
        raise ValueError("need at least two successful levels to fit orders")
    logh = np.log([r.h for r in ok])
    out = {}
    for name in ("err_u_l2", "err_u_h1", "err_p_l2", "err_lambda_l2"):
        err = np.array([getattr(r, name) for r in ok])
        out[name] = float(np.polyfit(logh, np.log(err), 1)[0])
    return out


def convergence_study(triplet="p2_p1_p0", gamma0=0.05, ns=(10, 20, 40, 80),
                      nu=1.0, with_cond=False):
    reports = [run_case(CaseConfig(triplet=triplet, n=n, gamma0=gamma0,
                                   nu=nu, with_cond=with_cond)) for n in ns]
    return reports, fit_orders(reports)


def gamma_sweep(triplet="p2_p1_p0", n=40, gamma0_grid=(1e-14, 1e-3, 1e-2,
                                                       0.05, 0.2, 1.0, 1e3),
                nu=1.0):
    """Sweep gamma0 at fixed mesh, reusing the assembled primitives."""
    cfg = CaseConfig(triplet=triplet, n=n, gamma0=gamma0_grid[0], nu=nu)
    disc, exact, system = build_case(cfg)
    reports = []
    for g0 in gamma0_grid:
        sysg = system.with_gamma0(g0)
        report = ErrorReport(triplet=triplet, n=n, h=disc.h, gamma0=g0,
                             dofs=sysg.size)
        try:
            lu = factorize(sysg.matrix)
            x, _ = solve(sysg, lu=lu)
            (report.err_u_l2, report.err_u_h1, report.err_p_l2,
             report.err_lambda_l2) = compute_errors(disc, sysg, x, exact)
            report.cond = condition_estimate(sysg.matrix, lu=lu)
        except SolveFailedError as exc:
            report.status = f"failed: {exc}"
        reports.append(report)
    return reports


def geometry_sweep(triplet="p2_p1_p0", n=20, xc_grid=None, gamma0s=(0.05, 0.0),
                   radius=0.21, nu=1.0):
    """lambda-error series over circle positions, one series per gamma0."""
    if xc_grid is None:
        xc_grid = np.round(np.arange(0.5, 0.7 + 1e-12, 0.005), 10)
    reports = []
    for xc in xc_grid:
        for g0 in gamma0s:
            reports.append(run_case(CaseConfig(
                triplet=triplet, n=n, gamma0=g0, nu=nu,
                center=(float(xc), 0.5), radius=radius)))
    return reports


def assumption_constants(triplet="p2_p1_p0", n=20, center=(0.5, 0.5),
                         radius=0.21, seed=0):
    """C_u(h), C_p(h): largest eigenvalues of the h-scaled trace pencils."""
    cfg = CaseConfig(triplet=triplet, n=n, center=center, radius=radius)
    disc, _, _ = build_case(cfg)
    aux = assemble_aux_matrices(disc)
    h = disc.h
    c_u = generalized_eigmax(h * aux["strain_gamma_vel"], aux["H1_vel"],
                             seed=seed)
    c_p = generalized_eigmax(h * aux["mass_gamma_pr"], aux["mass_fluid_pr"],
                             seed=seed)
    return float(c_u), float(c_p)


def assumption_scan(triplet="p2_p1_p0", ns=(10, 20, 40, 80), seed=0):
    out = []
    for n in ns:
        c_u, c_p = assumption_constants(triplet=triplet, n=n, seed=seed)
        h = np.sqrt(2.0) / n
        out.append({"n": n, "h": h, "C_u": c_u, "C_p": c_p,
                    "C_max": max(c_u, c_p)})
    return out
