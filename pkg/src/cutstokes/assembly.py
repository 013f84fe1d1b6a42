"""Assembly of the unstabilized and stabilized Stokes saddle-point systems.

The interface stabilization couples every pair of fields, so the blocks are
assembled as gamma-independent primitives (volume stiffness/divergence, the
plain multiplier trace coupling, and the six interface integrals of the
stress-matching term).  A SaddleSystem for any (nu, gamma0) is then a cheap
linear combination, which is what the gamma sweep exploits.
"""

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.io import mmwrite


@dataclass(frozen=True)
class StokesCoefficients:
    """Viscosity and stabilization scale; gamma = gamma0 * h."""

    nu: float = 1.0
    gamma0: float = 0.05

    def __post_init__(self):
        if self.nu <= 0.0:
            raise ValueError("viscosity must be positive")
        if self.gamma0 < 0.0:
            raise ValueError("gamma0 must be nonnegative")

    def gamma(self, h):
        return self.gamma0 * h


class SingularLayoutError(RuntimeError):
    """A retained multiplier row has no coupling at all."""


class _Coo:
    """COO accumulator that drops eliminated (-1) dofs."""

    def __init__(self, nrows, ncols):
        self.shape = (nrows, ncols)
        self.rows, self.cols, self.vals = [], [], []

    def add(self, rows, cols, vals):
        rows = np.broadcast_to(rows, vals.shape).ravel()
        cols = np.broadcast_to(cols, vals.shape).ravel()
        vals = np.ascontiguousarray(vals).ravel()
        mask = (rows >= 0) & (cols >= 0)
        self.rows.append(rows[mask].astype(np.int64))
        self.cols.append(cols[mask].astype(np.int64))
        self.vals.append(vals[mask])

    def tocsr(self):
        if not self.rows:
            return sp.csr_matrix(self.shape)
        rows = np.concatenate(self.rows)
        cols = np.concatenate(self.cols)
        vals = np.concatenate(self.vals)
        return sp.coo_matrix((vals, (rows, cols)), shape=self.shape).tocsr()


class _Vec:
    def __init__(self, n):
        self.v = np.zeros(n)

    def add(self, idx, vals):
        idx = np.broadcast_to(idx, vals.shape).ravel()
        vals = np.ascontiguousarray(vals).ravel()
        mask = idx >= 0
        np.add.at(self.v, idx[mask], vals[mask])


def _masked_take(vec, idx):
    out = vec[np.clip(idx, 0, None)]
    out[idx < 0] = 0.0
    return out


def _strain_normal(gp, normal):
    """(D(phi_a e_o) n)_k at each surface point: 0.5*(delta_ok grad.n + n_o grad_k)."""
    gn = np.einsum("sak,sk->sa", gp, normal)
    eye = np.eye(2)
    return 0.5 * (np.einsum("sa,ok->saok", gn, eye)
                  + np.einsum("so,sak->saok", normal, gp))


@dataclass
class StokesPrimitives:
    """gamma- and nu-independent pieces of the stabilized system."""

    n_u: int
    n_p: int
    n_lam: int
    K_vol: sp.csr_matrix = field(repr=False)   # 2 int_F D(phi):D(phi)
    B_vol: sp.csr_matrix = field(repr=False)   # -int_F chi div(phi)
    C_tr: sp.csr_matrix = field(repr=False)    # -int_G phi . psi
    S_dd: sp.csr_matrix = field(repr=False)    # int_G (D phi n).(D phi n)
    S_dn: sp.csr_matrix = field(repr=False)    # int_G chi (D phi n . n)
    S_dpsi: sp.csr_matrix = field(repr=False)  # int_G (D phi n).psi
    M_pp: sp.csr_matrix = field(repr=False)    # int_G chi chi
    M_pl: sp.csr_matrix = field(repr=False)    # int_G chi (psi . n)
    M_ll: sp.csr_matrix = field(repr=False)    # int_G psi . psi
    z: np.ndarray = field(repr=False)          # int_F chi
    F: np.ndarray = field(repr=False)          # int_F f . phi
    G: np.ndarray = field(repr=False)          # -int_G g . psi
    # actions of the block primitives on the prescribed box-boundary velocity;
    # the eliminated Dirichlet columns are moved to the rhs with these vectors
    c_K: np.ndarray = field(repr=False)
    c_Sdd: np.ndarray = field(repr=False)
    c_B: np.ndarray = field(repr=False)
    c_Sdn: np.ndarray = field(repr=False)
    c_C: np.ndarray = field(repr=False)
    c_Sdp: np.ndarray = field(repr=False)


def boundary_velocity_values(disc, ubc):
    """Prescribed nodal velocity values on the outer box boundary.

    Returns an (n_nodes, 2) array, zero away from the boundary.
    """
    vel = disc.layout.velocity
    vals = np.zeros((len(vel.coords), 2))
    if ubc is not None and vel.boundary.any():
        vals[vel.boundary] = ubc(vel.coords[vel.boundary])
    return vals


def assemble_primitives(disc, f, g, ubc=None):
    """Integrate all block primitives over the trimmed quadrature.

    `ubc` is the prescribed velocity on the outer box boundary (None means
    homogeneous); its eliminated columns are folded into correction vectors.
    """
    layout = disc.layout
    n_u, n_p, n_lam = layout.n_u, layout.n_p, layout.n_lam
    K = _Coo(n_u, n_u)
    B = _Coo(n_u, n_p)
    C = _Coo(n_u, n_lam)
    Sdd = _Coo(n_u, n_u)
    Sdn = _Coo(n_u, n_p)
    Sdp = _Coo(n_u, n_lam)
    Mpp = _Coo(n_p, n_p)
    Mpl = _Coo(n_p, n_lam)
    Mll = _Coo(n_lam, n_lam)
    zv = _Vec(n_p)
    Fv = _Vec(n_u)
    Gv = _Vec(n_lam)
    eye = np.eye(2)
    cK, cSdd = _Vec(n_u), _Vec(n_u)
    cB, cSdn = _Vec(n_p), _Vec(n_p)
    cC, cSdp = _Vec(n_lam), _Vec(n_lam)
    ubc_nodal = boundary_velocity_values(disc, ubc)
    lifting = bool(np.any(ubc_nodal))
    # batch indices are global system slots; shift p and lambda to block-local
    pshift, lshift = n_u, n_u + n_p

    def ploc(psys):
        return np.where(psys >= 0, psys - pshift, -1)

    def ubc_local(elems):
        nodes = disc.layout.velocity.elem2node[elems]
        return ubc_nodal[nodes].reshape(len(elems), -1)

    for b in disc.volume_batches():
        nu_loc = b.uval.shape[1]
        w, gp = b.w, b.ugrad
        G1 = np.einsum("q,qak,qbk->ab", w, gp, gp)
        T = np.einsum("q,qai,qbj->aibj", w, gp, gp)
        Kloc = np.einsum("ab,op->aobp", G1, eye) + T.transpose(0, 3, 2, 1)
        Kloc = Kloc.reshape(2 * nu_loc, 2 * nu_loc)
        Bloc = -np.einsum("q,qj,qao->aoj", w, b.pval, gp)
        Bloc = Bloc.reshape(2 * nu_loc, -1)
        zloc = np.einsum("q,qj->j", w, b.pval)

        ur = b.usys.reshape(len(b.elems), 2 * nu_loc)
        K.add(ur[:, :, None], ur[:, None, :],
              np.broadcast_to(Kloc, (len(b.elems),) + Kloc.shape))
        B.add(ur[:, :, None], ploc(b.psys)[:, None, :],
              np.broadcast_to(Bloc, (len(b.elems),) + Bloc.shape))
        zv.add(ploc(b.psys), np.broadcast_to(zloc, b.psys.shape))

        fx = f(b.x)
        Floc = np.einsum("q,eqo,qa->eao", w, fx, b.uval)
        Fv.add(b.usys, Floc)

        if lifting:
            ub = ubc_local(b.elems)
            cK.add(ur, ub @ Kloc.T)
            cB.add(ploc(b.psys), ub @ Bloc)

    for b in disc.surface_batches():
        nu_loc = b.uval.shape[1]
        w = b.w
        dn = _strain_normal(b.ugrad, b.normal)
        ur = b.usys.reshape(2 * nu_loc)
        pl = ploc(b.psys)
        ll = b.lamsys - lshift if len(b.lamsys) else b.lamsys

        Sloc = np.einsum("s,saok,sbpk->aobp", w, dn, dn).reshape(2 * nu_loc,
                                                                 2 * nu_loc)
        Sdd.add(ur[:, None], ur[None, :], Sloc)

        dnn = np.einsum("saok,sk->sao", dn, b.normal)
        Snloc = np.einsum("s,sj,sao->aoj", w, b.pval, dnn).reshape(2 * nu_loc, -1)
        Sdn.add(ur[:, None], pl[None, :], Snloc)

        Mploc = np.einsum("s,si,sj->ij", w, b.pval, b.pval)
        Mpp.add(pl[:, None], pl[None, :], Mploc)

        if len(b.lamsys):
            # multiplier basis is the constant unit vector e_c on the chord
            Sploc = np.einsum("s,saoc->aoc", w, dn).reshape(2 * nu_loc, 2)
            Sdp.add(ur[:, None], ll[None, :], Sploc)

            trace = np.einsum("s,sa->a", w, b.uval)
            Cloc = np.einsum("a,oc->aoc", -trace, eye).reshape(2 * nu_loc, 2)
            C.add(ur[:, None], ll[None, :], Cloc)

            Mplloc = np.einsum("s,sj,sc->jc", w, b.pval, b.normal)
            Mpl.add(pl[:, None], ll[None, :], Mplloc)

            Mll.add(ll, ll, np.full(2, w.sum()))

            gx = g(b.x)
            Gv.add(ll, -np.einsum("s,sc->c", w, gx))

        if lifting:
            ub = ubc_local(np.array([b.elem]))[0]
            cSdd.add(ur, Sloc @ ub)
            cSdn.add(pl, Snloc.T @ ub)
            if len(b.lamsys):
                cC.add(ll, Cloc.T @ ub)
                cSdp.add(ll, Sploc.T @ ub)

    return StokesPrimitives(
        n_u=n_u, n_p=n_p, n_lam=n_lam,
        K_vol=K.tocsr(), B_vol=B.tocsr(), C_tr=C.tocsr(),
        S_dd=Sdd.tocsr(), S_dn=Sdn.tocsr(), S_dpsi=Sdp.tocsr(),
        M_pp=Mpp.tocsr(), M_pl=Mpl.tocsr(), M_ll=Mll.tocsr(),
        z=zv.v, F=Fv.v, G=Gv.v,
        c_K=cK.v, c_Sdd=cSdd.v, c_B=cB.v, c_Sdn=cSdn.v,
        c_C=cC.v, c_Sdp=cSdp.v)


@dataclass
class SaddleSystem:
    """Assembled symmetric block system over (U, P, Lambda, zero-mean m)."""

    prims: StokesPrimitives
    coeffs: StokesCoefficients
    h: float
    A_uu: sp.csr_matrix = field(repr=False, default=None)
    A_up: sp.csr_matrix = field(repr=False, default=None)
    A_ul: sp.csr_matrix = field(repr=False, default=None)
    A_pp: sp.csr_matrix = field(repr=False, default=None)
    A_pl: sp.csr_matrix = field(repr=False, default=None)
    A_ll: sp.csr_matrix = field(repr=False, default=None)

    def __post_init__(self):
        nu = self.coeffs.nu
        gamma = self.coeffs.gamma(self.h)
        p = self.prims
        self.A_uu = (nu * p.K_vol - 4.0 * nu**2 * gamma * p.S_dd).tocsr()
        self.A_up = (p.B_vol + 2.0 * nu * gamma * p.S_dn).tocsr()
        self.A_ul = (p.C_tr + 2.0 * nu * gamma * p.S_dpsi).tocsr()
        self.A_pp = (-gamma * p.M_pp).tocsr()
        self.A_pl = (-gamma * p.M_pl).tocsr()
        self.A_ll = (-gamma * p.M_ll).tocsr()
        self._check_multiplier_rows()

    def _check_multiplier_rows(self):
        if self.prims.n_lam == 0:
            return
        coupling = np.asarray(abs(self.A_ul).sum(axis=0)).ravel() \
            + np.asarray(abs(self.A_ll).sum(axis=1)).ravel()
        if np.any(coupling == 0.0):
            bad = int(np.flatnonzero(coupling == 0.0)[0])
            raise SingularLayoutError(f"multiplier row {bad} is identically zero")

    @property
    def sizes(self):
        p = self.prims
        return p.n_u, p.n_p, p.n_lam

    @property
    def size(self):
        return self.prims.n_u + self.prims.n_p + self.prims.n_lam + 1

    @cached_property
    def matrix(self):
        p = self.prims
        zcol = sp.csr_matrix(p.z.reshape(-1, 1))
        return sp.bmat(
            [[self.A_uu, self.A_up, self.A_ul, None],
             [self.A_up.T, self.A_pp, self.A_pl, zcol],
             [self.A_ul.T, self.A_pl.T, self.A_ll, None],
             [None, zcol.T, None, None]], format="csc")

    @property
    def rhs(self):
        p = self.prims
        nu = self.coeffs.nu
        gamma = self.coeffs.gamma(self.h)
        # eliminated Dirichlet columns moved to the right-hand side
        ru = p.F - (nu * p.c_K - 4.0 * nu**2 * gamma * p.c_Sdd)
        rp = -(p.c_B + 2.0 * nu * gamma * p.c_Sdn)
        rl = p.G - (p.c_C + 2.0 * nu * gamma * p.c_Sdp)
        return np.concatenate([ru, rp, rl, [0.0]])

    def with_gamma0(self, gamma0):
        return SaddleSystem(prims=self.prims,
                            coeffs=replace(self.coeffs, gamma0=gamma0),
                            h=self.h)

    def split(self, x):
        p = self.prims
        return (x[:p.n_u], x[p.n_u:p.n_u + p.n_p],
                x[p.n_u + p.n_p:p.n_u + p.n_p + p.n_lam], x[-1])

    def export_matrixmarket(self, path):
        mmwrite(str(path), self.matrix.tocoo())

    def export_rhs(self, path):
        np.savetxt(str(path), self.rhs)


def assemble(disc, coeffs, f, g, ubc=None):
    """Assemble the (stabilized when gamma0 > 0) saddle system."""
    prims = assemble_primitives(disc, f, g, ubc=ubc)
    return SaddleSystem(prims=prims, coeffs=coeffs, h=disc.h)


def apply_compact_form(disc, system, x, y):
    """Evaluate the stabilized bilinear form by direct re-integration.

    Decodes both system vectors into fields, integrates the compact form
    plus the zero-mean coupling, and should match x^T A y.  This is the
    dual-path cross-check of the assembly.
    """
    if len(x) != system.size or len(y) != system.size:
        raise ValueError("vector length does not match the system")
    nu = system.coeffs.nu
    gamma = system.coeffs.gamma(system.h)
    Ux, Px, Lx, mx = system.split(np.asarray(x, float))
    Uy, Py, Ly, my = system.split(np.asarray(y, float))
    zshift = system.prims.n_u
    total = 0.0

    def vol_fields(b, U, P):
        Ue = _masked_take(U, b.usys)
        Pe = _masked_take(P, b.psys - zshift)
        grad = np.einsum("qak,eao->eqok", b.ugrad, Ue)
        div = grad[..., 0, 0] + grad[..., 1, 1]
        ph = np.einsum("qj,ej->eq", b.pval, Pe)
        return grad, div, ph

    for b in disc.volume_batches():
        gx, divx, phx = vol_fields(b, Ux, Px)
        gy, divy, phy = vol_fields(b, Uy, Py)
        Dx = 0.5 * (gx + np.swapaxes(gx, -1, -2))
        Dy = 0.5 * (gy + np.swapaxes(gy, -1, -2))
        total += 2.0 * nu * np.einsum("q,eqok,eqok->", b.w, Dx, Dy)
        total -= np.einsum("q,eq,eq->", b.w, phx, divy)
        total -= np.einsum("q,eq,eq->", b.w, phy, divx)

    for b in disc.surface_batches():
        Uex = _masked_take(Ux, b.usys)
        Uey = _masked_take(Uy, b.usys)
        uhx = np.einsum("sa,ao->so", b.uval, Uex)
        uhy = np.einsum("sa,ao->so", b.uval, Uey)
        dn = _strain_normal(b.ugrad, b.normal)
        dnx = np.einsum("saok,ao->sk", dn, Uex)
        dny = np.einsum("saok,ao->sk", dn, Uey)
        phx = np.einsum("sj,j->s", b.pval, _masked_take(Px, b.psys - zshift))
        phy = np.einsum("sj,j->s", b.pval, _masked_take(Py, b.psys - zshift))
        if len(b.lamsys):
            lshift = system.prims.n_u + system.prims.n_p
            lamx = Lx[b.lamsys - lshift]
            lamy = Ly[b.lamsys - lshift]
        else:
            lamx = lamy = np.zeros(2)
        total -= np.einsum("s,so,o->", b.w, uhy, lamx)
        total -= np.einsum("s,so,o->", b.w, uhx, lamy)
        sx = 2.0 * nu * dnx - phx[:, None] * b.normal - lamx[None, :]
        sy = 2.0 * nu * dny - phy[:, None] * b.normal - lamy[None, :]
        total -= gamma * np.einsum("s,sk,sk->", b.w, sx, sy)

    total += mx * float(system.prims.z @ Py) + my * float(system.prims.z @ Px)
    return float(total)


def assemble_aux_matrices(disc):
    """Mass-type matrices for the stability-constant eigenvalue scans.

    Returns a dict with the velocity H1(F) matrix and strain-rate interface
    matrix, and the pressure masses over the fluid region and the interface.
    """
    layout = disc.layout
    n_u, n_p = layout.n_u, layout.n_p
    H1 = _Coo(n_u, n_u)
    DG = _Coo(n_u, n_u)
    MF = _Coo(n_p, n_p)
    MG = _Coo(n_p, n_p)
    eye = np.eye(2)

    def ploc(psys):
        return np.where(psys >= 0, psys - n_u, -1)

    for b in disc.volume_batches():
        nu_loc = b.uval.shape[1]
        w, gp, val = b.w, b.ugrad, b.uval
        G1 = np.einsum("q,qak,qbk->ab", w, gp, gp)
        M0 = np.einsum("q,qa,qb->ab", w, val, val)
        Hloc = np.einsum("ab,op->aobp", G1 + M0, eye).reshape(2 * nu_loc,
                                                              2 * nu_loc)
        ur = b.usys.reshape(len(b.elems), 2 * nu_loc)
        H1.add(ur[:, :, None], ur[:, None, :],
               np.broadcast_to(Hloc, (len(b.elems),) + Hloc.shape))
        Mploc = np.einsum("q,qi,qj->ij", w, b.pval, b.pval)
        pl = ploc(b.psys)
        MF.add(pl[:, :, None], pl[:, None, :],
               np.broadcast_to(Mploc, (len(b.elems),) + Mploc.shape))

    for b in disc.surface_batches():
        nu_loc = b.uval.shape[1]
        w, gp = b.w, b.ugrad
        G1 = np.einsum("s,sak,sbk->ab", w, gp, gp)
        T = np.einsum("s,sai,sbj->aibj", w, gp, gp)
        # D(phi_a e_o) : D(phi_b e_p) over the chord
        Dloc = 0.5 * (np.einsum("ab,op->aobp", G1, eye)
                      + T.transpose(0, 3, 2, 1))
        Dloc = Dloc.reshape(2 * nu_loc, 2 * nu_loc)
        ur = b.usys.reshape(2 * nu_loc)
        DG.add(ur[:, None], ur[None, :], Dloc)
        Mploc = np.einsum("s,si,sj->ij", w, b.pval, b.pval)
        pl = ploc(b.psys)
        MG.add(pl[:, None], pl[None, :], Mploc)

    return {"H1_vel": H1.tocsr(), "strain_gamma_vel": DG.tocsr(),
            "mass_fluid_pr": MF.tocsr(), "mass_gamma_pr": MG.tocsr()}
