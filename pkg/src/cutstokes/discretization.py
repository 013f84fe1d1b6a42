"""Ties mesh, level set, cut rules and dof layout into quadrature batches.

Assembly and error evaluation both walk the same batches: one vectorized
batch per congruence class of uncut fluid elements (the structured mesh has
at most two triangle orientations, all with identical Jacobians) and one
small batch per cut element.
"""

from dataclasses import dataclass, field

import numpy as np

from .dofs import build_layout, element_maps, prune_multiplier
from .elements import make_triplet
from .geometry import CellKind, ElementTag, classify_elements
from .quadrature import build_cut_rules, square_rule, triangle_rule


@dataclass
class VolumeBatch:
    """Quadrature data over the fluid part of a group of elements.

    shared=True: all elements use the same reference rule and basis tables
    (uval (nq,nu), ugrad (nq,nu,2) in physical derivatives, w (nq,)).
    shared=False: a single cut element with per-point tables.
    """

    elems: np.ndarray
    x: np.ndarray = field(repr=False)        # (ne, nq, 2)
    w: np.ndarray = field(repr=False)        # (nq,) or (ne, nq)
    uval: np.ndarray = field(repr=False)
    ugrad: np.ndarray = field(repr=False)
    pval: np.ndarray = field(repr=False)
    usys: np.ndarray = field(repr=False)     # (ne, nu, 2) system ids, -1 eliminated
    psys: np.ndarray = field(repr=False)     # (ne, np)
    shared: bool = True


@dataclass
class SurfaceBatch:
    """Interface-chord quadrature of one cut element."""

    elem: int
    x: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    normal: np.ndarray = field(repr=False)
    uval: np.ndarray = field(repr=False)
    ugrad: np.ndarray = field(repr=False)
    pval: np.ndarray = field(repr=False)
    usys: np.ndarray = field(repr=False)
    psys: np.ndarray = field(repr=False)
    lamsys: np.ndarray = field(repr=False)   # (2,) multiplier slots, or empty


class Discretization:
    """Geometry + spaces for one (mesh, level-set, triplet) configuration."""

    def __init__(self, mesh, ls, triplet):
        if isinstance(triplet, str):
            triplet = make_triplet(triplet)
        if triplet.cell_kind is not mesh.cell_kind:
            raise ValueError("triplet cell kind does not match the mesh")
        self.mesh = mesh
        self.ls = ls
        self.triplet = triplet
        self.degree = triplet.quad_degree
        tags = classify_elements(mesh, ls)
        self.rules, self.tags = build_cut_rules(mesh, ls, tags, self.degree)
        layout = build_layout(mesh, self.tags, triplet, ls)
        self.layout = prune_multiplier(layout, self.rules, mesh.h)
        self._origins, self._jacobians = element_maps(mesh)
        self._vol_cache = None
        self._surf_cache = None

    @property
    def h(self):
        return self.mesh.h

    # -- system index helpers ------------------------------------------------

    def _usys_for(self, elems):
        nodes = self.layout.velocity.elem2node[elems]
        base = self.layout.velocity.index[nodes]
        out = np.stack([2 * base, 2 * base + 1], axis=-1)
        out[base < 0] = -1
        return out

    def _psys_for(self, elems):
        nodes = self.layout.pressure.elem2node[elems]
        idx = self.layout.pressure.index[nodes]
        return np.where(idx >= 0, self.layout.n_u + idx, -1)

    def _lamsys_for(self, elem):
        if elem not in self.layout.mult_slot:
            return np.empty(0, dtype=np.int64)
        base = self.layout.n_u + self.layout.n_p + 2 * self.layout.mult_slot[elem]
        return np.array([base, base + 1], dtype=np.int64)

    # -- batches ---------------------------------------------------------------

    def _congruence_classes(self):
        fluid = np.flatnonzero(self.tags == ElementTag.FLUID)
        if self.mesh.cell_kind is CellKind.TRIANGLE:
            return [fluid[fluid % 2 == 0], fluid[fluid % 2 == 1]]
        return [fluid]

    def _basis_at_ref(self, ref_pts, Jinv):
        uval = self.triplet.velocity.values(ref_pts)
        ugrad = self.triplet.velocity.gradients(ref_pts) @ Jinv
        pval = self.triplet.pressure.values(ref_pts)
        return uval, ugrad, pval

    def volume_batches(self):
        if self._vol_cache is not None:
            return self._vol_cache
        batches = []
        if self.mesh.cell_kind is CellKind.TRIANGLE:
            ref_pts, ref_w = triangle_rule(self.degree)
        else:
            ref_pts, ref_w = square_rule(self.degree)
        for elems in self._congruence_classes():
            if len(elems) == 0:
                continue
            J = self._jacobians[elems[0]]
            det = abs(np.linalg.det(J))
            uval, ugrad, pval = self._basis_at_ref(ref_pts, np.linalg.inv(J))
            x = self._origins[elems][:, None, :] + ref_pts @ J.T
            batches.append(VolumeBatch(
                elems=elems, x=x, w=ref_w * det, uval=uval, ugrad=ugrad,
                pval=pval, usys=self._usys_for(elems),
                psys=self._psys_for(elems), shared=True))
        for e, rule in self.rules.items():
            if len(rule.volume_weights) == 0:
                continue
            J = self._jacobians[e]
            Jinv = np.linalg.inv(J)
            ref = (rule.volume_points - self._origins[e]) @ Jinv.T
            uval, ugrad, pval = self._basis_at_ref(ref, Jinv)
            elems = np.array([e])
            batches.append(VolumeBatch(
                elems=elems, x=rule.volume_points[None], w=rule.volume_weights,
                uval=uval, ugrad=ugrad, pval=pval,
                usys=self._usys_for(elems), psys=self._psys_for(elems),
                shared=True))
        self._vol_cache = batches
        return batches

    def surface_batches(self):
        if self._surf_cache is not None:
            return self._surf_cache
        batches = []
        for e, rule in self.rules.items():
            if len(rule.surface_weights) == 0:
                continue
            J = self._jacobians[e]
            Jinv = np.linalg.inv(J)
            ref = (rule.surface_points - self._origins[e]) @ Jinv.T
            uval, ugrad, pval = self._basis_at_ref(ref, Jinv)
            elems = np.array([e])
            batches.append(SurfaceBatch(
                elem=e, x=rule.surface_points, w=rule.surface_weights,
                normal=rule.surface_normals, uval=uval, ugrad=ugrad, pval=pval,
                usys=self._usys_for(elems)[0], psys=self._psys_for(elems)[0],
                lamsys=self._lamsys_for(e)))
        self._surf_cache = batches
        return batches
