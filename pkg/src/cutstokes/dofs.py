"""Global dof maps: exterior-dof trimming, boundary masking, multiplier set."""

from dataclasses import dataclass, field, replace
from enum import IntEnum

import numpy as np

from .geometry import CellKind, ElementTag
from .quadrature import SMALL_CHORD_REL


class NoInterfaceError(RuntimeError):
    """Raised when no element is cut: there is no multiplier space."""


class DofStatus(IntEnum):
    ACTIVE = 0
    VIRTUAL = 1
    REMOVED = 2


def element_maps(mesh):
    """Affine map data p0 + J*(xi,eta) for every element.

    Returns (origins, jacobians) with shapes (ne,2) and (ne,2,2).  Quads in
    the structured mesh are axis-aligned, so their map is diagonal.
    """
    pts = mesh.vertices[mesh.elements]
    p0 = pts[:, 0]
    if mesh.cell_kind is CellKind.TRIANGLE:
        J = np.stack([pts[:, 1] - p0, pts[:, 2] - p0], axis=-1)
    else:
        hx = pts[:, 1, 0] - p0[:, 0]
        hy = pts[:, 3, 1] - p0[:, 1]
        J = np.zeros((len(pts), 2, 2))
        J[:, 0, 0] = hx
        J[:, 1, 1] = hy
    return p0, J


def _number_nodes(mesh, element):
    """Global node ids for a reference element over the whole mesh.

    Continuous spaces share nodes through an integer snap of the physical
    node coordinates; discontinuous spaces get one block per element.
    Returns (coords (nn,2), elem2node (ne,ndof)).
    """
    ne = mesh.num_elements
    nd = element.ndof
    p0, J = element_maps(mesh)
    ref = element.nodes  # (nd, 2)
    phys = p0[:, None, :] + np.einsum("eij,nj->eni", J, ref)
    if not element.continuous:
        ids = np.arange(ne * nd).reshape(ne, nd)
        return phys.reshape(-1, 2), ids
    # vertex/lattice nodes are shared; the bubble node (triangle barycenter)
    # is interior and never collides with lattice nodes
    keys = np.round(phys.reshape(-1, 2) * 1e6).astype(np.int64)
    flat = keys[:, 0] * 10_000_019 + keys[:, 1]
    uniq, inverse = np.unique(flat, return_inverse=True)
    coords = np.empty((len(uniq), 2))
    coords[inverse] = phys.reshape(-1, 2)
    return coords, inverse.reshape(ne, nd)


@dataclass
class FieldLayout:
    coords: np.ndarray = field(repr=False)
    elem2node: np.ndarray = field(repr=False)
    status: np.ndarray = field(repr=False)       # DofStatus per node
    boundary: np.ndarray = field(repr=False)     # constrained-to-zero mask
    index: np.ndarray = field(repr=False)        # node -> system slot, -1 if absent

    @property
    def num_unknowns(self):
        return int((self.index >= 0).sum())

    def counts(self):
        kept = ~self.boundary
        return {
            "active": int(((self.status == DofStatus.ACTIVE) & kept).sum()),
            "virtual": int(((self.status == DofStatus.VIRTUAL) & kept).sum()),
            "removed": int((self.status == DofStatus.REMOVED).sum()),
            "constrained": int(self.boundary.sum()),
        }


@dataclass
class DofLayout:
    """System layout over (U, P, Lambda, zero-mean scalar)."""

    triplet: object
    velocity: FieldLayout
    pressure: FieldLayout
    mult_elems: np.ndarray       # retained cut elements, one vector dof each
    mult_slot: dict              # element id -> multiplier slot

    @property
    def n_u(self):
        return 2 * self.velocity.num_unknowns

    @property
    def n_p(self):
        return self.pressure.num_unknowns

    @property
    def n_lam(self):
        return 2 * len(self.mult_elems)

    @property
    def size(self):
        # trailing slot is the scalar zero-mean pressure constraint
        return self.n_u + self.n_p + self.n_lam + 1

    def u_sys(self, node, comp):
        """System index of velocity dof (node, comp); -1 if eliminated."""
        base = self.velocity.index[node]
        return np.where(base >= 0, 2 * base + comp, -1)

    def p_sys(self, node):
        idx = self.pressure.index[node]
        return np.where(idx >= 0, self.n_u + idx, -1)

    def lam_sys(self, elem, comp):
        return self.n_u + self.n_p + 2 * self.mult_slot[elem] + comp

    def report(self):
        lines = [
            "velocity nodes: " + str(self.velocity.counts()),
            "pressure nodes: " + str(self.pressure.counts()),
            f"multiplier dofs: {self.n_lam} on {len(self.mult_elems)} cut elements",
            f"system size: {self.size} (u {self.n_u}, p {self.n_p}, "
            f"lambda {self.n_lam}, zero-mean 1)",
        ]
        return "\n".join(lines)


def _field_layout(mesh, tags, element, ls, dirichlet):
    coords, e2n = _number_nodes(mesh, element)
    nn = len(coords)
    keep = np.zeros(nn, dtype=bool)
    in_domain = (tags == ElementTag.FLUID) | (tags == ElementTag.CUT)
    # a node is retained iff its support meets a FLUID or CUT element
    touched = e2n[in_domain]
    keep[touched.ravel()] = True

    status = np.full(nn, DofStatus.REMOVED, dtype=np.int8)
    inside_solid = ls.value(coords) < 0.0
    status[keep & ~inside_solid] = DofStatus.ACTIVE
    status[keep & inside_solid] = DofStatus.VIRTUAL

    boundary = np.zeros(nn, dtype=bool)
    if dirichlet:
        x, y = coords[:, 0], coords[:, 1]
        tol = 1e-9
        boundary = (np.abs(x) < tol) | (np.abs(x - 1) < tol) \
            | (np.abs(y) < tol) | (np.abs(y - 1) < tol)

    unknown = keep & ~boundary
    index = np.full(nn, -1, dtype=np.int64)
    index[unknown] = np.arange(unknown.sum())
    return FieldLayout(coords=coords, elem2node=e2n, status=status,
                       boundary=boundary, index=index)


def build_layout(mesh, tags, triplet, ls):
    """Trimmed dof layout for the given classification.

    Velocity dofs on the outer box boundary are constrained to zero and
    eliminated symmetrically; dofs whose basis support meets no FLUID or
    CUT element are removed.  One vector multiplier dof per cut element.
    """
    cut = np.flatnonzero(tags == ElementTag.CUT)
    if len(cut) == 0:
        raise NoInterfaceError("no cut element: interface multiplier space is empty")
    vel = _field_layout(mesh, tags, triplet.velocity, ls, dirichlet=True)
    pre = _field_layout(mesh, tags, triplet.pressure, ls, dirichlet=False)
    slot = {int(e): i for i, e in enumerate(cut)}
    return DofLayout(triplet=triplet, velocity=vel, pressure=pre,
                     mult_elems=cut.astype(np.int64), mult_slot=slot)


def prune_multiplier(layout, rules, h):
    """Drop multiplier dofs of elements with a vanishing interface chord."""
    threshold = SMALL_CHORD_REL * h
    kept = [int(e) for e in layout.mult_elems
            if e in rules and rules[int(e)].chord_length >= threshold]
    if len(kept) == len(layout.mult_elems):
        return layout
    slot = {e: i for i, e in enumerate(kept)}
    return replace(layout, mult_elems=np.asarray(kept, dtype=np.int64),
                   mult_slot=slot)
