"""Structured background mesh of the unit square and level-set geometry."""

from dataclasses import dataclass, field
from enum import Enum, IntEnum

import numpy as np


class CellKind(Enum):
    TRIANGLE = "triangle"
    QUAD = "quad"


class ElementTag(IntEnum):
    FLUID = 0
    SOLID = 1
    CUT = 2


class DegeneratePointError(ValueError):
    """Level-set gradient requested at its center."""


@dataclass(frozen=True)
class BackgroundMesh:
    """Uniform mesh of the fictitious box [0,1]^2.

    Triangle meshes split every grid cell along the diagonal from the
    lower-left to the upper-right corner, giving 2*n^2 elements; quad
    meshes keep the n^2 cells.  Both have element diameter sqrt(2)/n
    (the cell diagonal).
    """

    n: int
    cell_kind: CellKind
    vertices: np.ndarray = field(repr=False)
    elements: np.ndarray = field(repr=False)

    @property
    def h(self):
        return np.sqrt(2.0) / self.n

    @property
    def num_elements(self):
        return self.elements.shape[0]

    def element_vertices(self, e):
        return self.vertices[self.elements[e]]

    def centroids(self):
        return self.vertices[self.elements].mean(axis=1)

    def measured_h(self):
        """Max element diameter computed from coordinates."""
        pts = self.vertices[self.elements]
        nv = pts.shape[1]
        dmax = 0.0
        for i in range(nv):
            for j in range(i + 1, nv):
                d = np.linalg.norm(pts[:, i] - pts[:, j], axis=1).max()
                dmax = max(dmax, d)
        return dmax

    def signed_areas(self):
        pts = self.vertices[self.elements]
        if self.cell_kind is CellKind.TRIANGLE:
            a = pts[:, 1] - pts[:, 0]
            b = pts[:, 2] - pts[:, 0]
            return 0.5 * (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
        # shoelace over the 4 vertices
        x, y = pts[..., 0], pts[..., 1]
        xs, ys = np.roll(x, -1, axis=1), np.roll(y, -1, axis=1)
        return 0.5 * np.sum(x * ys - xs * y, axis=1)


def build_mesh(n, cell_kind=CellKind.TRIANGLE):
    """Build the uniform background mesh with n subdivisions per axis."""
    if n < 2:
        raise ValueError(f"need n >= 2 subdivisions, got {n}")
    cell_kind = CellKind(cell_kind)
    coords = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(coords, coords, indexing="xy")
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    ii, jj = ii.ravel(), jj.ravel()
    v00 = vid(ii, jj)
    v10 = vid(ii + 1, jj)
    v11 = vid(ii + 1, jj + 1)
    v01 = vid(ii, jj + 1)
    if cell_kind is CellKind.TRIANGLE:
        lower = np.column_stack([v00, v10, v11])
        upper = np.column_stack([v00, v11, v01])
        elements = np.empty((2 * n * n, 3), dtype=np.int64)
        elements[0::2] = lower
        elements[1::2] = upper
    else:
        elements = np.column_stack([v00, v10, v11, v01]).astype(np.int64)
    return BackgroundMesh(n=n, cell_kind=cell_kind, vertices=vertices,
                          elements=elements)


@dataclass(frozen=True)
class CircleLevelSet:
    """Signed distance to a circle; negative inside the solid."""

    center: tuple
    radius: float

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError("circle radius must be positive")

    def value(self, x):
        x = np.asarray(x, dtype=float)
        d = x[..., :2] - np.asarray(self.center)
        return np.hypot(d[..., 0], d[..., 1]) - self.radius

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        d = x[..., :2] - np.asarray(self.center)
        r = np.hypot(d[..., 0], d[..., 1])
        if np.any(r < 1e-14):
            raise DegeneratePointError("level-set gradient undefined at the center")
        return d / r[..., None]


def eval_levelset(ls, x):
    """Return (phi, grad phi) at point(s) x."""
    return ls.value(x), ls.gradient(x)


def interface_normal(ls, x):
    """Unit normal pointing from the fluid into the solid: -grad(phi)/|grad(phi)|."""
    g = ls.gradient(x)
    return -g / np.linalg.norm(g, axis=-1, keepdims=True)


def on_interface(ls, x, h, rtol=1e-12):
    """Scale-relative membership test for the zero level set."""
    return np.abs(ls.value(x)) <= rtol * h


def classify_elements(mesh, ls):
    """Tag each element FLUID / SOLID / CUT from vertex and centroid signs.

    The centroid sign catches shallow cuts whose vertices all lie on one
    side while an edge clips the circle.
    """
    phi_v = ls.value(mesh.vertices)[mesh.elements]
    phi_c = ls.value(mesh.centroids())
    all_pos = np.all(phi_v > 0.0, axis=1) & (phi_c > 0.0)
    all_neg = np.all(phi_v < 0.0, axis=1) & (phi_c < 0.0)
    tags = np.full(mesh.num_elements, ElementTag.CUT, dtype=np.int8)
    tags[all_pos] = ElementTag.FLUID
    tags[all_neg] = ElementTag.SOLID
    return tags
