"""Reference finite elements and the velocity/pressure/multiplier triplets."""

from dataclasses import dataclass

import numpy as np

from .geometry import CellKind


class PointOutsideElementError(ValueError):
    pass


def _check_inside_tri(pts, tol=1e-10):
    x, y = pts[..., 0], pts[..., 1]
    if np.any(x < -tol) or np.any(y < -tol) or np.any(x + y > 1.0 + tol):
        raise PointOutsideElementError("point outside reference triangle")


def _check_inside_square(pts, tol=1e-10):
    if np.any(pts < -tol) or np.any(pts > 1.0 + tol):
        raise PointOutsideElementError("point outside reference square")


@dataclass(frozen=True)
class ReferenceElement:
    """Scalar shape functions on the reference triangle or square.

    `nodes` are the reference coordinates of the nodal dofs; `continuous`
    marks spaces whose dofs are shared between neighboring elements.
    """

    name: str
    cell_kind: CellKind
    nodes: np.ndarray
    continuous: bool
    degree: int

    @property
    def ndof(self):
        return len(self.nodes)

    def values(self, pts):
        raise NotImplementedError

    def gradients(self, pts):
        raise NotImplementedError

    def _check(self, pts):
        if self.cell_kind is CellKind.TRIANGLE:
            _check_inside_tri(pts)
        else:
            _check_inside_square(pts)


def _bary(pts):
    x, y = pts[..., 0], pts[..., 1]
    return np.stack([1.0 - x - y, x, y], axis=-1)


class P1(ReferenceElement):
    def __init__(self):
        super().__init__("P1", CellKind.TRIANGLE,
                         np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
                         True, 1)

    def values(self, pts):
        pts = np.asarray(pts, float)
        self._check(pts)
        return _bary(pts)

    def gradients(self, pts):
        pts = np.asarray(pts, float)
        self._check(pts)
        g = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
        return np.broadcast_to(g, pts.shape[:-1] + (3, 2)).copy()


class P2(ReferenceElement):
    def __init__(self):
        nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0],
                          [0.5, 0.0], [0.5, 0.5], [0.0, 0.5]])
        super().__init__("P2", CellKind.TRIANGLE, nodes, True, 2)

    def values(self, pts):
        pts = np.asarray(pts, float)
        self._check(pts)
        l = _bary(pts)
        l0, l1, l2 = l[..., 0], l[..., 1], l[..., 2]
        return np.stack([l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
                         4 * l0 * l1, 4 * l1 * l2, 4 * l0 * l2], axis=-1)

    def gradients(self, pts):
        pts = np.asarray(pts, float)
        self._check(pts)
        l = _bary(pts)
        gl = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
        out = np.empty(pts.shape[:-1] + (6, 2))
        for i in range(3):
            out[..., i, :] = (4 * l[..., i, None] - 1) * gl[i]
        pairs = [(0, 1), (1, 2), (0, 2)]
        for k, (i, j) in enumerate(pairs):
            out[..., 3 + k, :] = 4 * (l[..., i, None] * gl[j] + l[..., j, None] * gl[i])
        return out


class P1Bubble(ReferenceElement):
    """P1 enriched with the cubic bubble 27*l0*l1*l2 (value 1 at the barycenter)."""

    def __init__(self):
        nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0],
                          [1 / 3, 1 / 3]])
        super().__init__("P1+", CellKind.TRIANGLE, nodes, True, 1)

    def values(self, pts):
        pts = np.asarray(pts, float)
        self._check(pts)
        l = _bary(pts)
        bubble = 27.0 * l[..., 0] * l[..., 1] * l[..., 2]
        return np.concatenate([l, bubble[..., None]], axis=-1)

    def gradients(self, pts):
        pts = np.asarray(pts, float)
        self._check(pts)
        l = _bary(pts)
        gl = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
        out = np.empty(pts.shape[:-1] + (4, 2))
        out[..., :3, :] = np.broadcast_to(gl, pts.shape[:-1] + (3, 2))
        out[..., 3, :] = 27.0 * (l[..., 1, None] * l[..., 2, None] * gl[0]
                                 + l[..., 0, None] * l[..., 2, None] * gl[1]
                                 + l[..., 0, None] * l[..., 1, None] * gl[2])
        return out


def _lag1d(degree):
    xs = np.linspace(0.0, 1.0, degree + 1)

    def vals(t):
        t = np.asarray(t, float)
        out = np.ones(t.shape + (degree + 1,))
        for i in range(degree + 1):
            for j in range(degree + 1):
                if i != j:
                    out[..., i] *= (t - xs[j]) / (xs[i] - xs[j])
        return out

    def ders(t):
        t = np.asarray(t, float)
        out = np.zeros(t.shape + (degree + 1,))
        for i in range(degree + 1):
            for k in range(degree + 1):
                if k == i:
                    continue
                term = np.ones_like(t) / (xs[i] - xs[k])
                for j in range(degree + 1):
                    if j != i and j != k:
                        term *= (t - xs[j]) / (xs[i] - xs[j])
                out[..., i] += term
        return out

    return xs, vals, ders


class TensorQ(ReferenceElement):
    """Tensor-product Lagrange element on the reference square."""

    def __init__(self, degree):
        xs, self._vals, self._ders = _lag1d(degree)
        a, b = np.meshgrid(xs, xs, indexing="ij")
        # node order: y-major rows, x fastest (v00, ..., v10-row pattern)
        nodes = np.column_stack([a.T.ravel(), b.T.ravel()])
        super().__init__(f"Q{degree}", CellKind.QUAD, nodes, True, degree)

    def values(self, pts):
        pts = np.asarray(pts, float)
        self._check(pts)
        vx = self._vals(pts[..., 0])
        vy = self._vals(pts[..., 1])
        return (vy[..., :, None] * vx[..., None, :]).reshape(pts.shape[:-1] + (self.ndof,))

    def gradients(self, pts):
        pts = np.asarray(pts, float)
        self._check(pts)
        vx, vy = self._vals(pts[..., 0]), self._vals(pts[..., 1])
        dx, dy = self._ders(pts[..., 0]), self._ders(pts[..., 1])
        gx = (vy[..., :, None] * dx[..., None, :]).reshape(pts.shape[:-1] + (self.ndof,))
        gy = (dy[..., :, None] * vx[..., None, :]).reshape(pts.shape[:-1] + (self.ndof,))
        return np.stack([gx, gy], axis=-1)


class PiecewiseConstant(ReferenceElement):
    """One constant dof per element (P0 on triangles, Q0 on quads)."""

    def __init__(self, cell_kind):
        center = np.array([[1 / 3, 1 / 3]]) if cell_kind is CellKind.TRIANGLE \
            else np.array([[0.5, 0.5]])
        name = "P0" if cell_kind is CellKind.TRIANGLE else "Q0"
        super().__init__(name, cell_kind, center, False, 0)

    def values(self, pts):
        pts = np.asarray(pts, float)
        self._check(pts)
        return np.ones(pts.shape[:-1] + (1,))

    def gradients(self, pts):
        pts = np.asarray(pts, float)
        self._check(pts)
        return np.zeros(pts.shape[:-1] + (1, 2))


@dataclass(frozen=True)
class FeTriplet:
    """Velocity/pressure/multiplier element combination."""

    name: str
    cell_kind: CellKind
    velocity: ReferenceElement
    pressure: ReferenceElement

    @property
    def quad_degree(self):
        # degree-2 velocity assemblies integrate products of quadratic
        # gradients against P1/Q1 pressure; 6 is safely exact
        return 6 if self.velocity.degree >= 2 else 4


def make_triplet(name):
    key = name.lower().replace("/", "_").replace("+", "b")
    table = {
        "p1b_p1_p0": lambda: FeTriplet("P1+/P1/P0", CellKind.TRIANGLE, P1Bubble(), P1()),
        "p2_p1_p0": lambda: FeTriplet("P2/P1/P0", CellKind.TRIANGLE, P2(), P1()),
        "q1_q0_q0": lambda: FeTriplet("Q1/Q0/Q0", CellKind.QUAD, TensorQ(1),
                                      PiecewiseConstant(CellKind.QUAD)),
        "q2_q1_q0": lambda: FeTriplet("Q2/Q1/Q0", CellKind.QUAD, TensorQ(2), TensorQ(1)),
    }
    if key not in table:
        raise ValueError(f"unknown finite element triplet {name!r}; "
                         f"choose one of {sorted(table)}")
    return table[key]()


TRIPLET_NAMES = ("p1b_p1_p0", "p2_p1_p0", "q1_q0_q0", "q2_q1_q0")
