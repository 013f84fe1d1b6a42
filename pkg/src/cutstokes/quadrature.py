"""Quadrature rules: reference rules and cut-cell rules over the fluid part."""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .geometry import CellKind, ElementTag, interface_normal

MAX_VOLUME_DEGREE = 6

# relative thresholds: fluid slivers reclassified solid, grazing chords dropped
SMALL_CUT_AREA_REL = 1e-14
SMALL_CHORD_REL = 1e-10


class DegenerateCutError(ValueError):
    pass


def triangle_rule(degree):
    """Rule on the reference triangle (0,0),(1,0),(0,1), exact to `degree`.

    Built by the Duffy substitution x = s*(1-t), y = t with Gauss-Legendre
    points in s and Gauss-Jacobi (weight 1-t) points in t, so monomial
    exactness holds without tabulated points.  Weights sum to 1/2.
    """
    if degree < 1:
        raise ValueError("degree must be >= 1")
    if degree > MAX_VOLUME_DEGREE:
        raise ValueError(f"degree {degree} above supported maximum {MAX_VOLUME_DEGREE}")
    m = (degree + 2) // 2
    xs, ws = roots_legendre(m)
    xs = 0.5 * (xs + 1.0)
    ws = 0.5 * ws
    xt, wt = roots_jacobi(m, 1.0, 0.0)  # weight (1-t) on [-1,1]
    xt = 0.5 * (xt + 1.0)
    wt = 0.25 * wt  # scale interval and the (1-t) factor to [0,1]
    s, t = np.meshgrid(xs, xt, indexing="ij")
    w = np.outer(ws, wt)
    pts = np.column_stack([(s * (1.0 - t)).ravel(), t.ravel()])
    return pts, w.ravel()


def square_rule(degree):
    """Tensor Gauss-Legendre rule on [0,1]^2 exact to `degree` per variable."""
    if degree < 1:
        raise ValueError("degree must be >= 1")
    if degree > MAX_VOLUME_DEGREE:
        raise ValueError(f"degree {degree} above supported maximum {MAX_VOLUME_DEGREE}")
    m = (degree + 2) // 2
    xs, ws = roots_legendre(m)
    xs = 0.5 * (xs + 1.0)
    ws = 0.5 * ws
    a, b = np.meshgrid(xs, xs, indexing="ij")
    w = np.outer(ws, ws)
    return np.column_stack([a.ravel(), b.ravel()]), w.ravel()


def polygon_area(poly):
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


def clip_element(poly, phi):
    """Fluid sub-polygon {phi_lin >= 0} of a convex polygon.

    `phi` holds the level-set values at the polygon vertices; the cut is
    the linear interpolation along each edge (Sutherland-Hodgman against
    the half-plane).
    """
    poly = np.asarray(poly, dtype=float)
    phi = np.asarray(phi, dtype=float)
    out = []
    m = len(poly)
    for i in range(m):
        j = (i + 1) % m
        pi, pj = poly[i], poly[j]
        fi, fj = phi[i], phi[j]
        if fi >= 0.0:
            out.append(pi)
        if (fi > 0.0 > fj) or (fj > 0.0 > fi):
            t = fi / (fi - fj)
            out.append(pi + t * (pj - pi))
    if not out:
        return np.empty((0, 2))
    out = np.asarray(out)
    # drop duplicate consecutive vertices produced by phi == 0 at a vertex
    keep = [0]
    for i in range(1, len(out)):
        if np.linalg.norm(out[i] - out[keep[-1]]) > 1e-14:
            keep.append(i)
    if len(keep) > 1 and np.linalg.norm(out[keep[-1]] - out[keep[0]]) <= 1e-14:
        keep.pop()
    return out[keep]


def volume_rule(poly, degree):
    """Quadrature over a convex polygon by fan triangulation from vertex 0."""
    poly = np.asarray(poly, dtype=float)
    if len(poly) < 3:
        return np.empty((0, 2)), np.empty(0)
    ref_pts, ref_w = triangle_rule(degree)
    pts, wts = [], []
    p0 = poly[0]
    for k in range(1, len(poly) - 1):
        e1 = poly[k] - p0
        e2 = poly[k + 1] - p0
        det = e1[0] * e2[1] - e1[1] * e2[0]
        if abs(det) < 1e-30:
            continue
        pts.append(p0 + ref_pts[:, :1] * e1 + ref_pts[:, 1:] * e2)
        wts.append(ref_w * abs(det))
    if not pts:
        return np.empty((0, 2)), np.empty(0)
    return np.vstack(pts), np.concatenate(wts)


def _chord_endpoints(poly, phi):
    """Zero crossings of the linearized level set on the polygon edges."""
    pts = []
    m = len(poly)
    for i in range(m):
        j = (i + 1) % m
        fi, fj = phi[i], phi[j]
        if fi == 0.0:
            pts.append(poly[i])
        if (fi > 0.0 > fj) or (fj > 0.0 > fi):
            t = fi / (fi - fj)
            pts.append(poly[i] + t * (poly[j] - poly[i]))
    # dedupe
    uniq = []
    for p in pts:
        if all(np.linalg.norm(p - q) > 1e-13 for q in uniq):
            uniq.append(p)
    return uniq


def _chord_rule(a, b, ls, n_points):
    xs, ws = roots_legendre(n_points)
    xs = 0.5 * (xs + 1.0)
    ws = 0.5 * ws
    pts = a[None, :] + xs[:, None] * (b - a)[None, :]
    length = np.linalg.norm(b - a)
    normals = interface_normal(ls, pts)
    return pts, ws * length, normals


@dataclass
class CutRule:
    """Fluid-part and interface quadrature of one cut element."""

    element: int
    volume_points: np.ndarray = field(repr=False)
    volume_weights: np.ndarray = field(repr=False)
    surface_points: np.ndarray = field(repr=False)
    surface_weights: np.ndarray = field(repr=False)
    surface_normals: np.ndarray = field(repr=False)
    fluid_area_fraction: float = 0.0

    @property
    def chord_length(self):
        return float(self.surface_weights.sum())


def _sub_triangles(poly, cell_kind):
    if cell_kind is CellKind.TRIANGLE:
        return [poly]
    # split the quad along the same fixed diagonal as the triangle meshes,
    # keeping the clipper single-case (convex polygon vs half-plane)
    return [poly[[0, 1, 2]], poly[[0, 2, 3]]]


def cut_rule(mesh, ls, e, degree, n_surf=3):
    """Build the CutRule of element `e` (classified CUT)."""
    poly = mesh.element_vertices(e)
    area = abs(polygon_area(poly))
    vol_p, vol_w = [], []
    sp, sw, sn = [], [], []
    for tri in _sub_triangles(poly, mesh.cell_kind):
        phi = ls.value(tri)
        fluid = clip_element(tri, phi)
        if len(fluid) >= 3:
            p, w = volume_rule(fluid, degree)
            vol_p.append(p)
            vol_w.append(w)
        ends = _chord_endpoints(tri, phi)
        if len(ends) == 2:
            p, w, nrm = _chord_rule(ends[0], ends[1], ls, n_surf)
            sp.append(p)
            sw.append(w)
            sn.append(nrm)
    vol_p = np.vstack(vol_p) if vol_p else np.empty((0, 2))
    vol_w = np.concatenate(vol_w) if vol_w else np.empty(0)
    sp = np.vstack(sp) if sp else np.empty((0, 2))
    sw = np.concatenate(sw) if sw else np.empty(0)
    sn = np.vstack(sn) if sn else np.empty((0, 2))
    frac = float(vol_w.sum() / area) if area > 0 else 0.0
    return CutRule(element=e, volume_points=vol_p, volume_weights=vol_w,
                   surface_points=sp, surface_weights=sw, surface_normals=sn,
                   fluid_area_fraction=frac)


def build_cut_rules(mesh, ls, tags, degree):
    """CutRules for every CUT element; slivers are retagged SOLID.

    Returns (rules, tags) where `tags` is a copy with degenerate cuts
    (fluid fraction below SMALL_CUT_AREA_REL) reclassified as SOLID.
    """
    tags = np.array(tags, copy=True)
    rules = {}
    for e in np.flatnonzero(tags == ElementTag.CUT):
        r = cut_rule(mesh, ls, int(e), degree)
        if r.fluid_area_fraction < SMALL_CUT_AREA_REL:
            tags[e] = ElementTag.SOLID
            continue
        rules[int(e)] = r
    return rules, tags


def fluid_area_and_perimeter(mesh, tags, rules):
    """Sum of fluid volume weights (FLUID + CUT) and of interface weights."""
    areas = np.abs(mesh.signed_areas())
    area = areas[tags == ElementTag.FLUID].sum()
    perim = 0.0
    for r in rules.values():
        area += r.volume_weights.sum()
        perim += r.surface_weights.sum()
    return float(area), float(perim)
