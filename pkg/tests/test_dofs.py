import numpy as np
import pytest

from cutstokes.dofs import (DofStatus, NoInterfaceError, build_layout,
                            element_maps, prune_multiplier)
from cutstokes.elements import make_triplet
from cutstokes.geometry import (CircleLevelSet, ElementTag, build_mesh,
                                classify_elements)
from cutstokes.quadrature import build_cut_rules


def make_layout(n=10, triplet="p2_p1_p0", radius=0.21):
    trip = make_triplet(triplet)
    mesh = build_mesh(n, trip.cell_kind)
    ls = CircleLevelSet((0.5, 0.5), radius)
    tags = classify_elements(mesh, ls)
    rules, tags = build_cut_rules(mesh, ls, tags, trip.quad_degree)
    layout = prune_multiplier(build_layout(mesh, tags, trip, ls), rules,
                              mesh.h)
    return mesh, ls, tags, layout


def test_element_maps_affine_consistency():
    mesh = build_mesh(5, "triangle")
    p0, J = element_maps(mesh)
    # mapping the reference vertices must reproduce the element vertices
    ref = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    phys = p0[:, None, :] + np.einsum("eij,nj->eni", J, ref)
    assert phys == pytest.approx(mesh.vertices[mesh.elements], abs=1e-14)


@pytest.mark.parametrize("triplet", ["p2_p1_p0", "q2_q1_q0"])
def test_layout_counts_are_consistent(triplet):
    _, _, tags, layout = make_layout(triplet=triplet)
    vel = layout.velocity
    assert layout.n_u == 2 * vel.num_unknowns
    assert layout.size == layout.n_u + layout.n_p + layout.n_lam + 1
    assert layout.n_lam == 2 * np.sum(tags == ElementTag.CUT)
    counts = vel.counts()
    # the immersed circle produces all three dof classes
    assert counts["active"] > 0
    assert counts["virtual"] > 0
    assert counts["removed"] > 0
    assert counts["constrained"] > 0
    assert "system size" in layout.report()


def test_removed_dofs_live_deep_inside_the_solid():
    _, ls, _, layout = make_layout(n=20)
    vel = layout.velocity
    removed = vel.status == DofStatus.REMOVED
    assert np.all(ls.value(vel.coords[removed]) < 0)
    assert np.all(vel.index[removed] == -1)


def test_virtual_dofs_are_kept_unknowns():
    _, ls, _, layout = make_layout(n=20)
    vel = layout.velocity
    virt = vel.status == DofStatus.VIRTUAL
    assert np.all(ls.value(vel.coords[virt]) < 0)
    assert np.all(vel.index[virt & ~vel.boundary] >= 0)


def test_boundary_dofs_are_eliminated():
    _, _, _, layout = make_layout()
    vel = layout.velocity
    assert np.all(vel.index[vel.boundary] == -1)
    on_box = (np.abs(vel.coords) < 1e-12) | (np.abs(vel.coords - 1) < 1e-12)
    assert np.array_equal(vel.boundary, on_box.any(axis=1))
    # pressure has no Dirichlet constraint
    assert not layout.pressure.boundary.any()


def test_system_index_helpers_partition_the_vector():
    _, _, _, layout = make_layout()
    nodes = np.arange(len(layout.velocity.coords))
    u_idx = np.concatenate([layout.u_sys(nodes, 0), layout.u_sys(nodes, 1)])
    u_idx = u_idx[u_idx >= 0]
    assert sorted(u_idx) == list(range(layout.n_u))
    lam0 = layout.lam_sys(int(layout.mult_elems[0]), 0)
    assert lam0 == layout.n_u + layout.n_p


def test_no_interface_raises():
    trip = make_triplet("p2_p1_p0")
    mesh = build_mesh(4, trip.cell_kind)
    ls = CircleLevelSet((5.0, 5.0), 0.1)  # circle far outside the box
    tags = classify_elements(mesh, ls)
    with pytest.raises(NoInterfaceError):
        build_layout(mesh, tags, trip, ls)
