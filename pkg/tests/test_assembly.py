import numpy as np
import pytest

from cutstokes.assembly import (StokesCoefficients, apply_compact_form,
                                assemble, assemble_primitives,
                                boundary_velocity_values)
from cutstokes.harness import CaseConfig, build_case


def test_matrix_is_symmetric(case10):
    _, _, system = case10
    A = system.matrix
    gap = abs(A - A.T).max()
    assert gap < 1e-12 * abs(A).max()


def test_gamma_rescale_matches_fresh_assembly(case10):
    disc, exact, system = case10
    for g0 in (0.0, 0.2):
        rescaled = system.with_gamma0(g0)
        fresh = assemble(disc, StokesCoefficients(nu=1.0, gamma0=g0),
                         exact.f, exact.g, ubc=exact.g)
        dm = abs(rescaled.matrix - fresh.matrix)
        assert (dm.max() if dm.nnz else 0.0) < 1e-14
        assert np.abs(rescaled.rhs - fresh.rhs).max() < 1e-14


def test_unstabilized_system_has_no_interface_stab_blocks(case10):
    """At gamma0 = 0 the blocks reduce to the plain saddle structure."""
    _, _, system = case10
    plain = system.with_gamma0(0.0)
    assert abs(plain.A_pp).max() == 0.0
    assert abs(plain.A_pl).max() == 0.0
    assert abs(plain.A_ll).max() == 0.0
    p = plain.prims
    assert abs(plain.A_uu - p.K_vol).max() < 1e-14
    assert abs(plain.A_up - p.B_vol).max() < 1e-14
    assert abs(plain.A_ul - p.C_tr).max() < 1e-14


def test_rigid_motions_are_in_the_strain_kernel(case10):
    """a(u, v) = 2 nu int D(u):D(v) annihilates rigid motions; with the
    boundary columns lifted into c_K the identity K x + c_K = 0 holds."""
    disc, _, _ = case10

    def rigid(x):
        x = np.asarray(x, float)
        out = np.empty(x.shape)
        out[..., 0] = 0.3 - 0.7 * x[..., 1]
        out[..., 1] = -0.2 + 0.7 * x[..., 0]
        return out

    prims = assemble_primitives(disc, lambda x: np.zeros(np.shape(x)),
                                rigid, ubc=rigid)
    vel = disc.layout.velocity
    vals = rigid(vel.coords)
    x_u = np.zeros(prims.n_u)
    act = vel.index >= 0
    x_u[2 * vel.index[act]] = vals[act, 0]
    x_u[2 * vel.index[act] + 1] = vals[act, 1]
    residual = prims.K_vol @ x_u + prims.c_K
    assert np.abs(residual).max() < 1e-12 * abs(prims.K_vol).max()


def test_dual_path_matches_matrix_quadratic_form(case10, rng):
    disc, _, system = case10
    A = system.matrix
    for _ in range(3):
        x = rng.normal(size=system.size)
        y = rng.normal(size=system.size)
        direct = float(x @ (A @ y))
        reint = apply_compact_form(disc, system, x, y)
        assert abs(direct - reint) < 1e-10 * (abs(direct) + 1.0)


def test_zero_mean_row_integrates_to_fluid_area(case10):
    disc, _, system = case10
    # partition of unity: the z moments must sum to the quadrature area of
    # the trimmed fluid region (which itself approximates 1 - pi R^2)
    area = sum(b.w.sum() * len(b.elems) for b in disc.volume_batches())
    assert system.prims.z.sum() == pytest.approx(area, abs=1e-12)
    assert area == pytest.approx(1.0 - np.pi * 0.21 ** 2, abs=8e-3)


def test_boundary_lifting_vector_matches_bc(case10):
    disc, exact, _ = case10
    vals = boundary_velocity_values(disc, exact.g)
    vel = disc.layout.velocity
    assert np.all(vals[~vel.boundary] == 0.0)
    assert vals[vel.boundary] == pytest.approx(
        exact.g(vel.coords[vel.boundary]))


def test_nonzero_gamma_changes_all_interface_blocks(case10):
    _, _, system = case10
    assert abs(system.A_ll).max() > 0.0
    assert abs(system.A_pp).max() > 0.0
    assert abs(system.A_pl).max() > 0.0


def test_coefficients_validation():
    with pytest.raises(ValueError):
        StokesCoefficients(nu=-1.0, gamma0=0.05)
    with pytest.raises(ValueError):
        StokesCoefficients(nu=1.0, gamma0=-0.1)
    c = StokesCoefficients(nu=1.0, gamma0=0.05)
    assert c.gamma(0.1) == pytest.approx(0.005)
