"""Assembly consistency (FD checked) and the continuation solver."""

import numpy as np
import pytest

from striplab import (
    HalfDistSquared,
    LoadProfile,
    SolverConfig,
    build_mesh,
    rigid_state,
    scaled_energy,
    solve_stationary,
    warm_start,
)
from striplab.errors import ConfigError, StepRejected
from striplab.mesh import DeformationField
from striplab.solver import elastic_residual, load_vector, residual, tangent

W = HalfDistSquared()
GAMMA = LoadProfile.constant(0.0, -1e-3)


def perturbed_field(mesh, h, scale=1e-3, seed=17):
    """Rigid state plus a small random displacement vanishing on the clamp."""
    fld = rigid_state(mesh, h)
    rng = np.random.default_rng(seed)
    du = scale * rng.standard_normal(fld.y.shape)
    du[mesh.clamped_nodes()] = 0.0
    fld.y += du
    return fld


def test_rigid_state_is_exact_equilibrium():
    for h in (0.2, 0.05):
        mesh = build_mesh(1.0, 16, 4)
        fld, rep = solve_stationary(mesh, h, LoadProfile.constant(0.0, 0.0), W)
        assert rep.converged
        assert rep.iterations == 0
        assert rep.residual_sup == 0.0
        assert np.array_equal(fld.y, rigid_state(mesh, h).y)
        el, tot = scaled_energy(fld, LoadProfile.constant(0.0, 0.0), W, 1.0)
        assert el == 0.0 and tot == 0.0


def test_load_vector_against_dense_loops():
    mesh = build_mesh(1.0, 4, 2)
    h = 0.2
    g = LoadProfile.constant(0.3, -0.7)
    got = load_vector(mesh, g, h)  # flat, length 2*nnode
    expect = np.zeros((mesh.nnode, 2))
    gvals = g(mesh.qp_x[:, 0])
    for e in range(mesh.nelem):
        for q in range(4):
            qp = 4 * e + q
            for a in range(4):
                expect[mesh.conn[e, a]] += h**2 * mesh.qp_w * mesh.shape_n[q, a] * gvals[qp]
    expect[mesh.clamped_nodes()] = 0.0
    np.testing.assert_allclose(got, expect.ravel(), atol=1e-16)


def test_residual_is_gradient_of_energy():
    mesh = build_mesh(1.0, 8, 4)
    h = 0.1
    fld = perturbed_field(mesh, h)
    r = residual(fld, GAMMA, W, load_factor=1.0)
    rng = np.random.default_rng(3)
    du = rng.standard_normal(fld.y.shape)
    du[mesh.clamped_nodes()] = 0.0
    eps = 1e-7

    def total(y):
        probe = DeformationField(mesh=mesh, h=h, y=y)
        _, tot = scaled_energy(probe, GAMMA, W, 1.0)
        return tot

    fd = (total(fld.y + eps * du) - total(fld.y - eps * du)) / (2 * eps)
    analytic = float(r @ du.ravel())
    assert analytic == pytest.approx(fd, rel=1e-6, abs=1e-12)


def test_tangent_is_derivative_of_residual():
    mesh = build_mesh(1.0, 6, 3)
    h = 0.1
    fld = perturbed_field(mesh, h, seed=23)
    K = tangent(fld, W)
    rng = np.random.default_rng(4)
    du = rng.standard_normal(fld.y.shape)
    du[mesh.clamped_nodes()] = 0.0
    eps = 1e-7
    hi = DeformationField(mesh=mesh, h=h, y=fld.y + eps * du)
    lo = DeformationField(mesh=mesh, h=h, y=fld.y - eps * du)
    fd = (elastic_residual(hi, W, 0.1) - elastic_residual(lo, W, 0.1)) / (2 * eps)
    got = K @ du.ravel()
    free = mesh.free_dofs()
    np.testing.assert_allclose(got[free], fd[free], rtol=2e-6, atol=2e-9)


def test_tangent_is_symmetric():
    mesh = build_mesh(1.0, 6, 3)
    fld = perturbed_field(mesh, 0.1, seed=29)
    K = tangent(fld, W).tocsr()
    gap = abs(K - K.T).max()
    assert gap < 1e-12 * abs(K).max()


def test_solve_small_load_converges_and_bends_down():
    mesh = build_mesh(1.0, 64, 8)
    fld, rep = solve_stationary(mesh, 0.2, GAMMA, W)
    assert rep.converged
    assert rep.iterations > 0
    # tip midline moves down under a downward load
    tip = fld.y[mesh.node_ids()[-1, mesh.ny // 2]]
    assert tip[1] < 0.0
    assert rep.elastic_energy > 0.0
    assert rep.total_energy < 0.0  # work done exceeds stored energy at equilibrium


def test_warm_start_prefers_direct_solve():
    mesh = build_mesh(1.0, 64, 8)
    fld, _ = solve_stationary(mesh, 0.2, GAMMA, W)
    mesh2 = build_mesh(1.0, 64, 8)
    warm, rep2 = solve_stationary(mesh2, 0.1, GAMMA, W, warm=fld)
    assert rep2.converged
    assert rep2.message == "warm start"
    assert len(rep2.path) == 1
    assert warm.dirichlet_gap() == 0.0


def test_warm_start_reimposes_clamp_exactly():
    mesh = build_mesh(1.0, 16, 4)
    fld = perturbed_field(mesh, 0.2, scale=0.05)
    fld.y[mesh.clamped_nodes()] += 0.02  # violate the clamp on purpose
    moved = warm_start(fld, build_mesh(1.0, 32, 4), 0.1)
    assert moved.dirichlet_gap() == 0.0


def test_unreachable_load_reports_nonconvergence():
    mesh = build_mesh(1.0, 16, 4)
    cfg = SolverConfig(max_iters=2, load_steps=1, min_load_step=0.3)
    fld, rep = solve_stationary(mesh, 0.2, LoadProfile.constant(0.0, -0.5), W, cfg)
    assert not rep.converged
    assert "stalled" in rep.message
    assert np.all(np.isfinite(fld.y))


def test_residual_guards_inverted_elements():
    mesh = build_mesh(1.0, 4, 2)
    fld = rigid_state(mesh, 0.2)
    grid = mesh.node_ids()
    fld.y[grid[2, :], 0] -= 2.0 * mesh.dx  # fold the mesh over itself
    with pytest.raises(StepRejected):
        residual(fld, GAMMA, W)


def test_thickness_validation():
    mesh = build_mesh(1.0, 8, 2)
    with pytest.raises(ConfigError):
        solve_stationary(mesh, 0.0, GAMMA, W)
    with pytest.raises(ConfigError):
        solve_stationary(mesh, 0.7, GAMMA, W)
