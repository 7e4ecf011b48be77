"""Stationary points of the scaled strip functional.

The discrete functional on a strip mesh is

    Pi(y) = sum_qp w * [ W(F) - h^2 * mu * g(x1) . y ],   F = Id + (d1 u, d2 u / h),

with u the displacement from the rigid state and mu a load factor.  Newton
iteration with Armijo backtracking on Pi, load continuation mu: 0 -> 1, and a
determinant guard det F > 0.1 that rejects steps entering the near-degenerate
regime.  Assembly is vectorized over elements in element-index order, so
residual and tangent are bit-reproducible.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .algebra import det2
from .energy import EnergyDensity
from .errors import ConfigError, NonConvergence, StepRejected
from .loads import LoadProfile
from .mesh import DeformationField, StripMesh, rigid_state

ARMIJO_C = 1e-4


@dataclass
class SolverConfig:
    newton_tol: float = 1e-6       # residual sup norm, relative to the load scale
    newton_tol_abs: float = 0.0    # absolute fallback threshold
    newton_stall_rel: float = 1e-3  # accept a stalled residual below this (relative)
    max_iters: int = 25            # Newton iterations per load step
    load_steps: int = 10           # initial continuation increments 0 -> 1
    min_load_step: float = 1e-4    # give up below this increment
    det_floor: float = 0.1         # determinant guard on scaled gradients
    max_backtracks: int = 40       # Armijo halvings per Newton step


@dataclass
class SolverReport:
    converged: bool
    iterations: int
    residual_sup: float
    elastic_energy: float
    total_energy: float
    path: list[tuple[float, int]] = field(default_factory=list)  # (load factor, iterations)
    runtime: float = 0.0
    message: str = ""


def _check_h(h: float) -> float:
    if not (0.0 < h <= 0.5):
        raise ConfigError(f"thickness h must lie in (0, 0.5], got {h!r}")
    return float(h)


def _guard_dets(mesh: StripMesh, F: np.ndarray, floor: float) -> None:
    d = det2(F)
    j = int(np.argmin(d))
    if d[j] <= floor:
        raise StepRejected(mesh.qp_x[j, 0], mesh.qp_x[j, 1], float(d[j]), floor)


def _scaled_dshape(mesh: StripMesh, h: float) -> np.ndarray:
    """Shape derivatives matching the scaled gradient: d2 carries a 1/h."""
    sd = mesh.dshape.copy()
    sd[..., 1] /= h
    return sd


def load_vector(mesh: StripMesh, g: LoadProfile, h: float) -> np.ndarray:
    """Assembled load term at unit load factor, clamped rows zeroed."""
    gvals = g(mesh.qp_x[:, 0]).reshape(mesh.nelem, 4, 2)
    contrib = h * h * mesh.qp_w * np.einsum("eqi,qa->eqai", gvals, mesh.shape_n)
    lv = np.zeros((mesh.nnode, 2))
    np.add.at(lv, mesh.conn, contrib.sum(axis=1))
    lv[mesh.clamped_nodes()] = 0.0
    return lv.reshape(-1)


def elastic_residual(fld: DeformationField, W: EnergyDensity, det_floor: float) -> np.ndarray:
    """Gradient of the elastic part w.r.t. nodal positions, clamped rows zeroed."""
    mesh = fld.mesh
    F = fld.gradients()
    _guard_dets(mesh, F, det_floor)
    P = W.stress(F).reshape(mesh.nelem, 4, 2, 2)
    contrib = mesh.qp_w * np.einsum("eqik,qak->eqai", P, _scaled_dshape(mesh, fld.h))
    r = np.zeros((mesh.nnode, 2))
    np.add.at(r, mesh.conn, contrib.sum(axis=1))
    r[mesh.clamped_nodes()] = 0.0
    return r.reshape(-1)


def residual(
    fld: DeformationField,
    g: LoadProfile,
    W: EnergyDensity,
    load_factor: float = 1.0,
    det_floor: float = 0.1,
) -> np.ndarray:
    """Gradient of the discrete functional w.r.t. nodal positions, (2*nnode,).

    Rows of clamped nodes are zeroed.  Raises StepRejected when any scaled
    gradient determinant falls to det_floor or below.
    """
    return elastic_residual(fld, W, det_floor) - load_factor * load_vector(
        fld.mesh, g, fld.h
    )


def tangent(
    fld: DeformationField,
    W: EnergyDensity,
    det_floor: float = 0.1,
) -> sp.csr_matrix:
    """Second derivative of the discrete functional, symmetric CSR.

    Rows and columns of clamped dofs are replaced by identity.
    """
    mesh = fld.mesh
    F = fld.gradients()
    _guard_dets(mesh, F, det_floor)
    A = W.hessian(F).reshape(mesh.nelem, 4, 2, 2, 2, 2)
    sdsh = _scaled_dshape(mesh, fld.h)
    ke = np.zeros((mesh.nelem, 4, 2, 4, 2))
    for q in range(4):
        s = sdsh[q]
        ke += mesh.qp_w * np.einsum("eikjl,ak,bl->eaibj", A[:, q], s, s)
    ke = ke.reshape(mesh.nelem, 8, 8)

    edofs = (2 * mesh.conn[:, :, None] + np.arange(2)[None, None, :]).reshape(mesh.nelem, 8)
    rows = np.repeat(edofs, 8, axis=1).reshape(-1)
    cols = np.tile(edofs, (1, 8)).reshape(-1)
    K = sp.coo_matrix(
        (ke.reshape(-1), (rows, cols)), shape=(2 * mesh.nnode, 2 * mesh.nnode)
    ).tocsr()

    fixed = ~mesh.free_dofs()
    mask = sp.diags(mesh.free_dofs().astype(float))
    K = mask @ K @ mask + sp.diags(fixed.astype(float))
    return K.tocsr()


def scaled_energy(
    fld: DeformationField,
    g: LoadProfile,
    W: EnergyDensity,
    load_factor: float = 1.0,
) -> tuple[float, float]:
    """(elastic energy, total energy with the load term) of a deformation."""
    mesh = fld.mesh
    F = fld.gradients()
    elastic = float(mesh.qp_w * np.sum(W.energy(F)))
    gvals = g(mesh.qp_x[:, 0])
    yq = mesh.qp_values(fld.y)
    work = float(mesh.qp_w * np.sum(gvals * yq))
    return elastic, elastic - load_factor * fld.h ** 2 * work


def _newton(
    fld: DeformationField,
    g: LoadProfile,
    W: EnergyDensity,
    load_factor: float,
    cfg: SolverConfig,
) -> tuple[int, float]:
    """Newton with Armijo backtracking at fixed load factor.

    Mutates fld.y in place; returns (iterations, residual sup norm).
    Raises StepRejected or NonConvergence on failure.
    """
    mesh = fld.mesh
    free = mesh.free_dofs()
    fscale = load_factor * float(np.max(np.abs(load_vector(mesh, g, fld.h))))
    tol = max(cfg.newton_tol * fscale, cfg.newton_tol_abs)
    r = residual(fld, g, W, load_factor, cfg.det_floor)
    rsup = float(np.max(np.abs(r)))
    it = 0
    stalled = 0
    while rsup > tol:
        # roundoff in the assembly floors the reachable residual; accept a
        # stalled iteration once it is far below the load scale
        if stalled >= 1 and rsup <= cfg.newton_stall_rel * fscale:
            break
        if it >= cfg.max_iters:
            raise NonConvergence("Newton iteration cap reached", rsup)
        K = tangent(fld, W, cfg.det_floor)
        delta = spla.spsolve(K.tocsc(), -r)
        delta[~free] = 0.0
        slope = float(r @ delta)
        if slope >= 0.0:
            delta = -r  # fall back to steepest descent if K lost descent
            slope = float(r @ delta)
        _, e0 = scaled_energy(fld, g, W, load_factor)
        y0 = fld.y.copy()
        alpha = 1.0
        for _ in range(cfg.max_backtracks):
            fld.y = y0 + alpha * delta.reshape(-1, 2)
            try:
                _, e1 = scaled_energy(fld, g, W, load_factor)
                # energy evaluation has no guard; check dets explicitly
                _guard_dets(mesh, fld.gradients(), cfg.det_floor)
            except StepRejected:
                alpha *= 0.5
                continue
            if e1 <= e0 + ARMIJO_C * alpha * slope:
                break
            # near the residual floor the energy difference drowns in
            # roundoff; accept on plain residual decrease before shrinking
            r_trial = residual(fld, g, W, load_factor, cfg.det_floor)
            if float(np.max(np.abs(r_trial))) <= (1.0 - ARMIJO_C * alpha) * rsup:
                break
            alpha *= 0.5
        else:
            fld.y = y0
            raise NonConvergence("line search failed", rsup)
        r = residual(fld, g, W, load_factor, cfg.det_floor)
        rsup_new = float(np.max(np.abs(r)))
        stalled = stalled + 1 if rsup_new >= 0.5 * rsup else 0
        rsup = rsup_new
        it += 1
    return it, rsup


def solve_stationary(
    mesh: StripMesh,
    h: float,
    g: LoadProfile,
    W: EnergyDensity,
    cfg: SolverConfig | None = None,
    warm: DeformationField | None = None,
) -> tuple[DeformationField, SolverReport]:
    """Solve the clamped strip problem at thickness h.

    Starts from the rigid state and ramps the load factor from 0 to 1 in
    cfg.load_steps increments, halving an increment whenever Newton fails on
    it (error below cfg.min_load_step).  With ``warm`` given, first tries a
    direct solve at full load from the warm-started state and only falls back
    to continuation if that fails.
    """
    cfg = cfg or SolverConfig()
    h = _check_h(h)
    t0 = time.perf_counter()

    if warm is not None:
        fld = warm_start(warm, mesh, h)
        try:
            it, rsup = _newton(fld, g, W, 1.0, cfg)
            el, tot = scaled_energy(fld, g, W, 1.0)
            return fld, SolverReport(
                converged=True, iterations=it, residual_sup=rsup,
                elastic_energy=el, total_energy=tot, path=[(1.0, it)],
                runtime=time.perf_counter() - t0, message="warm start",
            )
        except (StepRejected, NonConvergence):
            pass  # fall through to cold continuation

    fld = rigid_state(mesh, h)
    path: list[tuple[float, int]] = []
    total_it = 0
    mu = 0.0
    cap = 1.0 / max(1, cfg.load_steps)
    step = cap
    rsup = float(np.max(np.abs(residual(fld, g, W, 0.0, cfg.det_floor))))
    while mu < 1.0:
        s = min(step, 1.0 - mu)
        while True:
            trial = DeformationField(mesh=mesh, h=h, y=fld.y.copy())
            try:
                it, rsup = _newton(trial, g, W, mu + s, cfg)
                break
            except (StepRejected, NonConvergence) as exc:
                s *= 0.5
                if s < cfg.min_load_step:
                    el, tot = scaled_energy(fld, g, W, mu)
                    return fld, SolverReport(
                        converged=False, iterations=total_it, residual_sup=rsup,
                        elastic_energy=el, total_energy=tot, path=path,
                        runtime=time.perf_counter() - t0,
                        message=f"continuation stalled at load factor {mu:.6g}: {exc}",
                    )
        fld = trial
        mu += s
        total_it += it
        path.append((mu, it))
        step = min(cap, 2.0 * s)  # recover after halvings, never exceed the cap

    el, tot = scaled_energy(fld, g, W, 1.0)
    return fld, SolverReport(
        converged=True, iterations=total_it, residual_sup=rsup,
        elastic_energy=el, total_energy=tot, path=path,
        runtime=time.perf_counter() - t0,
    )


def warm_start(prev: DeformationField, mesh: StripMesh, h: float) -> DeformationField:
    """Transfer a solution at one thickness onto a new mesh and thickness.

    Interpolates nodal positions, rescales the cross-sectional variation by
    h/h_prev about the per-column mean (so the scaled gradient's second
    column carries over), and re-imposes the clamped edge exactly.
    """
    h = _check_h(h)
    yi = prev.mesh.interpolate(prev.y, mesh.nodes)
    cols = yi.reshape(mesh.nx + 1, mesh.ny + 1, 2)
    w = np.full(mesh.ny + 1, mesh.dy)
    w[0] = w[-1] = 0.5 * mesh.dy
    mean = np.einsum("j,cjk->ck", w, cols)
    yr = mean[:, None, :] + (h / prev.h) * (cols - mean[:, None, :])
    fld = DeformationField(mesh=mesh, h=h, y=yr.reshape(-1, 2))
    ids = mesh.clamped_nodes()
    fld.y[ids, 0] = 0.0
    fld.y[ids, 1] = h * mesh.x2
    return fld
