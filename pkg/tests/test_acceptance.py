"""Acceptance suite: the quantitative targets the package must meet.

Each test prints one ``[criterion N] PASS/FAIL`` line (run with
``pytest -s`` to see them live) and asserts the same condition:

1. spatial second order on the manufactured solution, rates in [1.8, 2.2];
2. temporal first order against dt, rates in [0.9, 1.1];
3. discrete mass balance: (a) conservation with g = 0 and p = 0,
   (b) residual decay >= 3x under (h, dt) halving;
4. the homogeneous state (1, 1, 0) is a fixed point to 1e-8 over 100 steps;
5. spatially constant data tracks the scalar backward-Euler recurrences;
6. element-level identities (mass matrix, stiffness row sums, jacobians);
7. coarse chemorepulsion scenario forms a pattern at carrying capacity;
8. identical config and seed give byte-identical CSV snapshots.

The convergence ladder (shared by 1 and 2) takes a few minutes; the
pattern smoke test around ten.  The whole module stays under its
combined 25-minute budget on commodity hardware.
"""

import dataclasses
import time

import numpy as np
import pytest

from autochemo import build_mesh, P1Assembler
from autochemo.characteristics import jacobian_det
from autochemo.experiments import (ScenarioSpec, get_preset, pattern_metrics,
                                   run_convergence_study, run_scenario)
from autochemo.fem import MIDPOINT_RULE
from autochemo.io import write_snapshot_csv
from autochemo.stepper import ModelParams, State, Stepper

CASE1_PARAMS = ModelParams(D_c=1.0, D_p=1.0, s=-15.0, k=0.5,
                           gamma=1.0, gamma2=10.0, g=0.1)
CASE3_PARAMS = dataclasses.replace(CASE1_PARAMS, s=-25.0, g=1.0)


def _report(num, name: str, ok: bool, detail: str) -> None:
    print(f"\n[criterion {num}] {'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, f"criterion {num} ({name}): {detail}"


@pytest.fixture(scope="module")
def ladder():
    # dt = h^2 ladder shared by the spatial and temporal rate checks
    return run_convergence_study(levels=(8, 16, 32, 64), T=1.0)


def test_criterion_1_spatial_convergence(ladder):
    ok = True
    parts = []
    for key in ("rho_l2", "rho_linf", "c_l2", "c_linf", "p_l2", "p_linf"):
        errs = ladder.errors(key)
        monotone = all(a > b for a, b in zip(errs, errs[1:]))
        rates = ladder.rates(key)[-2:]
        in_band = all(1.8 <= r <= 2.2 for r in rates)
        ok = ok and monotone and in_band
        parts.append(f"{key}=({rates[0]:.2f},{rates[1]:.2f})"
                     + ("" if monotone else "!mono"))
    _report(1, "spatial rates in [1.8, 2.2], errors monotone", ok,
            " ".join(parts))


def test_criterion_2_temporal_convergence(ladder):
    ok = True
    parts = []
    for key in ("rho_l2", "c_l2", "p_l2"):
        rates = ladder.rates(key, wrt="dt")[-2:]
        ok = ok and all(0.9 <= r <= 1.1 for r in rates)
        parts.append(f"{key}=({rates[0]:.3f},{rates[1]:.3f})")
    _report(2, "temporal rates in [0.9, 1.1]", ok, " ".join(parts))


def test_criterion_3a_conservation_without_growth():
    mesh = build_mesh(32, 32, 1.0, 1.0)
    params = ModelParams(s=0.0, g=0.0)
    stepper = Stepper(mesh, params, dt=0.01)
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    n = mesh.n_nodes
    state = State(rho=1.0 + 0.5 * np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y),
                  c=np.ones(n), p=np.zeros((n, 2)))
    m0 = stepper.assembler.integrate(state.rho)
    worst = 0.0
    for _ in range(10):
        state, diag = stepper.step(state)
        worst = max(worst, diag.mass_residual / abs(m0))
    ok = worst <= 1e-8 and np.abs(state.p).max() == 0.0
    _report("3a", "mass conserved with g = 0, p = 0", ok,
            f"max relative step residual {worst:.2e} (tol 1e-08)")


def test_criterion_3b_residual_decays_under_refinement():
    residuals = []
    for nx, dt in ((16, 0.02), (32, 0.01)):
        mesh = build_mesh(nx, nx, 1.0, 1.0)
        stepper = Stepper(mesh, ModelParams(g=0.5), dt=dt)
        x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
        n = mesh.n_nodes
        state = State(
            rho=1.0 + 0.4 * np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y),
            c=np.ones(n),
            p=0.3 * np.column_stack([np.sin(2 * np.pi * y),
                                     np.cos(2 * np.pi * x)]))
        worst = 0.0
        for _ in range(10):
            state, diag = stepper.step(state)
            worst = max(worst, diag.mass_residual)
        residuals.append(worst)
    ratio = residuals[0] / residuals[1]
    _report("3b", "mass residual decays under (h, dt) halving", ratio >= 3.0,
            f"R_coarse={residuals[0]:.2e} R_fine={residuals[1]:.2e} "
            f"ratio {ratio:.1f} (>= 3 required)")


def test_criterion_4_homogeneous_fixed_point():
    worst = 0.0
    for params in (CASE1_PARAMS, CASE3_PARAMS):
        mesh = build_mesh(16, 16, 60.0, 60.0)
        stepper = Stepper(mesh, params, dt=0.01)
        n = mesh.n_nodes
        state = State(rho=np.ones(n), c=np.ones(n), p=np.zeros((n, 2)))
        state = stepper.advance(state, 100)
        drift = max(np.abs(state.rho - 1.0).max(),
                    np.abs(state.c - 1.0).max(),
                    np.abs(state.p).max())
        worst = max(worst, drift)
    _report(4, "(1, 1, 0) fixed to 1e-8 over 100 steps", worst <= 1e-8,
            f"max nodal drift {worst:.2e}")


def test_criterion_5_scalar_recurrences():
    mesh = build_mesh(8, 8, 1.0, 1.0)
    dt, n = 0.05, mesh.n_nodes
    defects = {}

    # logistic: rho_n = rho_{n-1} / (1 - dt g (1 - rho_{n-1}))
    params = ModelParams(g=0.4)
    stepper = Stepper(mesh, params, dt)
    state = State(rho=0.3 * np.ones(n), c=np.ones(n), p=np.zeros((n, 2)))
    worst = 0.0
    for _ in range(50):
        prev = state.rho.copy()
        state, _ = stepper.step(state)
        pred = prev / (1.0 - dt * params.g * (1.0 - prev))
        worst = max(worst, np.abs(state.rho - pred).max())
    defects["rho"] = worst

    # attractant with rho = 0: c_n = c_{n-1} / (1 + dt)
    stepper = Stepper(mesh, ModelParams(g=0.0), dt)
    state = State(rho=np.zeros(n), c=2.0 * np.ones(n), p=np.zeros((n, 2)))
    worst = 0.0
    for _ in range(50):
        prev = state.c.copy()
        state, _ = stepper.step(state)
        worst = max(worst, np.abs(state.c - prev / (1.0 + dt)).max())
    defects["c"] = worst

    # polarization with gamma2 = 0 and flat c: p_n = p_{n-1} / (1 + dt gamma)
    params = ModelParams(gamma=1.5, gamma2=0.0, g=0.0)
    stepper = Stepper(mesh, params, dt)
    state = State(rho=np.ones(n), c=np.ones(n),
                  p=np.full((n, 2), 0.6))
    worst = 0.0
    for _ in range(50):
        prev = state.p.copy()
        state, _ = stepper.step(state)
        pred = prev / (1.0 + dt * params.gamma)
        worst = max(worst, np.abs(state.p - pred).max())
    defects["p"] = worst

    ok = all(v <= 1e-9 for v in defects.values())
    _report(5, "scalar backward-Euler recurrences", ok,
            " ".join(f"{k} defect {v:.2e}" for k, v in defects.items()))


def test_criterion_6_element_identities():
    mesh = build_mesh(3, 2, 1.2, 0.7)     # hx != hy, both parities
    asm = P1Assembler(mesh)
    area = 0.5 * mesh.hx * mesh.hy
    ref = area / 12.0 * (np.ones((3, 3)) + np.eye(3))

    # midpoint quadrature of phi_i phi_j (exact for quadratics) per triangle
    lam = MIDPOINT_RULE.points
    local = area * np.einsum("q,qi,qj->ij", MIDPOINT_RULE.weights, lam, lam)
    mass_ok = np.allclose(local, ref, rtol=0.0, atol=1e-14)

    # global matrix assembled from that per-triangle formula
    dense = np.zeros((mesh.n_nodes, mesh.n_nodes))
    for conn in mesh.elements:
        dense[np.ix_(conn, conn)] += ref
    mass_ok = mass_ok and np.allclose(asm.mass().toarray(), dense,
                                      rtol=0.0, atol=1e-15)

    big = P1Assembler(build_mesh(64, 48, 2.0, 1.5))
    row_sums = np.abs(big.stiffness() @ np.ones(big.mesh.n_nodes)).max()
    stiff_ok = row_sums <= 1e-10

    # dyadic rationals make every product exact, so equality is literal
    grads = np.array([[[0.25, -0.5], [0.125, 0.75]],
                      [[0.0, 0.0], [0.0, 0.0]],
                      [[-1.5, 0.25], [0.5, -0.75]]])
    dt = 0.5
    expected = ((1.0 - dt * grads[:, 0, 0]) * (1.0 - dt * grads[:, 1, 1])
                - dt * grads[:, 0, 1] * dt * grads[:, 1, 0])
    jac_ok = np.array_equal(jacobian_det(grads, dt), expected)

    ok = mass_ok and stiff_ok and jac_ok
    _report(6, "element-level identities", ok,
            f"mass={'ok' if mass_ok else 'BAD'} "
            f"stiffness row sums {row_sums:.1e} (tol 1e-10) "
            f"jacobian={'exact' if jac_ok else 'BAD'}")


def test_criterion_7_pattern_smoke():
    # coarse variant of the localized-inoculation chemorepulsion run;
    # the blob width is raised to 3.0 so the h = 0.6 mesh resolves it
    spec = dataclasses.replace(get_preset("case1-coarse"), dt=0.02, T=200.0,
                               gaussian_width=3.0, seed=7)
    t0 = time.perf_counter()
    state = run_scenario(spec)
    elapsed = time.perf_counter() - t0

    mesh = build_mesh(spec.nx, spec.ny, spec.Lx, spec.Ly)
    metrics = pattern_metrics(state, mesh)
    mass = P1Assembler(mesh).integrate(state.rho)
    target = spec.Lx * spec.Ly
    finite = all(np.all(np.isfinite(a)) for a in (state.rho, state.c, state.p))
    ok = (finite and metrics.rho_std > 0.05
          and abs(mass - target) <= 0.02 * target and elapsed < 900.0)
    _report(7, "coarse chemorepulsion pattern", ok,
            f"std(rho)={metrics.rho_std:.4f} (> 0.05) "
            f"mass={mass:.1f} (within 2% of {target:.0f}) "
            f"finite={finite} wall={elapsed:.0f}s (< 900)")


def test_criterion_8_deterministic_snapshots(tmp_path):
    spec = ScenarioSpec(name="det", nx=24, ny=24, dt=0.02, T=0.1,
                        init="uniform-perturbed", seed=42)
    mesh = build_mesh(spec.nx, spec.ny, spec.Lx, spec.Ly)
    payloads = []
    for run in range(2):
        state = run_scenario(spec)
        path = tmp_path / f"run{run}.csv"
        write_snapshot_csv(state, mesh, path)
        payloads.append(path.read_bytes())
    ok = payloads[0] == payloads[1]
    _report(8, "byte-identical CSV snapshots", ok,
            f"{len(payloads[0])} bytes compared")
