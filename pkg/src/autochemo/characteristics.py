"""Characteristic trace-back for the transport part of the density update.

The density equation is advanced along approximate characteristics: each
quadrature point x is traced to its departure point X = x - dt * p_h(x),
and the traced density is weighted by the Jacobian determinant

    delta = det(I - dt * grad p_h),

constant per element for P1 velocity.  Weighting by delta is what makes
the discrete update conserve total mass when growth is switched off.
"""

from __future__ import annotations

import logging

import numpy as np

from .fem import P1Assembler, QuadratureRule, SIX_POINT_RULE
from .mesh import PeriodicMesh, locate_points, wrap_point

logger = logging.getLogger(__name__)

# delta may degenerate when the traced map folds (dt too large for the
# velocity gradient); clamp from below so the load stays well defined.
DELTA_FLOOR = 1e-8


def trace_back(mesh: PeriodicMesh, p: np.ndarray, dt: float,
               points: np.ndarray) -> np.ndarray:
    """Departure points X = x - dt * p_h(x), wrapped into the domain.

    p holds nodal velocity values, shape (n_nodes, 2); points is (m, 2).
    """
    elems, lam = locate_points(mesh, points)
    vertex_vals = p[mesh.elements[elems]]                 # (m, 3, 2)
    vel = np.einsum("mad,ma->md", vertex_vals, lam)
    return wrap_point(mesh, points - dt * vel)


def jacobian_det(grad_p: np.ndarray, dt: float) -> np.ndarray:
    """det(I - dt * grad_p) for one or many 2x2 velocity gradients.

    Exact closed form (1 - dt g11)(1 - dt g22) - dt^2 g12 g21; agrees
    with the first-order expansion 1 - dt div(p) up to O(dt^2).
    """
    g = np.asarray(grad_p)
    return ((1.0 - dt * g[..., 0, 0]) * (1.0 - dt * g[..., 1, 1])
            - dt * dt * g[..., 0, 1] * g[..., 1, 0])


def element_jacobian_determinants(assembler: P1Assembler, p: np.ndarray,
                                  dt: float, floor: float = DELTA_FLOOR) -> np.ndarray:
    """Per-element det(I - dt * grad p_h), clamped from below at floor."""
    delta = jacobian_det(assembler.vector_jacobians(p), dt)
    degenerate = delta < floor
    if np.any(degenerate):
        logger.warning(
            "characteristic map degenerates on %d of %d elements "
            "(min delta %.3e); clamping at %.1e",
            int(degenerate.sum()), delta.size, float(delta.min()), floor)
        delta = np.maximum(delta, floor)
    return delta


def characteristic_load(assembler: P1Assembler, rho: np.ndarray, p: np.ndarray,
                        dt: float, rule: QuadratureRule = SIX_POINT_RULE) -> np.ndarray:
    """Assemble (rho_h(X) * delta, phi_i) with quadrature-point trace-back."""
    mesh = assembler.mesh
    pts = assembler.quadrature_points(rule)               # (ne, nq, 2)
    p_elem = p[mesh.elements]                             # (ne, 3, 2)
    vel = np.einsum("ead,qa->eqd", p_elem, rule.points)
    departed = wrap_point(mesh, (pts - dt * vel).reshape(-1, 2))
    elems, lam = locate_points(mesh, departed)
    traced = np.einsum("ma,ma->m", rho[mesh.elements[elems]], lam)
    traced = traced.reshape(pts.shape[:2])                # (ne, nq)
    delta = element_jacobian_determinants(assembler, p, dt)
    return assembler.load_from_quadrature(delta[:, None] * traced, rule)
