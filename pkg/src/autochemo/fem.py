"""P1 finite element primitives on the periodic triangulated rectangle.

Assembly is fully vectorised.  A canonical CSR sparsity pattern is
computed once per mesh (lexsort of the element-wise COO entries); every
matrix assembly then reduces to one np.bincount over precomputed slots,
which makes repeated assemblies cheap and bit-reproducible: summation
order is fixed by the pattern, never by hashing.

Element orientation convention (matching the mesh): even element index
is the lower-right triangle of its cell, odd is the upper-left.  P1
gradients are constant per element and tabulated per orientation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import PeriodicMesh, locate_points


@dataclass(frozen=True)
class QuadratureRule:
    """Barycentric points (nq, 3) and weights (nq,) summing to one."""

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __post_init__(self):
        if not np.isclose(self.weights.sum(), 1.0, rtol=0, atol=1e-14):
            raise ValueError("quadrature weights must sum to 1")


# Edge midpoints: exact through quadratic integrands.
MIDPOINT_RULE = QuadratureRule(
    points=np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]),
    weights=np.full(3, 1.0 / 3.0),
    degree=2,
)

# Two-orbit six point rule, exact through quartics.
_A1, _B1, _W1 = 0.445948490915965, 0.108103018168070, 0.223381589678011
_A2, _B2, _W2 = 0.091576213509771, 0.816847572980459, 0.109951743655322
SIX_POINT_RULE = QuadratureRule(
    points=np.array([
        [_A1, _A1, _B1], [_A1, _B1, _A1], [_B1, _A1, _A1],
        [_A2, _A2, _B2], [_A2, _B2, _A2], [_B2, _A2, _A2],
    ]),
    weights=np.array([_W1, _W1, _W1, _W2, _W2, _W2]),
    degree=4,
)

# Reference mass matrix scaled by element area: integral of phi_a phi_b.
_MASS_REF = np.array([[2.0, 1.0, 1.0],
                      [1.0, 2.0, 1.0],
                      [1.0, 1.0, 2.0]]) / 12.0


def _gradient_table(hx: float, hy: float) -> np.ndarray:
    """Constant P1 gradients, shape (2, 3, 2): orientation, node, component."""
    low = np.array([[-1.0 / hx, 0.0],
                    [1.0 / hx, -1.0 / hy],
                    [0.0, 1.0 / hy]])
    up = np.array([[0.0, -1.0 / hy],
                   [1.0 / hx, 0.0],
                   [-1.0 / hx, 1.0 / hy]])
    return np.stack([low, up])


class P1Assembler:
    """Matrix/vector assembly and field evaluation bound to one mesh."""

    def __init__(self, mesh: PeriodicMesh):
        self.mesh = mesh
        self.grad_table = _gradient_table(mesh.hx, mesh.hy)
        n_elem = mesh.n_elements
        self.parity = np.arange(n_elem) % 2
        # (n_elem, 3, 2): gradient of each local basis function per element
        self.elem_grads = self.grad_table[self.parity]
        self._build_pattern()
        self._mass = None
        self._stiffness = None
        area = mesh.element_area
        counts = np.bincount(mesh.elements.ravel(), minlength=mesh.n_nodes)
        # integral of each global basis function; equals the mass matrix row sums
        self.phi_integrals = counts * (area / 3.0)

    # -- sparsity pattern ------------------------------------------------

    def _build_pattern(self):
        tri = self.mesh.elements
        n = self.mesh.n_nodes
        rows = np.repeat(tri, 3, axis=1).ravel()
        cols = np.tile(tri, (1, 3)).ravel()
        order = np.lexsort((cols, rows))
        rs, cs = rows[order], cols[order]
        first = np.empty(rs.size, dtype=bool)
        first[0] = True
        first[1:] = (rs[1:] != rs[:-1]) | (cs[1:] != cs[:-1])
        slot_sorted = np.cumsum(first) - 1
        slots = np.empty(rs.size, dtype=np.int64)
        slots[order] = slot_sorted
        self._slots = slots
        self._nnz = int(slot_sorted[-1]) + 1
        self._indices = cs[first].astype(np.int32)
        indptr = np.zeros(n + 1, dtype=np.int32)
        np.cumsum(np.bincount(rs[first], minlength=n), out=indptr[1:])
        self._indptr = indptr

    def _matrix_from_local(self, local: np.ndarray) -> sp.csr_matrix:
        """Scatter (n_elem, 3, 3) local matrices into the shared pattern."""
        data = np.bincount(self._slots, weights=local.ravel(), minlength=self._nnz)
        n = self.mesh.n_nodes
        return sp.csr_matrix((data, self._indices, self._indptr), shape=(n, n))

    # -- matrices --------------------------------------------------------

    def mass(self) -> sp.csr_matrix:
        if self._mass is None:
            area = self.mesh.element_area
            local = np.broadcast_to(area * _MASS_REF,
                                    (self.mesh.n_elements, 3, 3))
            self._mass = self._matrix_from_local(local)
        return self._mass

    def stiffness(self) -> sp.csr_matrix:
        if self._stiffness is None:
            area = self.mesh.element_area
            # grad_a . grad_b, constant per orientation
            k_ref = area * np.einsum("pad,pbd->pab",
                                     self.grad_table, self.grad_table)
            self._stiffness = self._matrix_from_local(k_ref[self.parity])
        return self._stiffness

    def weighted_mass(self, w: np.ndarray) -> sp.csr_matrix:
        """Assemble (w_h phi_a, phi_b) with P1 coefficient w, midpoint rule."""
        if w.shape != (self.mesh.n_nodes,):
            raise ValueError(f"expected nodal vector, got shape {w.shape}")
        bary = MIDPOINT_RULE.points
        wts = MIDPOINT_RULE.weights
        w_elem = w[self.mesh.elements]                    # (ne, 3)
        w_quad = w_elem @ bary.T                          # (ne, nq)
        local = self.mesh.element_area * np.einsum(
            "q,eq,qa,qb->eab", wts, w_quad, bary, bary)
        return self._matrix_from_local(local)

    # -- load vectors ------------------------------------------------------

    def quadrature_points(self, rule: QuadratureRule = SIX_POINT_RULE) -> np.ndarray:
        """Physical quadrature points, shape (n_elem, nq, 2), unwrapped charts."""
        return np.einsum("qa,ead->eqd", rule.points, self.mesh.elem_coords)

    def load_from_quadrature(self, values: np.ndarray,
                             rule: QuadratureRule = SIX_POINT_RULE) -> np.ndarray:
        """Assemble (f, phi_i) from integrand samples of shape (n_elem, nq)."""
        contrib = self.mesh.element_area * np.einsum(
            "q,eq,qa->ea", rule.weights, values, rule.points)
        return np.bincount(self.mesh.elements.ravel(), weights=contrib.ravel(),
                           minlength=self.mesh.n_nodes)

    def load_function(self, func, rule: QuadratureRule = SIX_POINT_RULE) -> np.ndarray:
        """Assemble (f, phi_i) for a callable f(x, y) of coordinate arrays."""
        pts = self.quadrature_points(rule)
        return self.load_from_quadrature(func(pts[..., 0], pts[..., 1]), rule)

    def load_element_constant(self, vals: np.ndarray) -> np.ndarray:
        """Assemble (w, phi_i) for element-wise constant w; exact, no quadrature."""
        contrib = np.repeat(vals * (self.mesh.element_area / 3.0), 3)
        return np.bincount(self.mesh.elements.ravel(), weights=contrib,
                           minlength=self.mesh.n_nodes)

    def flux_divergence_load(self, rho: np.ndarray, p: np.ndarray,
                             rule: QuadratureRule = MIDPOINT_RULE) -> np.ndarray:
        """Weak divergence of the nodal flux rho_h * p_h.

        Returns (div(rho_h p_h), phi_i) integrated by parts on the torus,
        i.e. -(rho_h p_h, grad phi_i).  The integrand is quadratic, so the
        default midpoint rule is exact.
        """
        bary, wts = rule.points, rule.weights
        tri = self.mesh.elements
        rho_q = rho[tri] @ bary.T                         # (ne, nq)
        p_q = np.einsum("ead,qa->eqd", p[tri], bary)      # (ne, nq, 2)
        contrib = -self.mesh.element_area * np.einsum(
            "q,eq,eqd,ead->ea", wts, rho_q, p_q, self.elem_grads)
        return np.bincount(tri.ravel(), weights=contrib.ravel(),
                           minlength=self.mesh.n_nodes)

    # -- evaluation and norms ---------------------------------------------

    def element_gradients(self, u: np.ndarray) -> np.ndarray:
        """Piecewise constant gradient of a P1 field, shape (n_elem, 2)."""
        return np.einsum("ea,ead->ed", u[self.mesh.elements], self.elem_grads)

    def vector_jacobians(self, p: np.ndarray) -> np.ndarray:
        """Per-element Jacobian of a P1 vector field, shape (n_elem, 2, 2).

        Row i holds grad(p_i); the trace is the discrete divergence.
        """
        return np.stack([self.element_gradients(p[:, 0]),
                         self.element_gradients(p[:, 1])], axis=1)

    def evaluate(self, u: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Point values of a P1 field; points (m, 2) are wrapped and located."""
        elems, lam = locate_points(self.mesh, points)
        return np.einsum("ma,ma->m", u[self.mesh.elements[elems]], lam)

    def integrate(self, u: np.ndarray) -> float:
        """Integral of a P1 field over the domain (exact)."""
        return float(u @ self.phi_integrals)

    def l2_error(self, u: np.ndarray, exact,
                 rule: QuadratureRule = SIX_POINT_RULE) -> float:
        """L2 distance between a P1 field and a callable exact(x, y)."""
        pts = self.quadrature_points(rule)
        u_quad = u[self.mesh.elements] @ rule.points.T    # (ne, nq)
        diff = u_quad - exact(pts[..., 0], pts[..., 1])
        val = self.mesh.element_area * np.einsum("q,eq->", rule.weights, diff * diff)
        return float(np.sqrt(val))

    def linf_node_error(self, u: np.ndarray, exact) -> float:
        """Max nodal deviation from a callable exact(x, y)."""
        nodes = self.mesh.nodes
        return float(np.max(np.abs(u - exact(nodes[:, 0], nodes[:, 1]))))
