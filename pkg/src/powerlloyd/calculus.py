"""Closed-form first and second derivatives of the cell masses, the energy
and the Lloyd maps.

The mass derivatives have weighted graph-Laplacian structure over the cell
adjacency graph with edge weights m_ij / (2 d_ij); everything else is
assembled from them plus per-edge first and second moments.  All formulas
are cross-checked against central finite differences by ``fd_check``.

Matrix layout: position blocks are generator-major, (x1, y1, x2, y2, ...),
so position-indexed matrices have size 2N and weight-indexed ones size N.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyCell,
    NotAFixedPoint,
    PointContactAdjacency,
    SingularDescentMatrix,
)
from .geometry import GeneratorSet
from .lloyd import evaluate_state, lloyd_maps
from .measures import edge_moments

__all__ = [
    "MassJacobian",
    "EnergyGradient",
    "LloydJacobian",
    "FixedPointHessian",
    "DescentForm",
    "FDReport",
    "grad_masses",
    "grad_energy",
    "lloyd_jacobian",
    "hessian_at_fixed_point",
    "descent_form",
    "fd_check",
]


@dataclass(frozen=True)
class MassJacobian:
    """d m_j / d x_i in blocks[i, j] and d m_j / d w_i in d_m_d_w[i, j]."""

    blocks: np.ndarray  # (N, N, 2)
    d_m_d_w: np.ndarray  # (N, N), symmetric graph Laplacian

    @property
    def d_m_d_X(self):
        """(2N, N) matrix; rows generator-major."""
        n = self.blocks.shape[0]
        return self.blocks.transpose(0, 2, 1).reshape(2 * n, n)


def _edge_table(diagram, density):
    """Per-adjacency-edge moments keyed by the (i < j) pair."""
    adj = diagram.adjacency
    table = {}
    for i, j in sorted(adj.segments):
        em = edge_moments(adj.segment(i, j), density)
        table[(i, j)] = em
    return table


def grad_masses(diagram, density):
    """Derivatives of all cell masses with respect to positions and weights."""
    adj = diagram.adjacency
    if adj.point_contacts:
        raise PointContactAdjacency(
            f"cells touch only at a point: {sorted(adj.point_contacts)}"
        )
    n = diagram.n
    blocks = np.zeros((n, n, 2))
    lap = np.zeros((n, n))
    for (i, j), em in _edge_table(diagram, density).items():
        d = adj.distance(i, j)
        u = em.mass / (2.0 * d)
        lap[i, i] += u
        lap[j, j] += u
        lap[i, j] -= u
        lap[j, i] -= u
        # d m_j / d x_i = -(m_ij/d_ij)(xbar_ij - x_i) for adjacent i != j
        gi = (em.mass / d) * (em.centroid - adj.positions[i])
        gj = (em.mass / d) * (em.centroid - adj.positions[j])
        blocks[i, i] += gi
        blocks[j, j] += gj
        blocks[i, j] -= gi
        blocks[j, i] -= gj
    return MassJacobian(blocks, lap)


@dataclass(frozen=True)
class EnergyGradient:
    d_E_d_X: np.ndarray  # (N, 2)
    d_E_d_w: np.ndarray  # (N,)
    mass_matrix: np.ndarray  # diag(2 m_i I_2), (2N, 2N)
    residual_X: np.ndarray  # X - xi, (N, 2)
    residual_w: np.ndarray  # w - omega, (N,)
    mass_jacobian: MassJacobian

    @property
    def flat(self):
        """Stacked gradient (2N + N,), positions generator-major first."""
        return np.concatenate([self.d_E_d_X.ravel(), self.d_E_d_w])


def grad_energy(state, cost):
    """Exact energy gradient via the block factorization.

    (grad_X E; grad_w E) = [[2 M_hat, dm/dX], [0, dm/dw]] (X - xi; w - omega).
    """
    mj = grad_masses(state.diagram, state.density)
    xi, omega = lloyd_maps(state, cost)
    gens = state.generators
    masses = state.masses
    rx = gens.positions - xi
    rw = gens.weights - omega
    d_e_d_x = 2.0 * masses[:, None] * rx + np.einsum("ijd,j->id", mj.blocks, rw)
    d_e_d_w = mj.d_m_d_w @ rw
    mhat = np.kron(np.diag(2.0 * masses), np.eye(2))
    return EnergyGradient(d_e_d_x, d_e_d_w, mhat, rx, rw, mj)


@dataclass(frozen=True)
class LloydJacobian:
    d_xi_d_X: np.ndarray  # (2N, 2N)
    d_xi_d_w: np.ndarray  # (2N, N)
    d_omega_d_X: np.ndarray  # (N, 2N)
    d_omega_d_w: np.ndarray  # (N, N)

    @property
    def matrix(self):
        """Full (3N, 3N) Jacobian, positions first."""
        top = np.hstack([self.d_xi_d_X, self.d_xi_d_w])
        bot = np.hstack([self.d_omega_d_X, self.d_omega_d_w])
        return np.vstack([top, bot])


def lloyd_jacobian(state, cost):
    """Derivatives of the centroid and weight maps (xi, omega)."""
    adj = state.diagram.adjacency
    if adj.point_contacts:
        raise PointContactAdjacency(
            f"cells touch only at a point: {sorted(adj.point_contacts)}"
        )
    n = state.diagram.n
    masses = state.masses
    if np.any(masses <= 0):
        raise EmptyCell("Jacobian requested with a massless cell")
    xi = np.array([m.centroid for m in state.moments])
    pos = state.generators.positions
    fpp = np.asarray(cost.fsecond(masses), dtype=float)

    dxi_dx = np.zeros((2 * n, 2 * n))
    dxi_dw = np.zeros((2 * n, n))
    dom_dx = np.zeros((n, 2 * n))
    dom_dw = np.zeros((n, n))

    def _xi_block(i, j, em, d):
        # d xi_i / d x_j; for j = i the same formula with x_i in place of x_j
        s = em.second_moment
        return (em.mass / (masses[i] * d)) * (
            s
            - np.outer(em.centroid, pos[j])
            + np.outer(xi[i], pos[j] - em.centroid)
        )

    for (i, j), em in _edge_table(state.diagram, state.density).items():
        d = adj.distance(i, j)
        u = em.mass / (2.0 * d)
        for a, b in ((i, j), (j, i)):
            ra, rb = slice(2 * a, 2 * a + 2), slice(2 * b, 2 * b + 2)
            dxi_dx[ra, ra] += _xi_block(a, a, em, d)
            dxi_dx[ra, rb] -= _xi_block(a, b, em, d)
            v = (em.mass / (2.0 * masses[a] * d)) * (em.centroid - xi[a])
            dxi_dw[ra, a] += v
            dxi_dw[ra, b] -= v
            # omega_i = -f'(m_i) so d omega_a = -f''(m_a) d m_a
            g = (em.mass / d) * (em.centroid - pos[a])
            gb = (em.mass / d) * (em.centroid - pos[b])
            dom_dx[a, ra] += -fpp[a] * g
            dom_dx[a, rb] -= -fpp[a] * gb
            dom_dw[a, a] += -fpp[a] * u
            dom_dw[a, b] -= -fpp[a] * u
    return LloydJacobian(dxi_dx, dxi_dw, dom_dx, dom_dw)


@dataclass(frozen=True)
class FixedPointHessian:
    matrix: np.ndarray  # (3N, 3N)
    eigenvalues: np.ndarray  # of the symmetrized matrix, ascending
    shift_residual: float  # |H (0; 1)|_inf, should vanish

    @property
    def min_nontrivial_eigenvalue(self):
        """Smallest eigenvalue on the complement of the weight-shift mode."""
        k = int(np.argmin(np.abs(self.eigenvalues)))
        return float(np.min(np.delete(self.eigenvalues, k)))


def hessian_at_fixed_point(state, cost, tol_position=None, tol_weight=None):
    """Hessian of the energy, valid only at fixed points of the Lloyd maps."""
    diam = state.domain.diameter()
    if tol_position is None:
        tol_position = 1e-9 * diam
    if tol_weight is None:
        tol_weight = 1e-9 * diam ** 2
    xi, omega = lloyd_maps(state, cost)
    rx = np.max(np.linalg.norm(state.generators.positions - xi, axis=1))
    dw = omega - state.generators.weights
    rw = np.max(np.abs(dw - dw.mean()))
    if rx > 10 * tol_position or rw > 10 * tol_weight:
        raise NotAFixedPoint(
            f"centroid residual {rx:.2e}, weight residual {rw:.2e}"
        )
    mj = grad_masses(state.diagram, state.density)
    lj = lloyd_jacobian(state, cost)
    n = state.diagram.n
    masses = state.masses
    mhat = np.kron(np.diag(2.0 * masses), np.eye(2))
    left = np.block([
        [mhat, mj.d_m_d_X],
        [np.zeros((n, 2 * n)), mj.d_m_d_w],
    ])
    right = np.block([
        [np.eye(2 * n) - lj.d_xi_d_X, -lj.d_xi_d_w],
        [-lj.d_omega_d_X, np.eye(n) - lj.d_omega_d_w],
    ])
    h = left @ right
    shift = np.concatenate([np.zeros(2 * n), np.ones(n)])
    shift_res = float(np.max(np.abs(h @ shift)))
    eig = np.linalg.eigvalsh(0.5 * (h + h.T))
    return FixedPointHessian(h, eig, shift_res)


def _basis_matrices(n):
    """Change of basis P with P f_i = e_i, f_i = e_i - e_{i+1}, f_N = sum e_i."""
    pinv = np.zeros((n, n))
    for i in range(n - 1):
        pinv[i, i] = 1.0
        pinv[i + 1, i] = -1.0
    pinv[:, n - 1] = 1.0
    return np.linalg.inv(pinv), pinv


@dataclass(frozen=True)
class DescentForm:
    A: np.ndarray  # (N-1, N-1) reduced weight-mass matrix
    B: np.ndarray  # (3N, 3N)
    shift_constant: float
    residual: float  # relative reconstruction error of the Lloyd update
    min_symmetric_eigenvalue: float  # diagnostic only


def descent_form(state_before, state_after, cost):
    """Factor one Lloyd step as z' = z - B grad E + (0; c 1).

    ``state_after`` must be the Lloyd step of ``state_before`` with no
    eliminations (same generator count).
    """
    n = state_before.diagram.n
    if state_after.diagram.n != n:
        raise ValueError("states differ in generator count (elimination?)")
    g = grad_energy(state_before, cost)
    mj = g.mass_jacobian
    p, pinv = _basis_matrices(n)
    proj = pinv[:, : n - 1]  # P^{-1} Pi^T
    a = (p[: n - 1, :] @ mj.d_m_d_w) @ proj
    try:
        a_inv = np.linalg.inv(a)
    except np.linalg.LinAlgError as exc:
        raise SingularDescentMatrix(str(exc)) from None
    if np.linalg.cond(a) > 1e12:
        raise SingularDescentMatrix(f"cond(A) = {np.linalg.cond(a):.2e}")
    red = proj @ a_inv @ p[: n - 1, :]  # P^{-1} Pi^T A^{-1} Pi P
    minv = np.kron(np.diag(0.5 / state_before.masses), np.eye(2))
    b = np.block([
        [minv, -minv @ mj.d_m_d_X @ red],
        [np.zeros((n, 2 * n)), red],
    ])
    z = np.concatenate(
        [state_before.generators.positions.ravel(), state_before.generators.weights]
    )
    z_next = np.concatenate(
        [state_after.generators.positions.ravel(), state_after.generators.weights]
    )
    pred = z - b @ g.flat
    c = float(np.mean(z_next[2 * n :] - pred[2 * n :]))
    full = pred + np.concatenate([np.zeros(2 * n), np.full(n, c)])
    scale = max(float(np.max(np.abs(z_next - z))), 1e-30)
    residual = float(np.max(np.abs(full - z_next))) / scale
    sym = 0.5 * (b + b.T)
    return DescentForm(a, b, c, residual, float(np.linalg.eigvalsh(sym)[0]))


@dataclass(frozen=True)
class FDReport:
    err_masses_X: float
    err_masses_w: float
    err_energy_X: float
    err_energy_w: float
    err_xi_X: float
    err_xi_w: float
    err_omega_X: float
    err_omega_w: float
    skipped: tuple  # coordinates excluded due to topology changes

    @property
    def worst(self):
        return max(
            self.err_masses_X, self.err_masses_w, self.err_energy_X,
            self.err_energy_w, self.err_xi_X, self.err_xi_w,
            self.err_omega_X, self.err_omega_w,
        )


def _adjacency_key(state):
    return frozenset(state.diagram.adjacency.segments)


def fd_check(state, cost, h=None):
    """Central-difference check of all closed-form derivatives.

    Coordinates whose perturbation changes the cell adjacency are excluded
    (the derivatives are only classical while the topology is stable).
    """
    domain, density = state.domain, state.density
    diam = domain.diameter()
    if h is None:
        h = 1e-6 * diam
    h_w = h * diam
    gens = state.generators
    n = gens.n
    base_key = _adjacency_key(state)

    mj = grad_masses(state.diagram, density)
    g = grad_energy(state, cost)
    lj = lloyd_jacobian(state, cost)
    xi0, om0 = lloyd_maps(state, cost)

    fd_m_x = np.zeros((n, n, 2))
    fd_m_w = np.zeros((n, n))
    fd_e_x = np.zeros((n, 2))
    fd_e_w = np.zeros(n)
    fd_xi_x = np.zeros((2 * n, 2 * n))
    fd_xi_w = np.zeros((2 * n, n))
    fd_om_x = np.zeros((n, 2 * n))
    fd_om_w = np.zeros((n, n))
    ok_x = np.ones((n, 2), dtype=bool)
    ok_w = np.ones(n, dtype=bool)
    skipped = []

    def _probe(pos, w):
        st = evaluate_state(domain, density, GeneratorSet(pos, w), cost)
        if _adjacency_key(st) != base_key or np.any(st.masses <= 0):
            return None
        xi, om = lloyd_maps(st, cost)
        return st.masses, st.energy.total, xi, om

    for i in range(n):
        for d in range(2):
            plus = gens.positions.copy()
            plus[i, d] += h
            minus = gens.positions.copy()
            minus[i, d] -= h
            a = _probe(plus, gens.weights)
            b = _probe(minus, gens.weights)
            if a is None or b is None:
                ok_x[i, d] = False
                skipped.append(("x", i, d))
                continue
            fd_m_x[i, :, d] = (a[0] - b[0]) / (2 * h)
            fd_e_x[i, d] = (a[1] - b[1]) / (2 * h)
            fd_xi_x[:, 2 * i + d] = (a[2] - b[2]).ravel() / (2 * h)
            fd_om_x[:, 2 * i + d] = (a[3] - b[3]) / (2 * h)
        wp = gens.weights.copy()
        wp[i] += h_w
        wm = gens.weights.copy()
        wm[i] -= h_w
        a = _probe(gens.positions, wp)
        b = _probe(gens.positions, wm)
        if a is None or b is None:
            ok_w[i] = False
            skipped.append(("w", i))
            continue
        fd_m_w[i] = (a[0] - b[0]) / (2 * h_w)
        fd_e_w[i] = (a[1] - b[1]) / (2 * h_w)
        fd_xi_w[:, i] = (a[2] - b[2]).ravel() / (2 * h_w)
        fd_om_w[:, i] = (a[3] - b[3]) / (2 * h_w)

    def _rel(analytic, fd, mask):
        if not np.any(mask):
            return 0.0
        diff = np.abs(analytic - fd)[mask]
        scale = max(float(np.max(np.abs(analytic))), 1e-12)
        return float(np.max(diff)) / scale

    mask_x_rows = np.repeat(ok_x.ravel(), 1)  # (2N,) per position coordinate
    col_x = np.broadcast_to(mask_x_rows, (2 * n, 2 * n)).copy()
    col_x[:] = mask_x_rows[None, :]
    col_w = np.broadcast_to(ok_w, (2 * n, n))

    report = FDReport(
        err_masses_X=_rel(mj.blocks, fd_m_x, ok_x[:, None, :] & np.ones((1, n, 1), bool)),
        err_masses_w=_rel(mj.d_m_d_w, fd_m_w, np.broadcast_to(ok_w[:, None], (n, n))),
        err_energy_X=_rel(g.d_E_d_X, fd_e_x, ok_x),
        err_energy_w=_rel(g.d_E_d_w, fd_e_w, ok_w),
        err_xi_X=_rel(lj.d_xi_d_X, fd_xi_x, col_x),
        err_xi_w=_rel(lj.d_xi_d_w, fd_xi_w, col_w),
        err_omega_X=_rel(lj.d_omega_d_X, fd_om_x, col_x[:n, :]),
        err_omega_w=_rel(lj.d_omega_d_w, fd_om_w, np.broadcast_to(ok_w, (n, n))),
        skipped=tuple(skipped),
    )
    return report
