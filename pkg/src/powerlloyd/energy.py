"""Cost functions and evaluation of the optimal-location energy.

The energy of a weighted generator set is the sum over cells of
f(m_i) + integral over P_i of |x - x_i|^2 rho dx, where m_i is the cell
mass.  The transport integrals are expanded in terms of the cell moments
(trace / parallel-axis identity), so constant densities stay exact.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InadmissibleCost, InvalidMassVector
from .geometry import GeneratorSet, build_power_diagram
from .measures import polygon_moments_batch, total_mass

__all__ = [
    "CostFunction",
    "EnergyBreakdown",
    "sqrt_cost",
    "entropy_cost",
    "affine_cost",
    "rate_cost",
    "zero_cost",
    "cost_from_spec",
    "cell_transport",
    "energy",
    "distortion",
    "helper_H",
]

CONCAVITY_TOL = 1e-12
# cells with mass below this fraction of the total are routed to elimination
# (f' may diverge as m -> 0)
MASS_FLOOR_REL = 1e-12


@dataclass(frozen=True)
class CostFunction:
    """Concave per-cell cost f with analytic first and second derivatives."""

    name: str
    f: object
    fprime: object
    fsecond: object
    f_at_zero: float
    params: dict = field(default_factory=dict)
    mass_scale: float = 1.0
    linear: bool = False

    def __post_init__(self):
        if self.f_at_zero < 0:
            raise InadmissibleCost(f"{self.name}: f(0) = {self.f_at_zero} < 0")
        if self.linear:
            b = self.params.get("b", 0.0)
            if b <= 0:
                raise InadmissibleCost(
                    f"{self.name}: exactly linear cost (b = {b}) admits no minimizer"
                )
        grid = np.concatenate([
            np.geomspace(1e-10 * self.mass_scale, self.mass_scale, 200),
            np.linspace(self.mass_scale / 200, self.mass_scale, 200),
        ])
        if np.any(np.asarray(self.fsecond(grid)) > CONCAVITY_TOL):
            raise InadmissibleCost(f"{self.name}: f'' > 0 somewhere on (0, M]")

    def value(self, m):
        """f(m) for scalar or vector m >= 0, using f(0) at exact zeros."""
        m = np.asarray(m, dtype=float)
        out = np.full(m.shape, self.f_at_zero)
        pos = m > 0
        if np.any(pos):
            out[pos] = self.f(m[pos])
        return out if out.ndim else float(out)


def _zero_like(m):
    return np.zeros_like(np.asarray(m, dtype=float))


def sqrt_cost(lam, mass_scale=1.0):
    """f(m) = lam * sqrt(m); the 2D block-copolymer / perimeter cost."""
    if lam <= 0:
        raise InadmissibleCost("sqrt cost needs lambda > 0")
    return CostFunction(
        name="sqrt",
        f=lambda m: lam * np.sqrt(m),
        fprime=lambda m: lam / (2.0 * np.sqrt(m)),
        fsecond=lambda m: -lam / (4.0 * m ** 1.5),
        f_at_zero=0.0,
        params={"lambda": lam},
        mass_scale=mass_scale,
    )


def entropy_cost(lam, mass_scale=1.0):
    """f(m) = -lam * m log m, admissible for masses in (0, 1]."""
    if lam <= 0:
        raise InadmissibleCost("entropy cost needs lambda > 0")
    if mass_scale > 1.0 + 1e-12:
        raise InadmissibleCost(
            "entropy cost needs total mass <= 1 (normalize the density)"
        )
    return CostFunction(
        name="mlogm",
        f=lambda m: -lam * m * np.log(m),
        fprime=lambda m: -lam * (np.log(m) + 1.0),
        fsecond=lambda m: -lam / m,
        f_at_zero=0.0,
        params={"lambda": lam},
        mass_scale=mass_scale,
    )


def affine_cost(a, b, mass_scale=1.0):
    """f(m) = a m + b with b > 0."""
    return CostFunction(
        name="affine",
        f=lambda m: a * np.asarray(m, dtype=float) + b,
        fprime=lambda m: np.full_like(np.asarray(m, dtype=float), a),
        fsecond=_zero_like,
        f_at_zero=b,
        params={"a": a, "b": b},
        mass_scale=mass_scale,
        linear=True,
    )


def rate_cost(lam, mass_scale=1.0):
    """Variable-rate quantization cost f(m) = lam * l(1/m) * m, l = log1p."""
    if lam <= 0:
        raise InadmissibleCost("rate cost needs lambda > 0")
    return CostFunction(
        name="rate",
        f=lambda m: lam * m * np.log1p(1.0 / m),
        fprime=lambda m: lam * (np.log1p(1.0 / m) - 1.0 / (m + 1.0)),
        fsecond=lambda m: -lam / (m * (m + 1.0) ** 2),
        f_at_zero=0.0,
        params={"lambda": lam},
        mass_scale=mass_scale,
    )


def zero_cost(mass_scale=1.0):
    """f = 0 (distortion / classical CVT); bypasses the linearity gate."""
    return CostFunction(
        name="zero",
        f=_zero_like,
        fprime=_zero_like,
        fsecond=_zero_like,
        f_at_zero=0.0,
        params={"b": 1.0},  # not used; keeps the linear gate quiet
        mass_scale=mass_scale,
        linear=False,
    )


_COST_FACTORIES = {
    "sqrt": lambda spec, M: sqrt_cost(spec["lambda"], M),
    "mlogm": lambda spec, M: entropy_cost(spec["lambda"], M),
    "affine": lambda spec, M: affine_cost(spec["a"], spec["b"], M),
    "rate": lambda spec, M: rate_cost(spec["lambda"], M),
    "zero": lambda spec, M: zero_cost(M),
}


def cost_from_spec(spec, mass_scale=1.0):
    """Build a cost function from {"f": name, ...parameters}."""
    name = spec.get("f")
    if name not in _COST_FACTORIES:
        raise InadmissibleCost(f"unknown cost function {name!r}")
    try:
        return _COST_FACTORIES[name](spec, mass_scale)
    except KeyError as exc:
        raise InadmissibleCost(f"cost {name!r} missing parameter {exc}") from None


@dataclass(frozen=True)
class EnergyBreakdown:
    total: float
    cost_term: float
    transport_term: float
    per_cell: tuple  # (mass, f(mass), transport) per generator


def cell_transport(moments, point):
    """Integral of |x - point|^2 rho over the cell, from its moments."""
    p = np.asarray(point, dtype=float)
    return float(
        np.trace(moments.second_moment)
        - 2.0 * (p @ moments.first_moment)
        + moments.mass * (p @ p)
    )


def energy(domain, density, cost, gens, diagram=None, moments=None):
    """Evaluate the energy; empty cells contribute f(0)."""
    if diagram is None:
        diagram = build_power_diagram(domain, gens)
    if moments is None:
        moments = polygon_moments_batch([c.polygon for c in diagram.cells], density)
    mvec = np.array([mom.mass for mom in moments])
    fvec = np.atleast_1d(cost.value(mvec))
    per_cell = []
    transport_term = 0.0
    for cell, mom, m, fm in zip(diagram.cells, moments, mvec, fvec):
        t = cell_transport(mom, gens.positions[cell.generator_index])
        per_cell.append((float(m), float(fm), t))
        transport_term += t
    cost_term = float(fvec.sum())
    return EnergyBreakdown(
        cost_term + transport_term, cost_term, transport_term, tuple(per_cell)
    )


def distortion(domain, density, points):
    """Transport energy of the Voronoi diagram of the points (f = 0)."""
    gens = GeneratorSet(np.asarray(points, dtype=float))
    return energy(domain, density, zero_cost(), gens).transport_term


def helper_H(domain, density, cost, state1, state2, masses, enforce_mass=True):
    """The two-state helper function underlying the energy-decrease proof.

    H((X1,w1),(X2,w2),M) = sum_i [ M_i w1_i + f(M_i)
        + integral over P_i(X2,w2) of (|x - x1_i|^2 - w1_i) rho dx ].

    With ``enforce_mass`` the mass vector must sum to the total mass of the
    domain (the function's natural domain); pass False to probe arbitrary
    non-negative mass vectors, as the maximization property does.
    """
    if not isinstance(state1, GeneratorSet):
        state1 = GeneratorSet(*state1)
    if not isinstance(state2, GeneratorSet):
        state2 = GeneratorSet(*state2)
    masses = np.asarray(masses, dtype=float)
    if masses.shape != (state1.n,) or state2.n != state1.n:
        raise InvalidMassVector("mass vector length must match the states")
    if np.any(masses < 0):
        raise InvalidMassVector("negative mass")
    if enforce_mass:
        mtot = total_mass(domain, density)
        if abs(masses.sum() - mtot) > 1e-8 * max(mtot, 1.0):
            raise InvalidMassVector(
                f"sum(M) = {masses.sum()} != total mass {mtot}"
            )
    diagram = build_power_diagram(domain, state2)
    moments = polygon_moments_batch([c.polygon for c in diagram.cells], density)
    h = 0.0
    for i, mom in enumerate(moments):
        h += masses[i] * state1.weights[i] + float(cost.value(masses[i]))
        h += cell_transport(mom, state1.positions[i])
        h -= state1.weights[i] * mom.mass
    return h
