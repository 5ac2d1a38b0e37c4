"""Generalized Lloyd iteration with empty-cell elimination.

Each iteration moves every generator to the centroid of its power cell and
sets its weight to -f'(cell mass); generators whose cells are empty (or
carry negligible mass) are deleted.  The energy is non-increasing along the
iteration, and fixed points are exactly the critical points of the energy
up to a constant shift of all weights.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .energy import EnergyBreakdown, cell_transport, energy
from .errors import DegenerateState, EmptyCell, InsufficientData
from .geometry import Domain, GeneratorSet, PowerDiagram, build_power_diagram
from .measures import polygon_moments_batch, total_mass

__all__ = [
    "LloydConfig",
    "LloydState",
    "IterationRecord",
    "LloydTrace",
    "RateFit",
    "evaluate_state",
    "lloyd_maps",
    "step",
    "run",
    "multistart",
    "random_init",
    "convergence_rate",
]

log = logging.getLogger(__name__)

MODE_GENERALIZED = "generalized"
MODE_CVT = "cvt"


@dataclass(frozen=True)
class LloydConfig:
    """Iteration mode, stopping tolerances and limits.

    Tolerances left as None are resolved against the problem scale:
    tol_position = 1e-10 diam, tol_weight = 1e-10 diam^2,
    tol_energy = 1e-14 |E_0|.
    """

    mode: str = MODE_GENERALIZED
    tol_position: float = None
    tol_weight: float = None
    tol_energy: float = None
    max_iterations: int = 2000
    mass_floor_rel: float = 1e-12
    seed: int = None

    def __post_init__(self):
        if self.mode not in (MODE_GENERALIZED, MODE_CVT):
            raise ValueError(f"unknown mode {self.mode!r}")
        for name in ("tol_position", "tol_weight", "tol_energy"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be non-negative (0 disables)")

    def resolved(self, domain, e0):
        diam = domain.diameter()
        return (
            self.tol_position if self.tol_position is not None else 1e-10 * diam,
            self.tol_weight if self.tol_weight is not None else 1e-10 * diam ** 2,
            self.tol_energy if self.tol_energy is not None else 1e-14 * abs(e0),
        )


@dataclass(frozen=True)
class LloydState:
    """A generator set with its cached diagram, moments and energy."""

    domain: Domain
    density: object
    generators: GeneratorSet
    diagram: PowerDiagram
    moments: tuple
    energy: EnergyBreakdown
    iteration: int = 0

    @property
    def masses(self):
        return np.array([m.mass for m in self.moments])


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    n_generators: int
    energy: float
    dx_max: float
    dw_max: float
    eliminated: tuple


@dataclass(frozen=True)
class LloydTrace:
    initial_energy: float
    records: tuple
    stop_reason: str  # "converged" | "max_iterations" | "degenerate"
    final_state: LloydState

    @property
    def energies(self):
        """Energy sequence including the initial state."""
        return np.array([self.initial_energy] + [r.energy for r in self.records])

    @property
    def iterations(self):
        return len(self.records)


def evaluate_state(domain, density, gens, cost, iteration=0):
    """Build the diagram, cell moments and energy for a generator set."""
    diagram = build_power_diagram(domain, gens)
    moments = polygon_moments_batch([c.polygon for c in diagram.cells], density)
    e = energy(domain, density, cost, gens, diagram=diagram, moments=moments)
    return LloydState(domain, density, gens, diagram, tuple(moments), e, iteration)


def lloyd_maps(state, cost, mass_floor=0.0):
    """Centroid and weight maps (xi, omega) of the current diagram."""
    masses = state.masses
    if np.any(masses <= max(mass_floor, 0.0)):
        bad = np.nonzero(masses <= max(mass_floor, 0.0))[0]
        raise EmptyCell(f"cells {bad.tolist()} have mass below the floor")
    xi = np.array([m.centroid for m in state.moments])
    omega = -np.asarray(cost.fprime(masses), dtype=float)
    return xi, omega


def _perturb_coincident(positions, scale, rng):
    """Split exactly coincident rows by a tiny seeded random displacement."""
    pos = positions.copy()
    order = np.lexsort((pos[:, 1], pos[:, 0]))
    for a, b in zip(order[:-1], order[1:]):
        if pos[a, 0] == pos[b, 0] and pos[a, 1] == pos[b, 1]:
            ang = rng.uniform(0.0, 2.0 * np.pi)
            pos[b] += scale * np.array([np.cos(ang), np.sin(ang)])
            log.warning("perturbed coincident generator %d by %.2e", b, scale)
    return pos


def step(state, cost, config, rng=None, mass_floor=None):
    """One Lloyd iteration: eliminate low-mass cells, then apply the maps."""
    if mass_floor is None:
        mass_floor = config.mass_floor_rel * total_mass(state.domain, state.density)
    cur = state
    old_gens = state.generators
    orig = np.arange(old_gens.n)
    eliminated = []
    # removing a cell reshapes its neighbours, which can empty further cells
    while True:
        masses = cur.masses
        keep = masses >= mass_floor
        if keep.all():
            break
        if not keep.any():
            raise DegenerateState("all cells eliminated")
        eliminated.extend(int(i) for i in orig[~keep])
        orig = orig[keep]
        cur = evaluate_state(
            cur.domain, cur.density, cur.generators.subset(np.nonzero(keep)[0]),
            cost, cur.iteration,
        )
    eliminated = tuple(eliminated)
    old_gens = cur.generators

    xi, omega = lloyd_maps(cur, cost, mass_floor=0.0)
    if config.mode == MODE_CVT:
        omega = np.zeros_like(omega)
    if rng is None:
        rng = np.random.default_rng(config.seed)
    xi = _perturb_coincident(xi, 1e-9 * state.domain.diameter(), rng)

    new = evaluate_state(
        state.domain, state.density, GeneratorSet(xi, omega), cost,
        state.iteration + 1,
    )
    dx_max = float(np.max(np.linalg.norm(xi - old_gens.positions, axis=1)))
    dw_old = old_gens.weights - old_gens.weights.mean()
    dw_new = omega - omega.mean()
    dw_max = float(np.max(np.abs(dw_new - dw_old)))
    rec = IterationRecord(
        new.iteration, new.generators.n, new.energy.total, dx_max, dw_max, eliminated
    )
    return new, rec


def run(domain, density, cost, init, config):
    """Iterate to a fixed point; returns the trace with a stop reason."""
    state = evaluate_state(domain, density, init, cost)
    runner = _Runner(state, cost, config)
    runner.advance(config.max_iterations)
    return runner.trace()


class _Runner:
    """Resumable Lloyd run; multistart advances populations in rounds."""

    def __init__(self, state, cost, config):
        self.cost = cost
        self.config = config
        self.state = state
        self.records = []
        self.stop_reason = None
        self.rng = np.random.default_rng(config.seed)
        self.mass_floor = config.mass_floor_rel * total_mass(
            state.domain, state.density
        )
        self.tols = config.resolved(state.domain, state.energy.total)
        self.initial_energy = state.energy.total

    @property
    def finished(self):
        return self.stop_reason is not None

    @property
    def energy(self):
        return self.state.energy.total

    def advance(self, budget):
        tol_x, tol_w, tol_e = self.tols
        for _ in range(budget):
            if self.finished:
                return
            if self.state.iteration >= self.config.max_iterations:
                self.stop_reason = "max_iterations"
                return
            e_old = self.state.energy.total
            try:
                self.state, rec = step(
                    self.state, self.cost, self.config, self.rng, self.mass_floor
                )
            except DegenerateState:
                self.stop_reason = "degenerate"
                return
            self.records.append(rec)
            if not rec.eliminated and (
                (rec.dx_max < tol_x and rec.dw_max < tol_w)
                or abs(e_old - rec.energy) < tol_e
            ):
                self.stop_reason = "converged"
                return
        if self.state.iteration >= self.config.max_iterations:
            self.stop_reason = "max_iterations"

    def trace(self):
        reason = self.stop_reason if self.finished else "max_iterations"
        return LloydTrace(
            initial_energy=self.initial_energy,
            records=tuple(self.records),
            stop_reason=reason,
            final_state=self.state,
        )


def random_init(domain, n, seed=None, weight_scale=0.0):
    """N generators uniform on the domain, weights uniform in +-weight_scale."""
    rng = np.random.default_rng(seed)
    (xmin, ymin), (xmax, ymax) = domain.boundary.bounding_box()
    pts = np.empty((n, 2))
    got = 0
    while got < n:
        cand = rng.uniform([xmin, ymin], [xmax, ymax], size=(max(2 * (n - got), 8), 2))
        inside = cand[domain.contains(cand)]
        take = min(n - got, inside.shape[0])
        pts[got : got + take] = inside[:take]
        got += take
    if weight_scale > 0:
        w = rng.uniform(-weight_scale, weight_scale, size=n)
    else:
        w = np.zeros(n)
    return GeneratorSet(pts, w)


def multistart(
    domain,
    density,
    cost,
    n0,
    k,
    config,
    round_length=50,
    survival=0.5,
    weight_scale=0.0,
):
    """K random starts, periodically culled by energy; best trace wins.

    Runs the population in rounds of ``round_length`` iterations, keeps the
    lowest-energy ``survival`` fraction after each round, and continues the
    survivors to convergence.  Deterministic given config.seed.
    """
    seeds = np.random.SeedSequence(config.seed).spawn(k)
    runners = []
    for s in seeds:
        child = np.random.default_rng(s)
        init = random_init(domain, n0, child, weight_scale)
        cfg = replace(config, seed=int(s.generate_state(1)[0]))
        runners.append(_Runner(evaluate_state(domain, density, init, cost), cost, cfg))

    while len(runners) > 1:
        for r in runners:
            r.advance(round_length)
        if all(r.finished for r in runners):
            break
        runners.sort(key=lambda r: r.energy)
        runners = runners[: max(1, int(np.ceil(survival * len(runners))))]
    for r in runners:
        r.advance(config.max_iterations)
    best = min(runners, key=lambda r: r.energy)
    return best.trace()


@dataclass(frozen=True)
class RateFit:
    rate: float
    slope: float
    intercept: float
    r_squared: float
    window: tuple  # (first, last+1) indices into the energy sequence
    n_points: int


def convergence_rate(trace, min_points=5):
    """Fit the linear convergence rate r from eps_n = E_n - E_final.

    Selects the longest trailing window of log(eps) with a least-squares
    fit of R^2 >= 0.99 and returns r = exp(slope).
    """
    if isinstance(trace, LloydTrace):
        if trace.stop_reason != "converged":
            raise InsufficientData(f"trace stopped with {trace.stop_reason!r}")
        energies = trace.energies
    else:
        energies = np.asarray(trace, dtype=float)
    if energies.size < 10:
        raise InsufficientData("need at least 10 iterations")
    e_final = energies[-1]
    eps = energies[:-1] - e_final
    # drop the roundoff-dominated tail
    floor = max(1e-13 * abs(e_final), 1e-300)
    usable = np.nonzero(eps > floor)[0]
    if usable.size < min_points:
        raise InsufficientData("too few points above the noise floor")
    last = usable[-1] + 1
    idx = np.arange(last)
    mask = eps[:last] > floor
    best = None
    for start in range(0, last - min_points + 1):
        sel = idx[start:][mask[start:]]
        if sel.size < min_points:
            break
        x = sel.astype(float)
        y = np.log(eps[sel])
        slope, intercept = np.polyfit(x, y, 1)
        resid = y - (slope * x + intercept)
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
        if r2 >= 0.99:
            best = RateFit(
                float(np.exp(slope)), float(slope), float(intercept), r2,
                (start, int(last)), int(sel.size),
            )
            break
    if best is None:
        raise InsufficientData("no window with R^2 >= 0.99")
    return best
