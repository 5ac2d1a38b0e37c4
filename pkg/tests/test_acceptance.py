"""Acceptance gate: one test and one printed pass/fail line per criterion."""

import numpy as np
import pytest

from powerlloyd.calculus import (
    descent_form,
    fd_check,
    grad_energy,
    grad_masses,
    hessian_at_fixed_point,
)
from powerlloyd.energy import entropy_cost, helper_H, sqrt_cost, zero_cost
from powerlloyd.geometry import (
    Domain,
    GeneratorSet,
    build_power_diagram,
    locate_many,
)
from powerlloyd.lloyd import (
    LloydConfig,
    convergence_rate,
    evaluate_state,
    lloyd_maps,
    multistart,
    random_init,
    run,
    step,
)
from powerlloyd.measures import (
    AnalyticDensity,
    ConstantDensity,
    edge_moments,
    load_raster,
    polygon_moments,
    total_mass,
)

from conftest import UNIT_SQUARE
from test_measures import random_convex_polygon

SQUARE = Domain(UNIT_SQUARE)
RHO = ConstantDensity(1.0)


def _report(num, name, ok, detail=""):
    print(f"criterion {num:2d} ({name}): {'PASS' if ok else 'FAIL'} {detail}".rstrip())
    assert ok, f"criterion {num} ({name}) failed: {detail}"


def test_criterion_01_geometry_invariants():
    rng = np.random.default_rng(10)
    worst_area = 0.0
    worst_shift = 0.0
    located = 0
    agree = 0
    for _ in range(500):
        n = int(rng.integers(2, 101))
        gens = GeneratorSet(
            rng.uniform(0.02, 0.98, (n, 2)), rng.uniform(-0.02, 0.02, n)
        )
        d = build_power_diagram(SQUARE, gens)
        worst_area = max(worst_area, abs(d.cell_area_sum() - 1.0))
        # locate vs containment on 20 sample points per instance
        pts = rng.uniform(0.0, 1.0, (20, 2))
        owners = locate_many(gens, pts)
        for p, o in zip(pts, owners):
            located += 1
            if d.cells[o].polygon.contains(p[None, :], margin=-1e-9)[0]:
                agree += 1
        # weight-shift invariance
        d2 = build_power_diagram(SQUARE, gens.shifted(rng.uniform(-5, 5)))
        for c1, c2 in zip(d.cells, d2.cells):
            if c1.polygon.is_empty and c2.polygon.is_empty:
                continue
            if c1.polygon.n_vertices == c2.polygon.n_vertices:
                worst_shift = max(
                    worst_shift,
                    float(np.max(np.abs(c1.polygon.vertices - c2.polygon.vertices))),
                )
            else:
                worst_shift = np.inf
    ok = worst_area < 1e-9 and agree == located and worst_shift < 1e-9
    _report(
        1, "geometry invariants", ok,
        f"area_res={worst_area:.2e} locate={agree}/{located} shift={worst_shift:.2e}",
    )


def test_criterion_02_exact_vs_quadrature():
    rng = np.random.default_rng(20)
    const = ConstantDensity(1.0)
    quad = AnalyticDensity(lambda x, y: 1.0 + 0.0 * x, name="const")
    worst = 0.0
    for _ in range(200):
        poly = random_convex_polygon(rng)
        me = polygon_moments(poly, const)
        mq = polygon_moments(poly, quad)
        scale = max(me.mass, 1e-12)
        worst = max(
            worst,
            abs(mq.mass - me.mass) / scale,
            float(np.max(np.abs(mq.first_moment - me.first_moment))) / scale,
            float(np.max(np.abs(mq.second_moment - me.second_moment))) / scale,
        )
    _report(2, "exact vs quadrature moments", worst < 1e-10, f"worst={worst:.2e}")


def test_criterion_03_energy_descent():
    cost = sqrt_cost(0.005)
    increases = 0
    for seed in range(100):
        init = random_init(SQUARE, 20, seed=seed)
        trace = run(SQUARE, RHO, cost, init, LloydConfig(seed=seed))
        e = trace.energies
        increases += int(np.sum(np.diff(e) > 1e-12))
    _report(3, "monotone energy descent", increases == 0, f"increases={increases}")


def test_criterion_04_fixed_point_characterization():
    cost = sqrt_cost(0.01)
    diam = SQUARE.diameter()
    tol_x, tol_w = 1e-10 * diam, 1e-10 * diam ** 2
    worst_rx = worst_rw = worst_g = 0.0
    for seed in range(20):
        cfg = LloydConfig(
            seed=seed, tol_position=tol_x, tol_weight=tol_w,
            tol_energy=0.0, max_iterations=6000,
        )
        trace = run(SQUARE, RHO, cost, random_init(SQUARE, 10, seed=seed), cfg)
        assert trace.stop_reason == "converged", seed
        st = trace.final_state
        xi, omega = lloyd_maps(st, cost)
        worst_rx = max(
            worst_rx,
            float(np.max(np.linalg.norm(st.generators.positions - xi, axis=1))),
        )
        dw = omega - st.generators.weights
        worst_rw = max(worst_rw, float(np.max(np.abs(dw - dw.mean()))))
        g = grad_energy(st, cost)
        worst_g = max(worst_g, float(np.max(np.abs(g.flat))))
    converged_ok = worst_rx < 10 * tol_x and worst_rw < 10 * tol_w and worst_g < 1e-8

    # exact fixed points: 3x3 equal grid and 2x2 checkerboard CVTs
    exact = 0.0
    for k in (3, 2):
        xs = (np.arange(k) + 0.5) / k
        pts = np.array([[x, y] for y in xs for x in xs])
        st = evaluate_state(SQUARE, RHO, GeneratorSet(pts), zero_cost())
        xi, omega = lloyd_maps(st, zero_cost())
        exact = max(
            exact,
            float(np.max(np.abs(pts - xi))),
            float(np.max(np.abs(omega - st.generators.weights))),
        )
    ok = converged_ok and exact < 1e-12
    _report(
        4, "fixed-point characterization", ok,
        f"rx={worst_rx:.2e} rw={worst_rw:.2e} grad={worst_g:.2e} exact={exact:.2e}",
    )


def _random_states(count, n, base_seed):
    states = []
    seed = base_seed
    cost = sqrt_cost(0.05)
    while len(states) < count:
        rng = np.random.default_rng(seed)
        seed += 1
        gens = GeneratorSet(
            rng.uniform(0.08, 0.92, (n, 2)), rng.uniform(-0.02, 0.02, n)
        )
        st = evaluate_state(SQUARE, RHO, gens, cost)
        if np.all(st.masses > 1e-3) and not st.diagram.adjacency.point_contacts:
            states.append(st)
    return states, cost


def test_criterion_05_and_06_derivative_oracles_and_laplacian():
    states, cost = _random_states(50, 8, 500)
    worst_first = 0.0
    lap_ok = True
    lap_worst = 0.0
    for st in states:
        rep = fd_check(st, cost)
        worst_first = max(worst_first, rep.worst)
        # criterion 6 on the same instances
        mj = grad_masses(st.diagram, RHO)
        lap = mj.d_m_d_w
        n = st.diagram.n
        adj = st.diagram.adjacency
        ref = np.zeros((n, n))
        for (i, j) in adj.segments:
            em = edge_moments(adj.segment(i, j), RHO)
            u = em.mass / (2.0 * adj.distance(i, j))
            ref[i, j] = ref[j, i] = -u
            ref[i, i] += u
            ref[j, j] += u
        lap_worst = max(
            lap_worst,
            float(np.max(np.abs(lap - lap.T))),
            float(np.max(np.abs(lap.sum(axis=1)))),
            float(np.max(np.abs(lap @ np.ones(n)))),
            float(np.max(np.abs(lap - ref))),
        )
        lap_ok = lap_ok and lap_worst < 1e-12

    # fixed-point Hessian vs FD on converged states
    worst_h = 0.0
    hcost = sqrt_cost(0.02)
    for seed in (41, 42, 43):
        cfg = LloydConfig(seed=seed, tol_energy=1e-300, max_iterations=6000)
        trace = run(SQUARE, RHO, hcost, random_init(SQUARE, 6, seed=seed), cfg)
        assert trace.stop_reason == "converged"
        st = trace.final_state
        h = hessian_at_fixed_point(st, hcost, 1e-7, 1e-7)
        n = st.diagram.n
        z0 = np.concatenate([st.generators.positions.ravel(), st.generators.weights])
        eps = 1e-6
        fd = np.zeros((3 * n, 3 * n))

        def grad_at(z):
            pos = z[: 2 * n].reshape(n, 2)
            s = evaluate_state(SQUARE, RHO, GeneratorSet(pos, z[2 * n :]), hcost)
            return grad_energy(s, hcost).flat

        for k in range(3 * n):
            zp, zm = z0.copy(), z0.copy()
            zp[k] += eps
            zm[k] -= eps
            fd[:, k] = (grad_at(zp) - grad_at(zm)) / (2 * eps)
        worst_h = max(
            worst_h,
            float(np.max(np.abs(h.matrix - fd))) / max(float(np.max(np.abs(fd))), 1e-12),
        )
    _report(
        5, "derivative FD oracles", worst_first < 1e-5 and worst_h < 1e-4,
        f"first-order={worst_first:.2e} hessian={worst_h:.2e}",
    )
    _report(6, "graph-Laplacian structure", lap_ok, f"worst={lap_worst:.2e}")


def test_criterion_07_descent_form():
    cost = sqrt_cost(0.05)
    worst = 0.0
    done = 0
    seed = 700
    while done < 20:
        states, _ = _random_states(1, 8, seed)
        seed += 1
        st = states[0]
        new, rec = step(st, cost, LloydConfig(seed=0))
        if rec.eliminated or not st.diagram.adjacency.is_connected():
            continue
        form = descent_form(st, new, cost)  # raises if A is singular
        worst = max(worst, form.residual)
        done += 1
    _report(7, "descent-form reconstruction", worst < 1e-8, f"worst={worst:.2e}")


def test_criterion_08_helper_function_lemma():
    cost = sqrt_cost(0.1)
    mtot = total_mass(SQUARE, RHO)
    slack = 1e-12
    worst_identity = 0.0
    violations = 0
    probes = 0
    for inst in range(50):
        rng = np.random.default_rng(800 + inst)
        gens = GeneratorSet(
            rng.uniform(0.1, 0.9, (5, 2)), rng.uniform(-0.02, 0.02, 5)
        )
        st = evaluate_state(SQUARE, RHO, gens, cost)
        masses = st.masses
        xi, omega = lloyd_maps(st, cost)
        e = st.energy.total
        # identity E = H((X,w),(X,w),m)
        h_self = helper_H(SQUARE, RHO, cost, gens, gens, masses)
        worst_identity = max(worst_identity, abs(h_self - e) / abs(e))
        # (ii) independence of the first-slot weights at the own masses
        for _ in range(5):
            probes += 1
            other = GeneratorSet(gens.positions, rng.uniform(-1, 1, 5))
            h = helper_H(SQUARE, RHO, cost, other, gens, masses)
            if abs(h - h_self) > slack + 1e-12 * abs(h_self):
                violations += 1
        # (i) first-slot positions minimized at the centroids
        h_xi = helper_H(SQUARE, RHO, cost, GeneratorSet(xi, gens.weights), gens, masses)
        for _ in range(15):
            probes += 1
            probe = GeneratorSet(xi + rng.normal(0, 0.05, xi.shape), gens.weights)
            if helper_H(SQUARE, RHO, cost, probe, gens, masses) < h_xi - slack:
                violations += 1
        # (iii) H((z1),(z2),M) >= H((z1),(z1),M)
        raw = rng.uniform(0.1, 1.0, 5)
        m_any = raw * (mtot / raw.sum())
        h_11 = helper_H(SQUARE, RHO, cost, gens, gens, m_any)
        for _ in range(14):
            probes += 1
            s2 = GeneratorSet(
                rng.uniform(0.1, 0.9, (5, 2)), rng.uniform(-0.05, 0.05, 5)
            )
            if helper_H(SQUARE, RHO, cost, gens, s2, m_any) < h_11 - slack:
                violations += 1
        # (iv) with w1 = omega, maximized over M at the own masses
        s1 = GeneratorSet(gens.positions, omega)
        h_m = helper_H(SQUARE, RHO, cost, s1, gens, masses, enforce_mass=False)
        for _ in range(15):
            probes += 1
            m_probe = np.maximum(masses + rng.normal(0, 0.05, 5), 1e-6)
            if (
                helper_H(SQUARE, RHO, cost, s1, gens, m_probe, enforce_mass=False)
                > h_m + slack
            ):
                violations += 1
    ok = violations == 0 and worst_identity < 1e-12
    _report(
        8, "helper-function lemma", ok,
        f"violations={violations}/{probes} identity={worst_identity:.2e}",
    )


@pytest.mark.slow
def test_criterion_09_scaling_law():
    cost_of = sqrt_cost
    rows = []
    for k, lam in enumerate((0.05, 0.02, 0.01, 0.005)):
        cfg = LloydConfig(seed=1000 * k, max_iterations=1500)
        trace = multistart(SQUARE, RHO, cost_of(lam), 50, 100, cfg, round_length=50)
        rows.append((lam, trace.final_state.generators.n))
    slope = float(
        np.polyfit(np.log([r[0] for r in rows]), np.log([r[1] for r in rows]), 1)[0]
    )
    ok = -0.82 <= slope <= -0.52
    _report(9, "N ~ lambda^(-2/3) scaling", ok, f"slope={slope:.4f} rows={rows}")


def test_criterion_10_linear_convergence():
    # synthetic self-test: geometric decay 0.5^n must come back exactly
    synth = convergence_rate(3.0 + 0.5 ** np.arange(60))
    synth_ok = abs(synth.rate - 0.5) < 1e-6

    cost = sqrt_cost(0.005)
    rates = []
    r2s = []
    for n in (6, 10, 25):
        cfg = LloydConfig(seed=5, tol_energy=1e-300, max_iterations=6000)
        trace = run(SQUARE, RHO, cost, random_init(SQUARE, n, seed=5), cfg)
        fit = convergence_rate(trace)
        rates.append(fit.rate)
        r2s.append(fit.r_squared)
    ok = (
        synth_ok
        and all(r2 >= 0.99 for r2 in r2s)
        and rates[0] < rates[1] < rates[2]
    )
    _report(
        10, "linear convergence rates", ok,
        f"synthetic={synth.rate:.8f} r={[round(r, 4) for r in rates]} "
        f"R2={[round(r, 4) for r in r2s]}",
    )


@pytest.mark.slow
def test_criterion_11_raster_density():
    raster = load_raster("configs/country.raster")
    mtot = total_mass(SQUARE, raster)

    # single run with per-iteration mass-conservation audit
    cost = entropy_cost(0.01, mass_scale=mtot)
    cfg = LloydConfig(seed=7, max_iterations=1500)
    state = evaluate_state(SQUARE, raster, random_init(SQUARE, 40, seed=7), cost)
    worst_mass = abs(state.masses.sum() - mtot) / mtot
    eliminated = 0
    converged = False
    prev_e = state.energy.total
    tol_x, tol_w, tol_e = cfg.resolved(SQUARE, prev_e)
    for _ in range(cfg.max_iterations):
        state, rec = step(state, cost, cfg)
        worst_mass = max(worst_mass, abs(state.masses.sum() - mtot) / mtot)
        eliminated += len(rec.eliminated)
        if not rec.eliminated and (
            (rec.dx_max < tol_x and rec.dw_max < tol_w)
            or abs(prev_e - rec.energy) < tol_e
        ):
            converged = True
            break
        prev_e = rec.energy
    floor = cfg.mass_floor_rel * mtot
    no_empty = bool(np.all(state.masses > floor))

    # lambda ladder: larger lambda -> strictly fewer cells
    counts = []
    for lam in (0.002, 0.01, 0.05):
        trace = multistart(
            SQUARE, raster, entropy_cost(lam, mass_scale=mtot), 40, 10,
            LloydConfig(seed=7, max_iterations=1500), round_length=50,
        )
        counts.append(trace.final_state.generators.n)
    ladder_ok = counts[0] > counts[1] > counts[2]
    ok = converged and no_empty and worst_mass < 1e-6 and ladder_ok
    _report(
        11, "raster density study", ok,
        f"converged={converged} eliminated={eliminated} "
        f"mass_res={worst_mass:.2e} ladder={counts}",
    )
