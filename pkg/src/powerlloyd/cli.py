"""Command-line front end.

Commands: diagram, lloyd, sweep, rate, analyze.
Exit codes: 0 success, 2 configuration/validation error, 3 geometry or
numerical failure.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import serialize, svg
from .calculus import fd_check, grad_energy, hessian_at_fixed_point
from .config import load_config
from .energy import cost_from_spec
from .errors import (
    ConfigError,
    InsufficientData,
    NotAFixedPoint,
    PowerLloydError,
)
from .geometry import build_power_diagram
from .lloyd import (
    LloydConfig,
    convergence_rate,
    evaluate_state,
    lloyd_maps,
    multistart,
    random_init,
    run,
)
from .measures import total_mass

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args):
    if not args.config:
        raise ConfigError("--config is required for this command")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def cmd_diagram(args):
    cfg = _load(args)
    if cfg.generators is None:
        raise ConfigError("diagram command needs explicit generators in the config")
    out = _out_dir(args)
    diagram = build_power_diagram(cfg.domain, cfg.generators)
    serialize.save_diagram(out / "diagram.json", diagram)
    (out / "diagram.svg").write_text(
        svg.diagram_svg(diagram, show_weight_circles=True)
    )
    print(f"wrote {out/'diagram.json'} ({len(diagram.nonempty_indices)} cells)")
    return EXIT_OK


def _run_problem(cfg):
    if cfg.multistart_k > 1:
        return multistart(
            cfg.domain,
            cfg.density,
            cfg.cost,
            cfg.n_generators,
            cfg.multistart_k,
            cfg.lloyd,
            round_length=cfg.round_length,
            survival=cfg.survival,
            weight_scale=cfg.weight_scale,
        )
    init = cfg.generators
    if init is None:
        init = random_init(
            cfg.domain, cfg.n_generators, cfg.lloyd.seed, cfg.weight_scale
        )
    return run(cfg.domain, cfg.density, cfg.cost, init, cfg.lloyd)


def cmd_lloyd(args):
    cfg = _load(args)
    out = _out_dir(args)
    trace = _run_problem(cfg)
    final = trace.final_state
    serialize.save_trace_jsonl(out / "trace.jsonl", trace)
    serialize.save_state(out / "final_state.json", cfg.domain, final.generators)
    (out / "final.svg").write_text(svg.diagram_svg(final.diagram))
    e = trace.energies
    (out / "energy.svg").write_text(
        svg.line_plot_svg(np.arange(len(e)), e, xlabel="iteration", ylabel="energy")
    )
    print(
        f"{trace.stop_reason} after {trace.iterations} iterations, "
        f"N={final.generators.n}, energy={final.energy.total:.10g}"
    )
    return EXIT_OK


def cmd_sweep(args):
    cfg = _load(args)
    if len(cfg.lambdas) < 3:
        raise ConfigError("sweep needs at least 3 lambda values")
    out = _out_dir(args)
    base_seed = cfg.lloyd.seed if cfg.lloyd.seed is not None else 0
    rows = []
    for k, lam in enumerate(cfg.lambdas):
        spec = dict(cfg.raw.get("cost", {"f": "sqrt"}))
        spec["lambda"] = lam
        cost = cost_from_spec(spec, mass_scale=total_mass(cfg.domain, cfg.density))
        seed = base_seed + 1000 * k
        trace = multistart(
            cfg.domain,
            cfg.density,
            cost,
            cfg.n_generators,
            cfg.multistart_k,
            LloydConfig(
                mode=cfg.lloyd.mode,
                max_iterations=cfg.lloyd.max_iterations,
                seed=seed,
            ),
            round_length=cfg.round_length,
            survival=cfg.survival,
        )
        rows.append(
            (
                lam,
                trace.final_state.generators.n,
                trace.final_state.energy.total,
                cfg.multistart_k,
                seed,
            )
        )
        print(f"lambda={lam}: N={rows[-1][1]}, energy={rows[-1][2]:.8g}")
    serialize.write_csv(
        out / "sweep.csv", ["lambda", "N_final", "energy", "restarts", "seed"], rows
    )
    lam = np.log([r[0] for r in rows])
    n = np.log([r[1] for r in rows])
    slope, intercept = np.polyfit(lam, n, 1)
    summary = {"slope": float(slope), "intercept": float(intercept), "rows": len(rows)}
    (out / "sweep_fit.json").write_text(json.dumps(summary, indent=1))
    print(f"fitted slope of log N vs log lambda: {slope:.4f}")
    return EXIT_OK


def cmd_rate(args):
    cfg = _load(args)
    if len(cfg.n_values) < 1:
        raise ConfigError("rate needs n_values in the config")
    out = _out_dir(args)
    base_seed = cfg.lloyd.seed if cfg.lloyd.seed is not None else 0
    rows = []
    for k, n in enumerate(cfg.n_values):
        seed = base_seed + 1000 * k
        init = random_init(cfg.domain, int(n), seed, cfg.weight_scale)
        trace = run(
            cfg.domain,
            cfg.density,
            cfg.cost,
            init,
            LloydConfig(
                mode=cfg.lloyd.mode,
                max_iterations=cfg.lloyd.max_iterations,
                seed=seed,
            ),
        )
        try:
            fit = convergence_rate(trace)
        except InsufficientData as exc:
            log.warning("N=%s: %s", n, exc)
            continue
        rows.append((n, fit.rate, fit.r_squared, trace.iterations, seed))
        print(f"N={n}: r={fit.rate:.6f} (R^2={fit.r_squared:.4f})")
        e = trace.energies
        eps = e[:-1] - e[-1]
        (out / f"rate_N{n}.svg").write_text(
            svg.line_plot_svg(
                np.arange(len(eps)), eps, log_y=True,
                xlabel="iteration", ylabel="E_n - E_final",
            )
        )
    serialize.write_csv(
        out / "rate.csv", ["N", "rate", "r_squared", "iterations", "seed"], rows
    )
    return EXIT_OK


def cmd_analyze(args):
    cfg = _load(args)
    if args.state:
        domain, gens = serialize.load_state(args.state)
    elif cfg.generators is not None:
        domain, gens = cfg.domain, cfg.generators
    else:
        raise ConfigError("analyze needs a state file or explicit generators")
    out = _out_dir(args)
    state = evaluate_state(domain, cfg.density, gens, cfg.cost)
    g = grad_energy(state, cfg.cost)
    xi, omega = lloyd_maps(state, cfg.cost)
    rx = float(np.max(np.linalg.norm(gens.positions - xi, axis=1)))
    dw = omega - gens.weights
    rw = float(np.max(np.abs(dw - dw.mean())))
    diam = domain.diameter()
    is_fixed = rx < 1e-6 * diam and rw < 1e-6 * diam ** 2
    report = {
        "n_generators": gens.n,
        "energy": state.energy.total,
        "grad_norm_X": float(np.max(np.abs(g.d_E_d_X))),
        "grad_norm_w": float(np.max(np.abs(g.d_E_d_w))),
        "centroid_residual": rx,
        "weight_residual": rw,
        "is_fixed_point": bool(is_fixed),
    }
    fd = fd_check(state, cfg.cost)
    report["fd_check"] = {
        "worst": fd.worst,
        "masses_X": fd.err_masses_X,
        "masses_w": fd.err_masses_w,
        "energy_X": fd.err_energy_X,
        "energy_w": fd.err_energy_w,
        "skipped": [list(s) for s in fd.skipped],
    }
    if is_fixed:
        try:
            h = hessian_at_fixed_point(
                state, cfg.cost,
                tol_position=1e-7 * diam, tol_weight=1e-7 * diam ** 2,
            )
            report["hessian"] = {
                "min_eigenvalue": float(h.eigenvalues[0]),
                "max_eigenvalue": float(h.eigenvalues[-1]),
                "min_nontrivial_eigenvalue": h.min_nontrivial_eigenvalue,
                "shift_residual": h.shift_residual,
            }
        except NotAFixedPoint:
            pass
    text = json.dumps(report, indent=1)
    (out / "analysis.json").write_text(text)
    print(text)
    return EXIT_OK


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="powerlloyd",
        description="Power diagrams and generalized Lloyd iteration.",
    )
    parser.add_argument("--config", help="problem config JSON")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", default="out", help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("diagram", help="build and render a power diagram")
    sub.add_parser("lloyd", help="run the Lloyd iteration / multistart")
    sub.add_parser("sweep", help="lambda sweep with scaling fit")
    sub.add_parser("rate", help="convergence-rate study")
    ap = sub.add_parser("analyze", help="derivative / fixed-point report")
    ap.add_argument("state", nargs="?", help="state JSON file")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    handlers = {
        "diagram": cmd_diagram,
        "lloyd": cmd_lloyd,
        "sweep": cmd_sweep,
        "rate": cmd_rate,
        "analyze": cmd_analyze,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PowerLloydError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
