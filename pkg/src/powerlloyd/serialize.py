"""JSON / JSONL / CSV serialization of states, diagrams and traces."""

import csv
import json

import numpy as np

from .geometry import Domain, GeneratorSet

__all__ = [
    "state_to_dict",
    "state_from_dict",
    "save_state",
    "load_state",
    "diagram_to_dict",
    "save_diagram",
    "trace_records",
    "save_trace_jsonl",
    "load_trace_jsonl",
    "write_csv",
]


def state_to_dict(domain, gens):
    return {
        "domain": np.asarray(domain.boundary.vertices).tolist(),
        "positions": np.asarray(gens.positions).tolist(),
        "weights": np.asarray(gens.weights).tolist(),
    }


def state_from_dict(d):
    domain = Domain(np.asarray(d["domain"], dtype=float))
    gens = GeneratorSet(
        np.asarray(d["positions"], dtype=float),
        np.asarray(d["weights"], dtype=float),
    )
    return domain, gens


def save_state(path, domain, gens):
    with open(path, "w") as fh:
        json.dump(state_to_dict(domain, gens), fh, indent=1)


def load_state(path):
    with open(path) as fh:
        return state_from_dict(json.load(fh))


def diagram_to_dict(diagram):
    cells = []
    for c in diagram.cells:
        cells.append(
            {
                "generator": c.generator_index,
                "vertices": np.asarray(c.polygon.vertices).tolist(),
            }
        )
    return {
        "state": state_to_dict(diagram.domain, diagram.generators),
        "cells": cells,
        "n_nonempty": len(diagram.nonempty_indices),
        "adjacency": sorted([int(i), int(j)] for i, j in diagram.adjacency.segments),
    }


def save_diagram(path, diagram):
    with open(path, "w") as fh:
        json.dump(diagram_to_dict(diagram), fh, indent=1)


def trace_records(trace):
    """Per-iteration dicts in the JSONL schema."""
    out = []
    for r in trace.records:
        out.append(
            {
                "iter": r.iteration,
                "N": r.n_generators,
                "energy": r.energy,
                "dx_max": r.dx_max,
                "dw_max": r.dw_max,
                "eliminated": list(r.eliminated),
            }
        )
    return out


def save_trace_jsonl(path, trace):
    with open(path, "w") as fh:
        for rec in trace_records(trace):
            fh.write(json.dumps(rec) + "\n")


def load_trace_jsonl(path):
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
