"""JSON and CSV serialization with reproducible formatting.

All floats are rendered with 17 significant digits so equal inputs produce
byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math

import numpy as np

from .core import DensityMatrix
from .jc import AtomFieldState
from .tomography import CanonicalParams, ReconstructionResult


def _render(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(
            f'{pad}  {json.dumps(str(k))}: {_render(v, indent + 1)}' for k, v in obj.items()
        )
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            return "[]"
        flat = all(not isinstance(v, (dict, list, tuple)) for v in seq)
        if flat:
            return "[" + ", ".join(_render(v) for v in seq) + "]"
        items = ",\n".join(f"{pad}  {_render(v, indent + 1)}" for v in seq)
        return "[\n" + items + "\n" + pad + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return json.dumps(None)
        return format(x, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj)}")


def dumps_json(obj) -> str:
    return _render(obj) + "\n"


def write_json(obj, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_json(obj))


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


# -- matrices ---------------------------------------------------------------


def matrix_to_dict(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    return {
        "dim": m.shape[0],
        "entries": [[z.real, z.imag] for z in m.reshape(-1)],
    }


def matrix_from_dict(d: dict) -> np.ndarray:
    dim = int(d["dim"])
    entries = np.array([complex(re, im) for re, im in d["entries"]])
    if entries.size != dim * dim:
        raise ValueError(f"matrix dict claims dim {dim} but has {entries.size} entries")
    return entries.reshape(dim, dim)


# -- atom-field states --------------------------------------------------------


def state_to_dict(state: AtomFieldState) -> dict:
    flat = state.amplitudes.reshape(-1)  # atom level major, then Fock index
    return {
        "n_max": state.n_max,
        "amplitudes": [[z.real, z.imag] for z in flat],
    }


def state_from_dict(d: dict) -> AtomFieldState:
    n_max = int(d["n_max"])
    flat = np.array([complex(re, im) for re, im in d["amplitudes"]])
    if flat.size != 2 * (n_max + 1):
        raise ValueError(
            f"state dict claims n_max {n_max} but has {flat.size} amplitudes"
        )
    return AtomFieldState(flat.reshape(2, n_max + 1))


# -- canonical parameters -----------------------------------------------------


def params_to_dict(params: CanonicalParams) -> dict:
    return {
        "p": list(params.p),
        "theta_c": params.theta_c,
        "theta_e": params.theta_e,
    }


def params_from_dict(d: dict) -> CanonicalParams:
    return CanonicalParams(tuple(d["p"]), float(d["theta_c"]), float(d["theta_e"]))


def result_to_dict(result: ReconstructionResult) -> dict:
    return {
        "params": params_to_dict(result.params),
        "rho": matrix_to_dict(result.rho.matrix),
        "frames": {
            "atom": matrix_to_dict(result.atom_frame),
            "field": matrix_to_dict(result.field_frame),
        },
        "diagnostics": result.diagnostics,
    }


# -- event logs ---------------------------------------------------------------


def write_event_csv(path, detector_ids, outcomes) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["event_index", "detector_id", "outcome"])
        for i, (d, m) in enumerate(zip(detector_ids, outcomes)):
            writer.writerow([i, int(d), int(m)])


def read_event_csv(path):
    detector_ids, outcomes = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["event_index", "detector_id", "outcome"]:
            raise ValueError(f"unexpected event CSV header {header}")
        for row in reader:
            detector_ids.append(int(row[1]))
            outcomes.append(int(row[2]))
    return np.asarray(detector_ids, dtype=int), np.asarray(outcomes, dtype=int)


def density_to_dict(rho: DensityMatrix) -> dict:
    out = matrix_to_dict(rho.matrix)
    if rho.tensor_dims is not None:
        out["tensor_dims"] = list(rho.tensor_dims)
    return out
