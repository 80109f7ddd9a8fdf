"""JSON state files and deterministic result serialization.

Schema::

    {
      "modes": [{"id": "a1", "site": "A", "kind": "field", "capacity": 1}, ...],
      "terms": [{"occ": [1, 0], "amp": [0.7071067811865476, 0.0]}, ...]
    }

Amplitudes are [real, imaginary] pairs.  Files whose norm deviates from 1 by
at most 1e-6 are renormalized with a warning; larger deviations are parse
errors.  All floats in emitted files are rounded to 12 significant digits so
identical runs produce byte-identical output.
"""

from __future__ import annotations

import json
import sys

import numpy as np

from .fock import (
    CapacityError,
    DensityOperator,
    LayoutError,
    ModeDescriptor,
    ModeLayout,
    PureState,
    StateValidationError,
)

NORM_FILE_TOL = 1e-6
SIG_DIGITS = 12


class StateFileError(ValueError):
    """Malformed state file."""


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise StateFileError(message)


def parse_state(data: dict) -> PureState:
    _require(isinstance(data, dict), "top level must be an object")
    _require("modes" in data and "terms" in data, "missing 'modes' or 'terms'")
    modes = []
    for entry in data["modes"]:
        _require(isinstance(entry, dict), "mode entries must be objects")
        for key in ("id", "site", "kind", "capacity"):
            _require(key in entry, f"mode entry missing {key!r}")
        try:
            modes.append(ModeDescriptor(str(entry["id"]), str(entry["site"]),
                                        str(entry["kind"]), int(entry["capacity"])))
        except (LayoutError, TypeError, ValueError) as exc:
            raise StateFileError(f"bad mode entry {entry}: {exc}") from exc
    try:
        layout = ModeLayout(tuple(modes))
    except LayoutError as exc:
        raise StateFileError(str(exc)) from exc

    amps: dict[tuple[int, ...], complex] = {}
    for term in data["terms"]:
        _require(isinstance(term, dict) and "occ" in term and "amp" in term,
                 "term entries need 'occ' and 'amp'")
        occ = tuple(int(x) for x in term["occ"])
        amp = term["amp"]
        _require(isinstance(amp, (list, tuple)) and len(amp) == 2,
                 "amplitudes must be [real, imaginary] pairs")
        try:
            layout.check_label(occ)
        except (CapacityError, StateValidationError) as exc:
            raise StateFileError(f"bad occupation {occ}: {exc}") from exc
        amps[occ] = amps.get(occ, 0.0) + complex(float(amp[0]), float(amp[1]))

    norm = float(np.sqrt(sum(abs(a) ** 2 for a in amps.values()))) if amps else 0.0
    _require(abs(norm - 1.0) <= NORM_FILE_TOL,
             f"amplitudes have norm {norm}; expected 1 within {NORM_FILE_TOL}")
    if norm != 1.0:
        print(f"warning: renormalizing state file (norm {norm})", file=sys.stderr)
    try:
        return PureState(layout, amps, normalize=True)
    except StateValidationError as exc:
        raise StateFileError(str(exc)) from exc


def load_state(path: str) -> PureState:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise StateFileError(f"cannot read {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise StateFileError(f"invalid JSON in {path!r}: {exc}") from exc
    return parse_state(data)


def state_to_dict(state: PureState) -> dict:
    return {
        "modes": [{"id": m.id, "site": m.site, "kind": m.kind, "capacity": m.capacity}
                  for m in state.layout.modes],
        "terms": [{"occ": list(label), "amp": [a.real, a.imag]}
                  for label, a in sorted(state.amplitudes.items())],
    }


def density_to_dict(rho: DensityOperator) -> dict:
    return {
        "modes": [{"id": m.id, "site": m.site, "kind": m.kind, "capacity": m.capacity}
                  for m in rho.layout.modes],
        "basis": [list(label) for label in rho.basis],
        "matrix": [[[z.real, z.imag] for z in row] for row in rho.matrix],
    }


def density_from_dict(data: dict, check_trace: bool = True) -> DensityOperator:
    modes = tuple(ModeDescriptor(m["id"], m["site"], m["kind"], int(m["capacity"]))
                  for m in data["modes"])
    basis = [tuple(int(x) for x in label) for label in data["basis"]]
    matrix = np.array([[complex(z[0], z[1]) for z in row] for row in data["matrix"]])
    return DensityOperator(ModeLayout(modes), basis, matrix, check_trace=check_trace)


def round_floats(obj, digits: int = SIG_DIGITS):
    """Recursively round floats to ``digits`` significant digits."""
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, float):
        return float(f"{obj:.{digits}g}")
    if isinstance(obj, complex):
        return [round_floats(obj.real, digits), round_floats(obj.imag, digits)]
    if isinstance(obj, (np.floating,)):
        return round_floats(float(obj), digits)
    if isinstance(obj, (np.complexfloating,)):
        return round_floats(complex(obj), digits)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: round_floats(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v, digits) for v in obj]
    return obj


def dump_json(data: dict) -> str:
    return json.dumps(round_floats(data), indent=2, sort_keys=True)


def format_float(x: float, digits: int = SIG_DIGITS) -> str:
    return f"{x:.{digits}g}"
