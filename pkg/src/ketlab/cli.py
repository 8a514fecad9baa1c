"""Seeded experiment runners behind one `ketlab` command.

Seven subcommands cover the lab: `protective` (repeated weak coupling on a
protected system, optional tomography and coupling sweeps), `leak`
(protecting the wrong state), `scan` (direct wavefunction readout from
weak values), `pbr` (the four-preparation antidistinguishability
experiment), `steer` (singlet steering rounds), `onto` (the certified
shared-reality violation bound plus model evaluation), and `nogo` (overlap
preservation under random unitaries).

Configuration resolves in three layers, most specific winning: builtin
defaults, then an optional --config JSON file, then explicit flags. Every
run takes one master seed (default 7); trial-level randomness comes from
counter-based substreams of it, so results do not depend on execution
order. Each artifact is written once at run end, validated against its own
schema, and accompanied by a manifest (config echo, seed, library
versions). Exit codes: 0 success, 2 configuration error, 3 precondition
rejection, 4 internal-consistency failure.
"""

from __future__ import annotations

import argparse
import math
import platform
import sys
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import jsonschema
import numpy as np
import scipy

from . import __version__
from .errors import ConfigError, InternalError, LabError, PreconditionError
from .hilbert import (
    StateVector,
    equal_up_to_phase,
    expectation,
    haar_random_unitary,
    inner_product,
    ket_minus,
    ket_one,
    ket_plus,
    ket_zero,
    pauli_operators,
    qubit_state,
    sigma_x,
    sigma_y,
    sigma_z,
)
from .measurement import GridWavefunction, default_grid
from .ontology import (
    OntologicalModel,
    born_consistency_gap,
    monte_carlo_onto,
    orthodox_model,
    overlap,
    paired_shared_reality_model,
    pbr_min_violation,
    pbr_scenario,
    predict,
    qubit_scenario,
)
from .pbr import epr_steering, overlap_preservation_check, pbr_experiment
from .protective import protection_leak, protective_measure, protective_tomography
from .rngs import substream
from .serialize import dump_json, load_json, to_builtin, write_csv
from .weak import direct_wavefunction_scan, momentum_zero_amplitude

DEFAULT_SEED = 7

_OBSERVABLES = {"z": sigma_z, "x": sigma_x, "y": sigma_y}
_NAMED_KETS = {"0": ket_zero, "1": ket_one, "+": ket_plus, "-": ket_minus}

SCAN_HEADER = ("x", "re_scan", "im_scan", "re_psi", "im_psi")
PBR_HEADER = ("preparation", "xi1", "xi2", "xi3", "xi4", "total", "forbidden_xi")
PER_STEP_HEADER = ("step", "survival", "pointer_mean")
SWEEP_HEADER = ("g", "inferred_expectation", "absolute_error", "survival")


def parse_state_spec(spec: str) -> StateVector:
    """Named qubit ket ('0', '1', '+', '-') or Bloch angles 'theta:phi'."""
    if spec in _NAMED_KETS:
        return _NAMED_KETS[spec]()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) == 2:
            try:
                return qubit_state(float(parts[0]), float(parts[1]))
            except ValueError:
                pass
    raise ConfigError(
        f"cannot parse state {spec!r}: expected one of 0, 1, +, - or 'theta:phi'"
    )


# ---------------------------------------------------------------------------
# configuration plumbing

_UNSET = object()


def _as_int(value):
    if isinstance(value, bool):
        raise ConfigError("expected an integer, got a boolean")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        try:
            return int(value, 10)
        except ValueError:
            pass
    raise ConfigError(f"expected an integer, got {value!r}")


def _as_float(value):
    if isinstance(value, bool):
        raise ConfigError("expected a number, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigError(f"expected a number, got {value!r}")


def _as_bool(value):
    if isinstance(value, bool):
        return value
    raise ConfigError(f"expected a boolean, got {value!r}")


def _as_str(value):
    if isinstance(value, str):
        return value
    raise ConfigError(f"expected a string, got {value!r}")


def _choice(*options):
    def coerce(value):
        text = _as_str(value)
        if text not in options:
            raise ConfigError(f"expected one of {', '.join(options)}, got {text!r}")
        return text
    return coerce


def _float_list(value):
    if value is None:
        return None
    if isinstance(value, str):
        parts = [p for p in value.split(",") if p.strip()]
        if not parts:
            raise ConfigError("expected a comma-separated list of numbers")
        return tuple(_as_float(p) for p in parts)
    if isinstance(value, (list, tuple)):
        return tuple(_as_float(v) for v in value)
    raise ConfigError(f"expected a list of numbers, got {value!r}")


def _state_spec(value):
    text = _as_str(value)
    parse_state_spec(text)   # validate now so bad specs exit 2, not 3
    return text


def _state_pair(value):
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return (_state_spec(value[0]), _state_spec(value[1]))
    raise ConfigError(f"expected exactly two state specs, got {value!r}")


def _opt_str(value):
    return None if value is None else _as_str(value)


def _seed_value(value):
    n = _as_int(value)
    if not 0 <= n < 2 ** 64:
        raise ConfigError("seed must be a 64-bit integer (0 <= seed < 2**64)")
    return n


@dataclass(frozen=True)
class Param:
    """One configurable parameter of a subcommand."""

    name: str                 # python name; the flag is --name-with-dashes
    coerce: object            # raw CLI string or JSON value -> typed value
    default: object
    help: str
    is_flag: bool = False
    nargs: int | None = None


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved invocation: what to run, how, and where the data goes."""

    subcommand: str
    seed: int
    output: Path
    format: str
    params: dict


@dataclass(frozen=True)
class Artifact:
    """One file to emit: a JSON payload dict or a (header, rows) CSV pair."""

    path: Path
    fmt: str
    payload: object


@dataclass(frozen=True)
class CommandSpec:
    name: str
    help: str
    formats: tuple
    params: tuple
    runner: object


# ---------------------------------------------------------------------------
# artifact schemas

_STATE_JSON = {"type": "object", "required": ["dim", "re", "im"]}
_NUM = {"type": "number"}
_OPT_NUM = {"type": ["number", "null"]}
_INT = {"type": "integer"}
_STR = {"type": "string"}

SCHEMAS = {
    "ketlab/protective-run": {
        "type": "object",
        "required": ["kind", "command", "observable", "state", "true_expectation",
                     "absolute_error", "run"],
        "properties": {
            "kind": {"const": "ketlab/protective-run"},
            "observable": _STR,
            "state": {"type": "object", "required": ["theta", "phi"]},
            "true_expectation": _NUM,
            "absolute_error": _OPT_NUM,
            "run": {
                "type": "object",
                "required": ["steps", "coupling", "mode", "pointer_mean_shift",
                             "survival_probability", "inferred_expectation",
                             "aborted_at_step", "per_step_log"],
            },
            "tomography": {
                "type": "object",
                "required": ["fidelity", "chain_survival", "reconstructed"],
                "properties": {"reconstructed": _STATE_JSON},
            },
        },
    },
    "ketlab/leak": {
        "type": "object",
        "required": ["kind", "command", "prepared", "protected", "observable",
                     "survival", "predicted_survival", "surviving_state",
                     "matches_protected"],
        "properties": {
            "kind": {"const": "ketlab/leak"},
            "survival": _NUM,
            "predicted_survival": _NUM,
            "surviving_state": {"anyOf": [_STATE_JSON, {"type": "null"}]},
            "matches_protected": {"type": ["boolean", "null"]},
        },
    },
    "ketlab/pbr-counts": {
        "type": "object",
        "required": ["kind", "command", "trials", "seed", "preparations",
                     "counts", "forbidden_outcome"],
        "properties": {"kind": {"const": "ketlab/pbr-counts"}, "trials": _INT},
    },
    "ketlab/steering": {
        "type": "object",
        "required": ["kind", "command", "trials", "seed", "bases"],
        "properties": {
            "kind": {"const": "ketlab/steering"},
            "bases": {
                "type": "object",
                "additionalProperties": {
                    "type": "object",
                    "required": ["outcome_counts", "bob_states",
                                 "marginal_trace_distance"],
                    "properties": {"marginal_trace_distance": _OPT_NUM},
                },
            },
        },
    },
    "ketlab/violation-bound": {
        "type": "object",
        "required": ["kind", "command", "q", "violation_lower_bound", "upper_bound",
                     "duality_gap", "forbidden_sum", "forbidden_mean", "preparations",
                     "forbidden_outcomes", "lambda_pairs", "witnessing_responses"],
        "properties": {
            "kind": {"const": "ketlab/violation-bound"},
            "q": _NUM,
            "violation_lower_bound": _NUM,
            "upper_bound": _NUM,
            "duality_gap": _NUM,
        },
    },
    "ketlab/model-eval": {
        "type": "object",
        "required": ["kind", "command", "scenario", "model", "overlaps", "born_gaps"],
        "properties": {
            "kind": {"const": "ketlab/model-eval"},
            "overlaps": {"type": "array"},
            "born_gaps": {"type": "object"},
        },
    },
    "ketlab/nogo": {
        "type": "object",
        "required": ["kind", "command", "sweeps", "seed", "ready", "pair",
                     "overlap_before", "max_abs_change", "mean_overlap_after"],
        "properties": {
            "kind": {"const": "ketlab/nogo"},
            "overlap_before": _NUM,
            "max_abs_change": _OPT_NUM,
            "mean_overlap_after": _OPT_NUM,
        },
    },
    "ketlab/joint-state": {
        "type": "object",
        "required": ["kind", "system_dim", "grid", "re", "im"],
        "properties": {"kind": {"const": "ketlab/joint-state"}},
    },
    "ketlab/manifest": {
        "type": "object",
        "required": ["kind", "command", "config", "seed", "versions", "outputs"],
        "properties": {
            "kind": {"const": "ketlab/manifest"},
            "versions": {
                "type": "object",
                "required": ["ketlab", "numpy", "scipy", "python"],
            },
            "outputs": {"type": "array", "items": _STR},
        },
    },
}

_CSV_CELL_PARSERS = {
    SCAN_HEADER: (float, float, float, float, float),
    PBR_HEADER: (str, int, int, int, int, int, int),
    PER_STEP_HEADER: (int, float, float),
    SWEEP_HEADER: (float, float, float, float),
}


def validate_artifact(path) -> None:
    """Check a written artifact against its schema; InternalError on failure."""
    path = Path(path)
    if path.suffix == ".json":
        data = load_json(path)
        if not isinstance(data, dict) or "kind" not in data:
            raise InternalError(f"artifact {path.name} lacks a 'kind' field")
        schema = SCHEMAS.get(data["kind"])
        if schema is None:
            raise InternalError(f"no schema for artifact kind {data['kind']!r}")
        try:
            jsonschema.validate(data, schema)
        except jsonschema.ValidationError as exc:
            raise InternalError(
                f"artifact {path.name} fails its schema: {exc.message}"
            ) from exc
    elif path.suffix == ".csv":
        lines = path.read_text(encoding="utf-8").splitlines()
        if not lines:
            raise InternalError(f"artifact {path.name} is empty")
        header = tuple(lines[0].split(","))
        parsers = _CSV_CELL_PARSERS.get(header)
        if parsers is None:
            raise InternalError(f"unknown CSV layout in {path.name}: {header}")
        for lineno, line in enumerate(lines[1:], start=2):
            cells = line.split(",")
            if len(cells) != len(parsers):
                raise InternalError(
                    f"{path.name}:{lineno}: expected {len(parsers)} cells, "
                    f"got {len(cells)}"
                )
            for cell, parse in zip(cells, parsers):
                try:
                    parse(cell)
                except ValueError as exc:
                    raise InternalError(
                        f"{path.name}:{lineno}: cell {cell!r} fails {parse.__name__}"
                    ) from exc
    else:
        raise InternalError(f"unknown artifact type: {path.name}")


# ---------------------------------------------------------------------------
# runners

def _run_protective(cfg: RunConfig):
    p = cfg.params
    psi = qubit_state(p["theta"], p["phi"])
    op = _OBSERVABLES[p["observable"]]()
    grid = default_grid(p["width"], p["grid_points"])
    result = protective_measure(
        psi, op, n=p["n"], g=p["g"], grid=grid, width=p["width"],
        mode=p["mode"], seed=cfg.seed,
    )
    true = expectation(op, psi)
    error = (None if result.inferred_expectation is None
             else abs(result.inferred_expectation - true))
    data = {
        "kind": "ketlab/protective-run",
        "command": "protective",
        "observable": p["observable"],
        "state": {"theta": p["theta"], "phi": p["phi"]},
        "true_expectation": true,
        "absolute_error": error,
        "run": result.to_json_dict(),
    }
    if p["tomography"]:
        reconstructed, chain_survival = protective_tomography(
            psi, pauli_operators(), n=p["n"], g=p["g"], grid=grid, width=p["width"]
        )
        data["tomography"] = {
            "fidelity": abs(inner_product(psi, reconstructed)) ** 2,
            "chain_survival": chain_survival,
            "reconstructed": reconstructed.to_json_dict(),
        }
    artifacts = [Artifact(cfg.output, "json", data)]
    if p["per_step_csv"] is not None:
        rows = [(r.step, r.survival, r.pointer_mean) for r in result.per_step_log]
        artifacts.append(Artifact(Path(p["per_step_csv"]), "csv", (PER_STEP_HEADER, rows)))
    if p["sweep_g"] is not None:
        rows = []
        for g in p["sweep_g"]:
            point = protective_measure(
                psi, op, n=p["n"], g=g, grid=grid, width=p["width"],
                mode=p["mode"], seed=cfg.seed,
            )
            if point.inferred_expectation is None:
                raise PreconditionError(
                    f"sweep coupling g={g!r} yields no inferred expectation"
                )
            rows.append((g, point.inferred_expectation,
                         abs(point.inferred_expectation - true),
                         point.survival_probability))
        sweep_path = cfg.output.with_name(cfg.output.stem + ".sweep.csv")
        artifacts.append(Artifact(sweep_path, "csv", (SWEEP_HEADER, rows)))
    if p["dump_joint"] is not None:
        payload = {"kind": "ketlab/joint-state", **result.final_joint.to_json_dict()}
        artifacts.append(Artifact(Path(p["dump_joint"]), "json", payload))
    if result.aborted_at_step is not None:
        summary = f"sampled run aborted at protection step {result.aborted_at_step}"
    else:
        summary = (
            f"inferred expectation {result.inferred_expectation:.6f} "
            f"(true {true:.6f}), survival {result.survival_probability:.6f}"
        )
    return artifacts, summary


def _run_leak(cfg: RunConfig):
    p = cfg.params
    prepared = parse_state_spec(p["prepared"])
    protected = parse_state_spec(p["protected"])
    op = _OBSERVABLES[p["observable"]]()
    grid = default_grid(p["width"], p["grid_points"])
    result = protection_leak(
        prepared, protected, op, n=p["n"], g=p["g"], grid=grid, width=p["width"]
    )
    predicted = abs(inner_product(protected, prepared)) ** 2
    surviving = result.surviving_state
    data = {
        "kind": "ketlab/leak",
        "command": "leak",
        "prepared": p["prepared"],
        "protected": p["protected"],
        "observable": p["observable"],
        "survival": result.survival,
        "predicted_survival": predicted,
        "surviving_state": None if surviving is None else surviving.to_json_dict(),
        "matches_protected": (None if surviving is None
                              else equal_up_to_phase(surviving, protected)),
    }
    summary = (
        f"survival {result.survival:.6f} "
        f"(|<protected|prepared>|^2 = {predicted:.6f})"
    )
    return [Artifact(cfg.output, "json", data)], summary


def _scan_input(p) -> GridWavefunction:
    grid = default_grid(p["width"], p["grid_points"])
    x = grid.positions
    w = p["width"]
    if p["profile"] == "gaussian":
        amps = np.exp(-((x - p["offset"]) ** 2) / (4.0 * w ** 2)).astype(complex)
    else:
        half = p["separation"] / 2.0
        amps = (np.exp(-((x - p["offset"] - half) ** 2) / (4.0 * w ** 2))
                + np.exp(1j * p["phase"])
                * np.exp(-((x - p["offset"] + half) ** 2) / (4.0 * w ** 2)))
        amps = amps.astype(complex)
    amps /= math.sqrt(float(np.sum(np.abs(amps) ** 2) * grid.spacing))
    return GridWavefunction(grid, amps)


def _run_scan(cfg: RunConfig):
    psi = _scan_input(cfg.params)
    scan = direct_wavefunction_scan(psi)
    p0 = momentum_zero_amplitude(psi)
    reconstruction_error = float(np.max(np.abs(scan * p0 - psi.amplitudes)))
    rows = [
        (float(x), float(s.real), float(s.imag), float(a.real), float(a.imag))
        for x, s, a in zip(psi.grid.positions, scan, psi.amplitudes)
    ]
    summary = (
        f"scanned {len(rows)} points; max |scan * p0 - psi| = "
        f"{reconstruction_error:.3e}"
    )
    return [Artifact(cfg.output, "csv", (SCAN_HEADER, rows))], summary


def _run_pbr(cfg: RunConfig):
    p = cfg.params
    counts = pbr_experiment(p["trials"], p["weights"], seed=cfg.seed)
    if cfg.format == "csv":
        rows = [
            (prep, *counts.counts[prep], sum(counts.counts[prep]),
             counts.forbidden_map[prep] + 1)
            for prep in counts.to_json_dict()["preparations"]
        ]
        artifacts = [Artifact(cfg.output, "csv", (PBR_HEADER, rows))]
    else:
        data = {"kind": "ketlab/pbr-counts", "command": "pbr", **counts.to_json_dict()}
        artifacts = [Artifact(cfg.output, "json", data)]
    summary = (
        f"{counts.trials} trials; forbidden cells all zero; row totals "
        f"{counts.row_totals()}"
    )
    return artifacts, summary


def _run_steer(cfg: RunConfig):
    p = cfg.params
    bases = ("z", "x") if p["basis"] == "both" else (p["basis"],)
    stream = 0
    out = {}
    for basis in bases:
        outcome_counts: dict = {}
        bob_states: dict = {}
        marginal = None
        for _ in range(p["trials"]):
            sample = epr_steering(basis, substream(cfg.seed, stream))
            stream += 1
            key = f"{sample.alice_outcome:+g}"
            outcome_counts[key] = outcome_counts.get(key, 0) + 1
            bob_states.setdefault(key, sample.bob_conditional.to_json_dict())
            marginal = sample.bob_marginal_check
        out[basis] = {
            "outcome_counts": outcome_counts,
            "bob_states": bob_states,
            "marginal_trace_distance": marginal,
        }
    data = {
        "kind": "ketlab/steering",
        "command": "steer",
        "trials": p["trials"],
        "seed": cfg.seed,
        "bases": out,
    }
    margins = [v["marginal_trace_distance"] for v in out.values()
               if v["marginal_trace_distance"] is not None]
    if margins:
        summary = (
            f"{p['trials']} rounds per basis ({', '.join(bases)}); "
            f"max marginal trace distance {max(margins):.3e}"
        )
    else:
        summary = "0 rounds"
    return [Artifact(cfg.output, "json", data)], summary


def _run_onto(cfg: RunConfig):
    p = cfg.params
    if p["model"] is None:
        if p["prep"] is not None or p["meas"] is not None:
            raise ConfigError("--prep/--meas only apply when --model is given")
        bound = pbr_min_violation(p["q"], resolution=p["resolution"])
        data = {"kind": "ketlab/violation-bound", "command": "onto",
                **bound.to_json_dict()}
        if p["mc_trials"] > 0:
            model = paired_shared_reality_model(
                p["q"], xi_responses=bound.witnessing_responses
            )
            report = monte_carlo_onto(model, pbr_scenario(), p["mc_trials"],
                                      seed=cfg.seed)
            data["monte_carlo"] = report.to_json_dict()
        summary = (
            f"certified violation bound {bound.lower_bound:.6f} at q={bound.q} "
            f"(duality gap {bound.duality_gap:.3e})"
        )
        return [Artifact(cfg.output, "json", data)], summary

    scenario = pbr_scenario() if p["scenario"] == "pbr" else qubit_scenario()
    if p["model"] == "orthodox":
        model = orthodox_model(scenario)
        model_name = "orthodox"
    else:
        model = OntologicalModel.from_json_dict(load_json(Path(p["model"])))
        model_name = Path(p["model"]).name
    overlaps = [
        {
            "first": a,
            "second": b,
            "variational_overlap": overlap(model, a, b).variational_overlap,
            "shares_reality": overlap(model, a, b).shares_reality,
        }
        for a, b in combinations(sorted(model.preparations), 2)
    ]
    shared_preps = [pid for pid in scenario.preparations if pid in model.preparations]
    born_gaps = {
        meas_id: born_consistency_gap(model, scenario, shared_preps, meas_id)
        for meas_id in scenario.measurements if meas_id in model.responses
    }
    data = {
        "kind": "ketlab/model-eval",
        "command": "onto",
        "scenario": scenario.name,
        "model": model_name,
        "overlaps": overlaps,
        "born_gaps": born_gaps,
    }
    if p["prep"] is not None and p["meas"] is not None:
        data["prediction"] = {
            "preparation": p["prep"],
            "measurement": p["meas"],
            "distribution": [float(x) for x in predict(model, p["prep"], p["meas"])],
        }
    elif p["prep"] is not None or p["meas"] is not None:
        raise ConfigError("--prep and --meas must be given together")
    if p["mc_trials"] > 0:
        report = monte_carlo_onto(model, scenario, p["mc_trials"], seed=cfg.seed)
        data["monte_carlo"] = report.to_json_dict()
    gap_note = (f"max Born gap {max(born_gaps.values()):.3e}"
                if born_gaps else "no shared measurements")
    summary = f"evaluated model {model_name} on scenario {scenario.name}; {gap_note}"
    return [Artifact(cfg.output, "json", data)], summary


def _run_nogo(cfg: RunConfig):
    p = cfg.params
    ready = parse_state_spec(p["ready"])
    s1 = parse_state_spec(p["pair"][0])
    s2 = parse_state_spec(p["pair"][1])
    dim = ready.dim * s1.dim
    before = abs(inner_product(s1, s2))
    afters = []
    max_change = 0.0
    for k in range(p["sweeps"]):
        u = haar_random_unitary(dim, substream(cfg.seed, k))
        b, a = overlap_preservation_check(u, s1, s2, ready)
        afters.append(a)
        max_change = max(max_change, abs(a - b))
    data = {
        "kind": "ketlab/nogo",
        "command": "nogo",
        "sweeps": p["sweeps"],
        "seed": cfg.seed,
        "ready": p["ready"],
        "pair": list(p["pair"]),
        "overlap_before": before,
        "max_abs_change": max_change if afters else None,
        "mean_overlap_after": float(np.mean(afters)) if afters else None,
    }
    summary = (
        f"overlap {before:.6f} preserved across {p['sweeps']} random unitaries "
        f"(max change {max_change:.3e})" if afters
        else f"overlap {before:.6f}, no sweeps requested"
    )
    return [Artifact(cfg.output, "json", data)], summary


# ---------------------------------------------------------------------------
# command table

COMMANDS = {
    spec.name: spec
    for spec in (
        CommandSpec(
            name="protective",
            help="repeated weak coupling on a protected qubit",
            formats=("json",),
            params=(
                Param("theta", _as_float, 0.5236, "Bloch polar angle of the prepared state"),
                Param("phi", _as_float, 0.0, "Bloch azimuthal angle"),
                Param("observable", _choice("z", "x", "y"), "z", "measured Pauli"),
                Param("n", _as_int, 400, "number of protection cycles"),
                Param("g", _as_float, 0.005, "coupling strength per cycle"),
                Param("grid_points", _as_int, 512, "pointer grid size (power of two)"),
                Param("width", _as_float, 1.0, "pointer wavepacket width"),
                Param("mode", _choice("deterministic", "sampled"), "deterministic",
                      "follow the success branch or sample protections"),
                Param("tomography", _as_bool, False,
                      "also reconstruct the state from x, y, z runs", is_flag=True),
                Param("sweep_g", _float_list, None,
                      "comma-separated couplings for an error-vs-g CSV"),
                Param("per_step_csv", _opt_str, None,
                      "write the per-cycle survival/pointer log to this CSV"),
                Param("dump_joint", _opt_str, None,
                      "write the final joint system+pointer state to this JSON"),
            ),
            runner=_run_protective,
        ),
        CommandSpec(
            name="leak",
            help="protect a different state than was prepared",
            formats=("json",),
            params=(
                Param("prepared", _state_spec, "+", "prepared state"),
                Param("protected", _state_spec, "0", "state the apparatus protects"),
                Param("observable", _choice("z", "x", "y"), "z", "measured Pauli"),
                Param("n", _as_int, 400, "number of protection cycles"),
                Param("g", _as_float, 0.005, "coupling strength per cycle"),
                Param("grid_points", _as_int, 512, "pointer grid size (power of two)"),
                Param("width", _as_float, 1.0, "pointer wavepacket width"),
            ),
            runner=_run_leak,
        ),
        CommandSpec(
            name="scan",
            help="direct wavefunction readout via weak values",
            formats=("csv",),
            params=(
                Param("profile", _choice("gaussian", "double"), "double",
                      "input wavefunction shape"),
                Param("width", _as_float, 1.0, "hump width"),
                Param("grid_points", _as_int, 512, "grid size (power of two)"),
                Param("offset", _as_float, 0.0, "profile center"),
                Param("separation", _as_float, 3.0, "hump separation (double only)"),
                Param("phase", _as_float, math.pi / 3.0,
                      "relative phase of the second hump (double only)"),
            ),
            runner=_run_scan,
        ),
        CommandSpec(
            name="pbr",
            help="four-preparation antidistinguishability experiment",
            formats=("csv", "json"),
            params=(
                Param("trials", _as_int, 100000, "number of prepare-and-measure rounds"),
                Param("weights", _float_list, (0.25, 0.25, 0.25, 0.25),
                      "mixture weights of the four preparations"),
            ),
            runner=_run_pbr,
        ),
        CommandSpec(
            name="steer",
            help="singlet steering rounds",
            formats=("json",),
            params=(
                Param("trials", _as_int, 1000, "rounds per basis"),
                Param("basis", _choice("z", "x", "both"), "both",
                      "Alice's measurement basis"),
            ),
            runner=_run_steer,
        ),
        CommandSpec(
            name="onto",
            help="certified shared-reality violation bound / model evaluation",
            formats=("json",),
            params=(
                Param("q", _as_float, 1.0, "shared-lambda weight in [0, 1]"),
                Param("resolution", _as_int, 8, "simplex grid points per response row"),
                Param("mc_trials", _as_int, 0, "Monte Carlo trials per scenario cell"),
                Param("model", _opt_str, None,
                      "model JSON to evaluate instead, or the literal 'orthodox'"),
                Param("scenario", _choice("pbr", "qubit"), "pbr",
                      "scenario to evaluate --model against"),
                Param("prep", _opt_str, None, "preparation id to predict (with --model)"),
                Param("meas", _opt_str, None, "measurement id to predict (with --model)"),
            ),
            runner=_run_onto,
        ),
        CommandSpec(
            name="nogo",
            help="overlap preservation under random joint unitaries",
            formats=("json",),
            params=(
                Param("sweeps", _as_int, 100, "number of random unitaries"),
                Param("ready", _state_spec, "0", "device ready state"),
                Param("pair", _state_pair, ("0", "+"),
                      "the two system states to compare", nargs=2),
            ),
            runner=_run_nogo,
        ),
    )
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ketlab",
        description="seeded quantum measurement experiments with artifact output",
    )
    parser.add_argument("--config", default=None, metavar="FILE",
                        help="JSON file of defaults for the chosen subcommand")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for spec in COMMANDS.values():
        sub = subparsers.add_parser(spec.name, help=spec.help)
        sub.add_argument("--seed", default=_UNSET,
                         help=f"master seed (default {DEFAULT_SEED})")
        sub.add_argument("--output", "-o", default=_UNSET, metavar="PATH",
                         help=f"artifact path (default {spec.name}.{spec.formats[0]})")
        if len(spec.formats) > 1:
            sub.add_argument("--format", default=_UNSET, choices=spec.formats,
                             help=f"artifact format (default {spec.formats[0]})")
        for param in spec.params:
            flag = "--" + param.name.replace("_", "-")
            if param.is_flag:
                sub.add_argument(flag, action="store_true", default=_UNSET,
                                 help=param.help)
            elif param.nargs:
                sub.add_argument(flag, nargs=param.nargs, default=_UNSET,
                                 help=param.help)
            else:
                sub.add_argument(flag, default=_UNSET, help=param.help)
    return parser


def _load_config_file(path: str, spec: CommandSpec) -> dict:
    try:
        data = load_json(Path(path))
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    known = {"subcommand", "seed", "output", "format"}
    known.update(param.name for param in spec.params)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(
            f"config file {path} has unknown keys for {spec.name!r}: "
            f"{', '.join(sorted(unknown))}"
        )
    if "subcommand" in data and data["subcommand"] != spec.name:
        raise ConfigError(
            f"config file names subcommand {data['subcommand']!r}, "
            f"but {spec.name!r} was invoked"
        )
    return data


def resolve_config(namespace: argparse.Namespace) -> RunConfig:
    """Merge builtin defaults, the config file, and explicit flags."""
    spec = COMMANDS[namespace.subcommand]
    file_cfg = (_load_config_file(namespace.config, spec)
                if namespace.config else {})

    def pick(name, cli_value, coerce, default):
        raw = cli_value if cli_value is not _UNSET else file_cfg.get(name, _UNSET)
        if raw is _UNSET:
            return default
        try:
            return coerce(raw)
        except ConfigError as exc:
            raise ConfigError(f"parameter {name!r}: {exc}") from None

    seed = pick("seed", namespace.seed, _seed_value, DEFAULT_SEED)
    fmt = pick("format", getattr(namespace, "format", _UNSET),
               _choice(*spec.formats), spec.formats[0])
    output = pick("output", namespace.output, _as_str, f"{spec.name}.{fmt}")
    params = {
        param.name: pick(param.name, getattr(namespace, param.name),
                         param.coerce, param.default)
        for param in spec.params
    }
    return RunConfig(
        subcommand=spec.name, seed=seed, output=Path(output), format=fmt,
        params=params,
    )


def _manifest(cfg: RunConfig, paths: list) -> dict:
    return {
        "kind": "ketlab/manifest",
        "command": cfg.subcommand,
        "config": {
            "subcommand": cfg.subcommand,
            "seed": cfg.seed,
            "output": str(cfg.output),
            "format": cfg.format,
            **{k: to_builtin(v) for k, v in cfg.params.items()},
        },
        "seed": cfg.seed,
        "versions": {
            "ketlab": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "outputs": [p.name for p in paths],
    }


def run(cfg: RunConfig) -> list:
    """Execute one resolved configuration; returns the written paths."""
    spec = COMMANDS[cfg.subcommand]
    artifacts, summary = spec.runner(cfg)
    paths = []
    try:
        for artifact in artifacts:
            if artifact.fmt == "json":
                dump_json(artifact.payload, artifact.path)
            else:
                header, rows = artifact.payload
                write_csv(artifact.path, header, rows)
            paths.append(artifact.path)
        manifest_path = Path(str(cfg.output) + ".manifest.json")
        dump_json(_manifest(cfg, paths), manifest_path)
        paths.append(manifest_path)
    except OSError as exc:
        raise ConfigError(f"cannot write artifact: {exc}") from exc
    for path in paths:
        validate_artifact(path)
    print(summary)
    print("wrote: " + ", ".join(str(p) for p in paths))
    return paths


def main(argv=None) -> int:
    try:
        namespace = build_parser().parse_args(argv)
        run(resolve_config(namespace))
    except ConfigError as exc:
        print(f"ketlab: config error: {exc}", file=sys.stderr)
        return 2
    except PreconditionError as exc:
        print(f"ketlab: precondition rejected: {exc}", file=sys.stderr)
        return 3
    except (InternalError, LabError) as exc:
        print(f"ketlab: internal error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
