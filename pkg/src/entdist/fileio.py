"""File formats: state JSON, sample CSV with JSON sidecar, criterion CSV,
trace and verdict JSON, and run manifests.

All writers are deterministic (sorted keys, no timestamps, fixed float
formatting), so re-running a command with identical inputs produces
byte-identical files.  JSON documents carry a ``schema`` tag; readers refuse
unknown schema versions.
"""

import csv
import hashlib
import json
import os

import numpy as np

from ._version import __version__
from .errors import ValidationError
from .protocol import ProtocolConfig, SampleSet
from .states import GaussianState

STATE_SCHEMA = "cv-state/1"
SAMPLES_SCHEMA = "cv-samples/1"
TRACE_SCHEMA = "cv-trace/1"
VERDICTS_SCHEMA = "cv-verdicts/1"

# 10 significant digits keep CSV round trips lossless at test tolerances.
_CSV_FMT = "{:.10g}"


def _check_schema(doc, expected):
    found = doc.get("schema", expected)
    if found != expected:
        raise ValidationError(f"unknown schema version {found!r}; this toolkit reads {expected!r}")


def _dump_json(payload, path):
    text = json.dumps(payload, sort_keys=True, indent=1)
    try:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}") from exc


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


def build_manifest(command, flags, seed=None, inputs=()):
    """Reproducibility record attached to every emitted artifact."""
    return {
        "command": command,
        "flags": {k: v for k, v in sorted(flags.items())},
        "seed": seed,
        "toolkit_version": __version__,
        "inputs": {os.path.basename(p): file_digest(p) for p in inputs},
    }


# -- Gaussian state JSON -----------------------------------------------------


def state_to_dict(state):
    return {
        "schema": STATE_SCHEMA,
        "n_modes": state.n_modes,
        "gamma": [[float(v) for v in row] for row in state.gamma],
        "mean": [float(v) for v in state.mean],
    }


def state_from_dict(doc):
    _check_schema(doc, STATE_SCHEMA)
    try:
        n_modes = int(doc["n_modes"])
        gamma = np.array([[float(v) for v in row] for row in doc["gamma"]], dtype=float)
        mean = np.array([float(v) for v in doc.get("mean", [0.0] * (2 * n_modes))], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed state document: {exc}") from exc
    return GaussianState(n_modes, gamma, mean)


def write_state(state, path, manifest=None):
    doc = state_to_dict(state)
    if manifest is not None:
        doc["manifest"] = manifest
    _dump_json(doc, path)


def read_state(path):
    return state_from_dict(_load_json(path))


# -- verdicts and traces -----------------------------------------------------


def write_verdicts(verdicts, path, manifest=None):
    doc = {"schema": VERDICTS_SCHEMA, **verdicts}
    if manifest is not None:
        doc["manifest"] = manifest
    _dump_json(doc, path)


def trace_to_dict(trace):
    return {
        "schema": TRACE_SCHEMA,
        "config": trace.config.to_dict(),
        "stages": {k: state_to_dict(v) for k, v in trace.stages.items()},
        "verdicts": {k: v.to_dict() for k, v in trace.verdicts.items()},
        "criterion_curve": [p.to_dict() for p in trace.criterion_curve],
        "g_opt": trace.g_opt,
        "optimum": trace.optimum.to_dict(),
    }


def write_trace(trace, path, manifest=None):
    doc = trace_to_dict(trace)
    if manifest is not None:
        doc["manifest"] = manifest
    _dump_json(doc, path)


def write_criterion_csv(curve, path):
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["g", "var_x_norm", "var_p_norm", "product"])
            for point in curve:
                writer.writerow(
                    [_CSV_FMT.format(v) for v in (point.gain, point.var_x_norm, point.var_p_norm, point.product)]
                )
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


# -- sample sets -------------------------------------------------------------


def _sidecar_path(csv_path):
    root, _ = os.path.splitext(csv_path)
    return root + ".json"


def write_samples(samples, csv_path, manifest=None):
    """Columnar CSV (cell_x, cell_p, mode, quadrature, value) plus JSON sidecar."""
    channels = [(m, q) for m in samples.mode_labels for q in ("x", "p")]
    try:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["cell_x", "cell_p", "mode", "quadrature", "value"])
            for i in range(samples.n_records):
                hx = _CSV_FMT.format(samples.hidden[i, 0])
                hp = _CSV_FMT.format(samples.hidden[i, 1])
                for c, (mode, quad) in enumerate(channels):
                    writer.writerow([hx, hp, mode, quad, _CSV_FMT.format(samples.outcomes[i, c])])
    except OSError as exc:
        raise OSError(f"cannot write {csv_path}: {exc}") from exc
    sidecar = {
        "schema": SAMPLES_SCHEMA,
        "seed": samples.seed,
        "stage": samples.stage,
        "scheme": samples.scheme,
        "config": samples.config.to_dict(),
        "mode_labels": list(samples.mode_labels),
        "n_records": samples.n_records,
        "corrected": samples.corrected,
        "fraction_used": samples.fraction_used,
    }
    if manifest is not None:
        sidecar["manifest"] = manifest
    _dump_json(sidecar, _sidecar_path(csv_path))


def read_samples(csv_path, sidecar_path=None):
    sidecar = _load_json(sidecar_path or _sidecar_path(csv_path))
    _check_schema(sidecar, SAMPLES_SCHEMA)
    labels = tuple(sidecar["mode_labels"])
    channels = [(m, q) for m in labels for q in ("x", "p")]
    per_record = len(channels)

    hidden_rows, value_rows = [], []
    try:
        with open(csv_path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["cell_x", "cell_p", "mode", "quadrature", "value"]:
                raise ValidationError(f"{csv_path}: unexpected sample CSV header {header}")
            for row in reader:
                if len(row) != 5:
                    raise ValidationError(f"{csv_path}: malformed row {row}")
                hidden_rows.append((float(row[0]), float(row[1])))
                value_rows.append((row[2], row[3], float(row[4])))
    except OSError as exc:
        raise OSError(f"cannot read {csv_path}: {exc}") from exc
    if not value_rows:
        raise ValidationError(f"{csv_path}: no sample rows")
    if len(value_rows) % per_record:
        raise ValidationError(f"{csv_path}: row count is not a multiple of {per_record} channels")

    n = len(value_rows) // per_record
    hidden = np.empty((n, 2))
    outcomes = np.empty((n, per_record))
    for i in range(n):
        base = i * per_record
        hidden[i] = hidden_rows[base]
        for c, (mode, quad) in enumerate(channels):
            got = value_rows[base + c]
            if (got[0], got[1]) != (mode, quad):
                raise ValidationError(
                    f"{csv_path}: record {i} channel {c} is {got[:2]}, expected {(mode, quad)}"
                )
            if hidden_rows[base + c] != hidden_rows[base]:
                raise ValidationError(f"{csv_path}: record {i} has inconsistent hidden values")
            outcomes[i, c] = got[2]

    return SampleSet(
        seed=int(sidecar["seed"]),
        stage=sidecar["stage"],
        scheme=sidecar["scheme"],
        config=ProtocolConfig.from_dict(sidecar["config"]),
        mode_labels=labels,
        hidden=hidden,
        outcomes=outcomes,
        corrected=bool(sidecar.get("corrected", False)),
        fraction_used=sidecar.get("fraction_used"),
    )


# -- reports -----------------------------------------------------------------


def write_report(report, path):
    _dump_json(report, path)


def read_report(path):
    return _load_json(path)


def format_matrix_with_errors(values, errors):
    """Appendix-style layout: one ``value ± error`` entry per matrix element."""
    values = np.asarray(values, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if values.shape != errors.shape:
        raise ValidationError("values and errors must have the same shape")
    cells = [
        [f"{values[i, j]:.4g} ± {errors[i, j]:.2g}" for j in range(values.shape[1])]
        for i in range(values.shape[0])
    ]
    width = max(len(c) for row in cells for c in row)
    return "\n".join("  ".join(c.rjust(width) for c in row) for row in cells)
