"""JSON model files and observation files.

Complex numbers are ``[re, im]`` pairs and matrices are lists of rows. Floats
are written with Python's shortest round-trip repr, so a save/load cycle
reproduces every entry bit for bit.

A model file either spells out the quantum components::

    {"format": "hqmm-model", "version": 1, "hidden_dim": 2, "obs_dim": 2,
     "convention": "normalized", "initial": M,
     "transitions": [{"type": "product_contraction", "kraus": [M, ...]}],
     "emissions": [{"basis": M, "outcomes": [[M, ...], [M, ...]]}],
     "terminal": M}

or carries a classical HMM that is embedded on load::

    {"format": "hqmm-model", "version": 1,
     "classical": {"initial": [...], "transition": [[...]], "emission": [[...]]}}

A one-element ``transitions`` / ``emissions`` list is stationary.
"""
import json
from pathlib import Path
from typing import Any, List, Union

import numpy as np

from .channels import DensityState, HeisenbergCPMap, PureEffect
from .errors import HqmmError, SchemaError
from .model import (
    ClassicalHmm,
    Convention,
    EmissionInstrument,
    GenericTransition,
    Hqmm,
    ObservationSequence,
    ProductContraction,
    embed_classical,
)

FORMAT = "hqmm-model"
VERSION = 1

PathLike = Union[str, Path]


def encode_matrix(m: np.ndarray) -> List[List[List[float]]]:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def decode_matrix(data: Any, where: str) -> np.ndarray:
    if not isinstance(data, list) or not data or not all(isinstance(r, list) for r in data):
        raise SchemaError("expected a non-empty list of rows", where)
    width = len(data[0])
    rows = []
    for i, row in enumerate(data):
        if len(row) != width or width == 0:
            raise SchemaError(f"row {i} has {len(row)} entries, expected {width}", where)
        rows.append([_decode_complex(z, f"{where}[{i}][{j}]") for j, z in enumerate(row)])
    return np.array(rows, dtype=complex)


def _decode_complex(z: Any, where: str) -> complex:
    if isinstance(z, (int, float)) and not isinstance(z, bool):
        return complex(z)
    if (isinstance(z, list) and len(z) == 2
            and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in z)):
        return complex(z[0], z[1])
    raise SchemaError(f"expected a number or an [re, im] pair, got {z!r}", where)


def _decode_real_array(data: Any, ndim: int, where: str) -> np.ndarray:
    try:
        arr = np.array(data, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError("expected a numeric array", where) from None
    if arr.ndim != ndim:
        raise SchemaError(f"expected a {ndim}-D array, got shape {arr.shape}", where)
    return arr


# --------------------------------------------------------------------------- encode


def model_to_dict(model: Hqmm) -> dict:
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "hidden_dim": model.hidden_dim,
        "obs_dim": model.obs_dim,
        "convention": model.convention.value,
    }
    if model.classical is not None:
        c = model.classical
        doc["classical"] = {
            "initial": c.initial.tolist(),
            "transition": c.transition.tolist(),
            "emission": c.emission.tolist(),
        }
        return doc
    doc["initial"] = encode_matrix(model.initial.matrix)
    doc["transitions"] = [_encode_transition(t) for t in model.transitions]
    doc["emissions"] = [
        {"basis": encode_matrix(e.basis), "outcomes": [[encode_matrix(k) for k in ops] for ops in e.outcome_kraus]}
        for e in model.emissions
    ]
    if model.terminal is not None:
        doc["terminal"] = encode_matrix(model.terminal)
    if model.params:
        doc["params"] = model.params
    return doc


def _encode_transition(t) -> dict:
    if isinstance(t, ProductContraction):
        return {"type": "product_contraction", "convention": t.convention.value,
                "kraus": [encode_matrix(k) for k in t.channel.kraus]}
    return {"type": "generic", "kraus": [encode_matrix(k) for k in t.map.kraus]}


def save_model(model: Hqmm, path: PathLike) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n")


# --------------------------------------------------------------------------- decode


def _field(doc: dict, key: str, where: str = ""):
    if key not in doc:
        raise SchemaError(f"missing field {key!r}", where or None)
    return doc[key]


def _steps(value: Any, where: str) -> list:
    if isinstance(value, dict):
        return [value]
    if not isinstance(value, list) or not value:
        raise SchemaError("expected an object or a non-empty list of objects", where)
    return value


def _build(where: str, factory, *args, **kwargs):
    try:
        return factory(*args, **kwargs)
    except SchemaError:
        raise
    except (HqmmError, ValueError) as exc:
        raise SchemaError(str(exc), where) from None


def model_from_dict(doc: Any) -> Hqmm:
    if not isinstance(doc, dict):
        raise SchemaError("model document must be a JSON object")
    if doc.get("format", FORMAT) != FORMAT:
        raise SchemaError(f"unknown format {doc.get('format')!r}", "format")
    if doc.get("version", VERSION) != VERSION:
        raise SchemaError(f"unsupported version {doc.get('version')!r}", "version")

    if "classical" in doc:
        c = doc["classical"]
        if not isinstance(c, dict):
            raise SchemaError("expected an object", "classical")
        hmm = _build("classical", ClassicalHmm,
                     _decode_real_array(_field(c, "initial", "classical"), 1, "classical.initial"),
                     _decode_real_array(_field(c, "transition", "classical"), 2, "classical.transition"),
                     _decode_real_array(_field(c, "emission", "classical"), 2, "classical.emission"))
        model = _build("classical", embed_classical, hmm)
        _check_dims(doc, model)
        return model

    convention = _build("convention", Convention, doc.get("convention", Convention.NORMALIZED.value))
    initial = _build("initial", DensityState, decode_matrix(_field(doc, "initial"), "initial"))

    transitions = []
    for i, t in enumerate(_steps(_field(doc, "transitions"), "transitions")):
        where = f"transitions[{i}]"
        if not isinstance(t, dict):
            raise SchemaError("expected an object", where)
        kraus = tuple(decode_matrix(k, f"{where}.kraus[{j}]")
                      for j, k in enumerate(_steps_list(_field(t, "kraus", where), f"{where}.kraus")))
        kind = _field(t, "type", where)
        if kind == "product_contraction":
            channel = _build(where, HeisenbergCPMap, kraus)
            transitions.append(_build(where, ProductContraction, channel, t.get("convention", convention)))
        elif kind == "generic":
            transitions.append(_build(where, GenericTransition, _build(where, HeisenbergCPMap, kraus)))
        else:
            raise SchemaError(f"unknown transition type {kind!r}", f"{where}.type")

    emissions = []
    for i, e in enumerate(_steps(_field(doc, "emissions"), "emissions")):
        where = f"emissions[{i}]"
        if not isinstance(e, dict):
            raise SchemaError("expected an object", where)
        basis = decode_matrix(_field(e, "basis", where), f"{where}.basis")
        outcomes = []
        for k, ops in enumerate(_steps_list(_field(e, "outcomes", where), f"{where}.outcomes")):
            if not isinstance(ops, list):
                raise SchemaError("expected a list of Kraus matrices", f"{where}.outcomes[{k}]")
            outcomes.append(tuple(decode_matrix(op, f"{where}.outcomes[{k}][{j}]") for j, op in enumerate(ops)))
        emissions.append(_build(where, EmissionInstrument, tuple(outcomes), basis))

    terminal = decode_matrix(doc["terminal"], "terminal") if doc.get("terminal") is not None else None
    params = doc.get("params") or {}
    if not isinstance(params, dict):
        raise SchemaError("expected an object", "params")
    model = _build("model", Hqmm, initial, tuple(transitions), tuple(emissions), convention, terminal,
                   params=params)
    _check_dims(doc, model)
    return model


def _steps_list(value: Any, where: str) -> list:
    if not isinstance(value, list) or not value:
        raise SchemaError("expected a non-empty list", where)
    return value


def _check_dims(doc: dict, model: Hqmm) -> None:
    for key, actual in (("hidden_dim", model.hidden_dim), ("obs_dim", model.obs_dim)):
        if key in doc and doc[key] != actual:
            raise SchemaError(f"declared {doc[key]!r} but components have dimension {actual}", key)


def load_model(path: PathLike) -> Hqmm:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg} (column {exc.colno})", f"line {exc.lineno}") from None
    return model_from_dict(doc)


# --------------------------------------------------------------------------- observations


def parse_observation_lines(lines) -> ObservationSequence:
    """One outcome per line: a label (``+``, ``-``, ``0``...) or a ket ``[re,im],[re,im]``.

    Blank lines and ``#`` comments are skipped.
    """
    items = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            try:
                pairs = json.loads(f"[{line}]")
                ket = np.array([_decode_complex(z, f"line {lineno}") for z in pairs], dtype=complex)
                items.append(PureEffect(ket))
            except json.JSONDecodeError:
                raise SchemaError(f"malformed ket {line!r}", f"line {lineno}") from None
            except HqmmError as exc:
                raise SchemaError(str(exc), f"line {lineno}") from None
        elif line in ("+", "-") or line.isdigit():
            items.append(line)
        else:
            raise SchemaError(f"unrecognized observation {line!r}", f"line {lineno}")
    if not items:
        raise SchemaError("observation file contains no outcomes")
    return ObservationSequence(tuple(items))


def load_observations(path: PathLike) -> ObservationSequence:
    return parse_observation_lines(Path(path).read_text().splitlines())
