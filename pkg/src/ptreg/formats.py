"""Text file formats for datasets, matrices and models.

Numbers are written with Python's shortest round-trip ``repr`` so parsing a
rendered file gives back the same bits. Negative zero is written as ``0.0``
(the only value that does not round-trip bit-exactly). ``nan`` marks a
missing entry in matrix files and is rejected everywhere else.

DatasetFile::

    ptrds 1 <count> <p> <q>
    <p*p reals: X, row-major>
    <q*q reals: Y, row-major>
    ...

MatrixFile::

    ptrm 1 <n>
    <n reals per line, n lines; nan = missing>

ModelFile: one-line JSON ``{"version": 1, "activation_eps": e, "layers":
[{"p", "q", "r", "kraus": [[q*p reals, row-major], ...]}, ...]}``.
"""

import json
import math

import numpy as np

from .cpmap import KrausLayer, StinespringForm
from .model import StackedModel
from .train import Dataset

MODEL_VERSION = 1


class FormatError(ValueError):
    pass


def render_float(x: float, allow_nan: bool = False) -> str:
    x = float(x)
    if math.isnan(x):
        if not allow_nan:
            raise FormatError("NaN is only allowed as a missing entry in matrix files")
        return "nan"
    if math.isinf(x):
        raise FormatError("infinite values cannot be written")
    if x == 0.0:
        return "0.0"
    return repr(x)


def _render_row(values, allow_nan=False) -> str:
    return " ".join(render_float(v, allow_nan) for v in np.ravel(values))


def _parse_row(line: str, expected: int, what: str, allow_nan=False) -> np.ndarray:
    parts = line.split()
    if len(parts) != expected:
        raise FormatError(f"{what}: expected {expected} numbers, got {len(parts)}")
    try:
        vals = np.array([float(t) for t in parts])
    except ValueError as exc:
        raise FormatError(f"{what}: {exc}") from None
    if np.isinf(vals).any() or (not allow_nan and np.isnan(vals).any()):
        raise FormatError(f"{what}: non-finite value")
    return vals


def _header(line: str, magic: str, nfields: int):
    parts = line.split()
    if not parts or parts[0] != magic:
        raise FormatError(f"missing '{magic}' header")
    if len(parts) != nfields or parts[1] != "1":
        raise FormatError(f"unsupported header: {line.strip()!r}")
    try:
        return [int(v) for v in parts[2:]]
    except ValueError:
        raise FormatError(f"bad header: {line.strip()!r}") from None


# -- datasets -----------------------------------------------------------------

def render_dataset(data: Dataset) -> str:
    lines = [f"ptrds 1 {len(data)} {data.p} {data.q}"]
    for X, Y in zip(data.X, data.Y):
        lines.append(_render_row(X))
        lines.append(_render_row(Y))
    return "\n".join(lines) + "\n"


def parse_dataset(text: str) -> Dataset:
    lines = text.splitlines()
    if not lines:
        raise FormatError("empty dataset file")
    count, p, q = _header(lines[0], "ptrds", 5)
    body = [ln for ln in lines[1:] if ln.strip()]
    if count < 1 or len(body) != 2 * count:
        raise FormatError(f"header declares {count} samples but body has {len(body)} lines")
    X = np.stack([_parse_row(body[2 * k], p * p, f"sample {k + 1} X").reshape(p, p)
                  for k in range(count)])
    Y = np.stack([_parse_row(body[2 * k + 1], q * q, f"sample {k + 1} Y").reshape(q, q)
                  for k in range(count)])
    return Dataset(X, Y)


# -- matrices -------------------------------------------------------------------

def render_matrix(M) -> str:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise FormatError(f"matrix files hold square matrices, got shape {M.shape}")
    lines = [f"ptrm 1 {M.shape[0]}"] + [_render_row(row, allow_nan=True) for row in M]
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    lines = text.splitlines()
    if not lines:
        raise FormatError("empty matrix file")
    (n,) = _header(lines[0], "ptrm", 3)
    body = [ln for ln in lines[1:] if ln.strip()]
    if n < 1 or len(body) != n:
        raise FormatError(f"header declares {n} rows but body has {len(body)}")
    return np.stack([_parse_row(ln, n, f"row {k + 1}", allow_nan=True) for k, ln in enumerate(body)])


# -- models ---------------------------------------------------------------------

def _float_list(values):
    out = []
    for v in np.ravel(values):
        v = float(v)
        if not math.isfinite(v):
            raise FormatError("model parameters must be finite")
        out.append(v + 0.0)  # -0.0 -> 0.0
    return out


def render_model(model: StackedModel) -> str:
    doc = {
        "version": MODEL_VERSION,
        "activation_eps": float(model.activation_eps),
        "layers": [
            {"p": layer.p, "q": layer.q, "r": layer.r,
             "kraus": [_float_list(A) for A in layer.kraus]}
            for layer in model.layers
        ],
    }
    return json.dumps(doc, separators=(",", ":")) + "\n"


def parse_model(text: str) -> StackedModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"model file is not valid JSON: {exc}") from None
    if doc.get("version") != MODEL_VERSION:
        raise FormatError(f"unsupported model version {doc.get('version')!r}")
    layers = []
    for k, spec in enumerate(doc.get("layers", [])):
        p, q, r = spec["p"], spec["q"], spec["r"]
        ops = spec["kraus"]
        if len(ops) != r or any(len(A) != p * q for A in ops):
            raise FormatError(f"layer {k}: Kraus list does not match r={r}, {q}x{p}")
        layers.append(KrausLayer(np.array(ops, dtype=np.float64).reshape(r, q, p)))
    if not layers:
        raise FormatError("model has no layers")
    try:
        return StackedModel(tuple(layers), float(doc["activation_eps"]))
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def render_stinespring(sf: StinespringForm) -> str:
    doc = {"p": sf.p, "q": sf.q, "m": sf.m, "A": [_float_list(row) for row in sf.A]}
    return json.dumps(doc, separators=(",", ":")) + "\n"


def parse_stinespring(text: str) -> StinespringForm:
    doc = json.loads(text)
    return StinespringForm(doc["p"], doc["q"], doc["m"], np.array(doc["A"], dtype=np.float64))


def read_text(path) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
