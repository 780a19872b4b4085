"""File formats: channel specs, autocorrelation lists, spectral tables,
identification code files, and CSV/JSON result emission.

Floats are written with ``repr`` so that parsing an emitted file gives back
bit-identical values.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path

import numpy as np

from .channels import DiscreteChannel, GaussianChannel
from .errors import ChancapError, SpecFileError
from .gaussian import SpectralDensity
from .identification import IdentificationCode


def _read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise SpecFileError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _read_json(path):
    text = _read_text(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecFileError(f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})") from exc


def channel_from_spec(spec: dict, n: int = 1):
    """Build a channel from a parsed spec dict.

    Supported kinds: ``{"kind": "bsc", "p": p}``, ``{"kind": "dmc", "matrix": [[...]]}``,
    ``{"kind": "awgn", "noise_power": N}``, ``{"kind": "anwgn", "autocorr": [g0, g1, ...]}``.
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise SpecFileError("channel spec must be an object with a 'kind' field")
    kind = spec["kind"]
    try:
        if kind == "bsc":
            return DiscreteChannel.bsc(float(spec["p"]), n)
        if kind == "dmc":
            return DiscreteChannel(np.asarray(spec["matrix"], dtype=float), n)
        if kind == "awgn":
            return GaussianChannel.awgn(float(spec["noise_power"]), n)
        if kind == "anwgn":
            return GaussianChannel.anwgn(np.asarray(spec["autocorr"], dtype=float), n)
    except KeyError as exc:
        raise SpecFileError(f"channel spec of kind {kind!r} is missing field {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ChancapError):
            raise
        raise SpecFileError(f"malformed channel spec: {exc}") from exc
    raise SpecFileError(f"unknown channel kind {kind!r}")


def load_channel(path, n: int = 1):
    return channel_from_spec(_read_json(path), n)


def load_autocorr(path) -> np.ndarray:
    """One real per line (``gamma_0`` first, ``#`` comments allowed) or a JSON array."""
    text = _read_text(path).strip()
    try:
        if text.startswith("["):
            vals = json.loads(text)
        else:
            vals = [float(line.split("#", 1)[0]) for line in text.splitlines()
                    if line.split("#", 1)[0].strip()]
        arr = np.asarray(vals, dtype=float).ravel()
    except (ValueError, TypeError, json.JSONDecodeError) as exc:
        raise SpecFileError(f"{path}: cannot parse autocorrelation values") from exc
    if arr.size == 0 or not np.all(np.isfinite(arr)):
        raise SpecFileError(f"{path}: autocorrelation must be a non-empty list of finite reals")
    return arr


def load_spectral_table(path) -> SpectralDensity:
    """CSV of ``lambda, g(lambda)`` rows; a non-numeric first row is a header."""
    rows = list(csv.reader(_io.StringIO(_read_text(path))))
    data = []
    for i, row in enumerate(rows):
        if not row or not "".join(row).strip():
            continue
        try:
            data.append((float(row[0]), float(row[1])))
        except (ValueError, IndexError) as exc:
            if i == 0:
                continue
            raise SpecFileError(f"{path}: bad row {i + 1}: {row}") from exc
    if len(data) < 2:
        raise SpecFileError(f"{path}: need at least two (lambda, g) rows")
    lam, g = np.array(data).T
    return SpectralDensity.tabulated(lam, g)


def _parse_mask(m, size: int) -> int:
    if isinstance(m, bool):
        raise SpecFileError("decoding set must be an integer or a 0/1 string")
    if isinstance(m, int):
        return m
    if isinstance(m, str) and set(m) <= {"0", "1"} and len(m) == size:
        # character y (left to right) marks output word y
        return sum(1 << y for y, ch in enumerate(m) if ch == "1")
    if isinstance(m, list):
        return sum(1 << int(y) for y in set(m))
    raise SpecFileError(f"decoding set {m!r} is not an int mask, a {size}-character 0/1 string or an index list")


def load_code(path, channel: DiscreteChannel) -> IdentificationCode:
    """Identification code file.

    JSON object with ``n``, ``codewords`` and ``decoding_sets``. A codeword is
    either a dense list over the ``|X|**n`` input words or a map from word
    strings (letters concatenated, e.g. ``"010"``) to probabilities. A
    decoding set is an integer bitmask, a 0/1 string of length ``|Y|**n``
    or a list of output word indices.
    """
    obj = _read_json(path)
    try:
        n = int(obj["n"])
        raw_q, raw_d = obj["codewords"], obj["decoding_sets"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecFileError("code file needs 'n', 'codewords' and 'decoding_sets'") from exc
    ch = channel.extend(n)
    nx, ny = ch.input_space_size, ch.output_space_size
    Q = np.zeros((len(raw_q), nx))
    for i, q in enumerate(raw_q):
        if isinstance(q, dict):
            for word, prob in q.items():
                letters = [int(c) for c in word]
                if len(letters) != n:
                    raise SpecFileError(f"codeword {i}: word {word!r} does not have length {n}")
                Q[i, ch.word_index(letters)] += float(prob)
        else:
            row = np.asarray(q, dtype=float).ravel()
            if row.size != nx:
                raise SpecFileError(f"codeword {i} has {row.size} entries, expected {nx}")
            Q[i] = row
    masks = [_parse_mask(m, ny) for m in raw_d]
    return IdentificationCode.from_masks(Q, masks, ny, n)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, int | np.integer):
        return str(int(v))
    if isinstance(v, float | np.floating):
        return repr(float(v))
    return str(v)


def curve_to_csv(rows, columns) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row {row!r} does not have {len(columns)} columns")
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, list | tuple):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        v = float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def to_json(obj, sort_keys: bool = True) -> str:
    return json.dumps(_jsonable(obj), sort_keys=sort_keys) + "\n"


def emit_curve(rows, path, fmt: str = "csv", columns=None) -> str:
    """Write rows to ``path`` (or return the text when ``path`` is None).

    CSV gets a header row of ``columns``; JSON is a list of objects keyed by
    column. The column order is fixed by ``columns``.
    """
    rows = [tuple(r) for r in rows]
    if columns is None:
        raise ValueError("emit_curve needs explicit column names")
    if fmt == "csv":
        text = curve_to_csv(rows, columns)
    elif fmt == "json":
        text = to_json([dict(zip(columns, r)) for r in rows], sort_keys=False)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text


def _parse_cell(s: str):
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def read_curve(path_or_text, fmt: str = "csv") -> tuple[list[str], list[tuple]]:
    """Parse an emitted curve back into ``(columns, rows)``."""
    text = path_or_text
    if isinstance(path_or_text, Path) or (isinstance(path_or_text, str) and "\n" not in path_or_text):
        text = _read_text(path_or_text)
    if fmt == "json":
        data = json.loads(text)
        cols = list(data[0].keys()) if data else []
        return cols, [tuple(d[c] for c in cols) for d in data]
    rows = list(csv.reader(_io.StringIO(text)))
    if not rows:
        return [], []
    return rows[0], [tuple(_parse_cell(c) for c in r) for r in rows[1:]]


__all__ = [
    "channel_from_spec",
    "curve_to_csv",
    "emit_curve",
    "load_autocorr",
    "load_channel",
    "load_code",
    "load_spectral_table",
    "read_curve",
    "to_json",
]
