"""File formats and atomic output writing.

Formats handled here:

* frame features per video: CSV (one frame per line) or binary
  ``u32 frame_count, u32 dim, f32 row-major`` (little-endian)
* id-tagged vector CSV: ``item_id,v1,...,vd``
* labeled Gram CSV: optional ``#`` comments, a ``cols,<id>,...`` line,
  then ``row_id,<value>,...`` rows
* score/label CSV: ``item_id,score`` / ``item_id,label``
* binary containers for codebooks (magic ``HKCB``) and SVM models
  (magic ``HKSV``), each with a format-version byte

Floats are rendered with ``repr`` so output is byte-stable and re-parses to
the same double.
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

from .encoding import Codebook
from .errors import ContractViolation, ParseError
from .svm import SvmModel

CODEBOOK_MAGIC = b"HKCB"
MODEL_MAGIC = b"HKSV"
FORMAT_VERSION = 1


def atomic_write_bytes(path: str, data: bytes) -> None:
    """Write via a sibling temp file and rename, so outputs never go partial."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".hierkit-")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def fmt(value: float) -> str:
    return repr(float(value))


def _parse_float(token: str, lineno: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"non-numeric value {token!r}", line=lineno) from None


# -- frame matrices ---------------------------------------------------------

def read_frames_csv(text: str) -> np.ndarray:
    rows = []
    width = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        values = [_parse_float(tok, lineno) for tok in line.split(",")]
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise ParseError(
                f"row has {len(values)} values, expected {width}", line=lineno
            )
        rows.append(values)
    if not rows:
        raise ParseError("no frame rows found")
    return np.asarray(rows, dtype=np.float64)


def write_frames_csv(frames: np.ndarray) -> str:
    arr = np.asarray(frames, dtype=np.float64)
    return "\n".join(
        ",".join(fmt(v) for v in row) for row in arr
    ) + "\n"


def read_frames_bin(data: bytes) -> np.ndarray:
    if len(data) < 8:
        raise ParseError("binary frame file shorter than its header")
    count, dim = struct.unpack("<II", data[:8])
    expected = 8 + 4 * count * dim
    if len(data) != expected:
        raise ParseError(
            f"binary frame file has {len(data)} bytes, expected {expected}"
        )
    if count == 0 or dim == 0:
        raise ParseError("binary frame file declares an empty matrix")
    flat = np.frombuffer(data, dtype="<f4", offset=8)
    return flat.reshape(count, dim).astype(np.float64)


def write_frames_bin(frames: np.ndarray) -> bytes:
    arr = np.asarray(frames, dtype=np.float64)
    header = struct.pack("<II", arr.shape[0], arr.shape[1])
    return header + arr.astype("<f4").tobytes(order="C")


def read_frames_file(path: str, fmt_name: str | None = None) -> np.ndarray:
    """Load one video's frames; format inferred from extension when not given."""
    if fmt_name is None:
        fmt_name = "bin" if path.endswith(".bin") else "csv"
    if fmt_name not in ("bin", "csv"):
        raise ContractViolation(f"unknown frame format {fmt_name!r}")
    try:
        if fmt_name == "bin":
            with open(path, "rb") as handle:
                return read_frames_bin(handle.read())
        with open(path, "r", encoding="utf-8") as handle:
            return read_frames_csv(handle.read())
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None


# -- id-tagged vectors ------------------------------------------------------

def read_vectors_csv(text: str) -> tuple[list[str], np.ndarray]:
    ids: list[str] = []
    rows: list[list[float]] = []
    width = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split(",")
        if len(tokens) < 2:
            raise ParseError(
                f"expected 'item_id,v1,...', got {raw!r}", line=lineno
            )
        values = [_parse_float(tok, lineno) for tok in tokens[1:]]
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise ParseError(
                f"row has {len(values)} values, expected {width}", line=lineno
            )
        ids.append(tokens[0])
        rows.append(values)
    if not rows:
        raise ParseError("no vector rows found")
    if len(set(ids)) != len(ids):
        raise ParseError("duplicate item ids in vector file")
    return ids, np.asarray(rows, dtype=np.float64)


def write_vectors_csv(ids: list[str], vectors: np.ndarray,
                      header: str | None = None) -> str:
    arr = np.asarray(vectors, dtype=np.float64)
    lines = [f"# {header}"] if header else []
    lines.extend(
        item_id + "," + ",".join(fmt(v) for v in row)
        for item_id, row in zip(ids, arr)
    )
    return "\n".join(lines) + "\n"


# -- labeled Gram matrices --------------------------------------------------

def write_gram_csv(row_ids: list[str], col_ids: list[str],
                   values: np.ndarray, header: str | None = None) -> str:
    arr = np.asarray(values, dtype=np.float64)
    lines = [f"# {header}"] if header else []
    lines.append("cols," + ",".join(col_ids))
    lines.extend(
        row_id + "," + ",".join(fmt(v) for v in row)
        for row_id, row in zip(row_ids, arr)
    )
    return "\n".join(lines) + "\n"


def read_gram_csv(text: str) -> tuple[list[str], list[str], np.ndarray]:
    row_ids: list[str] = []
    col_ids: list[str] | None = None
    rows: list[list[float]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split(",")
        if col_ids is None:
            if tokens[0] != "cols" or len(tokens) < 2:
                raise ParseError(
                    "first data line must be 'cols,<id>,...'", line=lineno
                )
            col_ids = tokens[1:]
            continue
        if len(tokens) != len(col_ids) + 1:
            raise ParseError(
                f"row has {len(tokens) - 1} values, expected {len(col_ids)}",
                line=lineno,
            )
        row_ids.append(tokens[0])
        rows.append([_parse_float(tok, lineno) for tok in tokens[1:]])
    if col_ids is None or not rows:
        raise ParseError("no gram rows found")
    return row_ids, col_ids, np.asarray(rows, dtype=np.float64)


# -- scores and labels ------------------------------------------------------

def read_scores_csv(text: str) -> list[tuple[str, float]]:
    out: list[tuple[str, float]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split(",")
        if len(tokens) != 2:
            raise ParseError(
                f"expected 'item_id,score', got {raw!r}", line=lineno
            )
        out.append((tokens[0], _parse_float(tokens[1], lineno)))
    if not out:
        raise ParseError("no score rows found")
    return out


def write_scores_csv(scores: list[tuple[str, float]],
                     header: str | None = None) -> str:
    lines = [f"# {header}"] if header else []
    lines.extend(f"{item_id},{fmt(score)}" for item_id, score in scores)
    return "\n".join(lines) + "\n"


def read_labels_csv(text: str) -> dict[str, int]:
    out: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split(",")
        if len(tokens) != 2 or tokens[1] not in ("0", "1"):
            raise ParseError(
                f"expected 'item_id,label' with label 0 or 1, got {raw!r}",
                line=lineno,
            )
        out[tokens[0]] = int(tokens[1])
    if not out:
        raise ParseError("no label rows found")
    return out


# -- binary containers ------------------------------------------------------

def _pack_blob(payload: bytes) -> bytes:
    return struct.pack("<I", len(payload)) + payload


def _unpack_blob(data: bytes, offset: int) -> tuple[bytes, int]:
    if offset + 4 > len(data):
        raise ParseError("truncated container")
    (size,) = struct.unpack_from("<I", data, offset)
    offset += 4
    if offset + size > len(data):
        raise ParseError("truncated container")
    return data[offset:offset + size], offset + size


def write_codebook(codebook: Codebook, provenance: str = "") -> bytes:
    parts = [
        CODEBOOK_MAGIC,
        struct.pack("<B", FORMAT_VERSION),
        _pack_blob(provenance.encode("utf-8")),
        struct.pack("<IIQ", codebook.k, codebook.dim, codebook.seed),
        codebook.centroids.astype("<f8").tobytes(order="C"),
    ]
    return b"".join(parts)


def read_codebook(data: bytes) -> tuple[Codebook, str]:
    if data[:4] != CODEBOOK_MAGIC:
        raise ParseError("not a codebook container")
    if data[4] != FORMAT_VERSION:
        raise ParseError(f"unsupported codebook version {data[4]}")
    provenance, offset = _unpack_blob(data, 5)
    k, d, seed = struct.unpack_from("<IIQ", data, offset)
    offset += 16
    expected = offset + 8 * k * d
    if len(data) != expected:
        raise ParseError("codebook payload size mismatch")
    centroids = np.frombuffer(data, dtype="<f8", offset=offset).reshape(k, d)
    return Codebook(centroids=centroids.copy(), seed=seed), provenance.decode("utf-8")


def write_model(model: SvmModel, provenance: str = "") -> bytes:
    ids_blob = (
        "\n".join(model.train_ids).encode("utf-8") if model.train_ids else b""
    )
    n = model.alpha.shape[0]
    parts = [
        MODEL_MAGIC,
        struct.pack("<B", FORMAT_VERSION),
        _pack_blob(provenance.encode("utf-8")),
        struct.pack("<Idd", n, model.C, model.bias),
        model.alpha.astype("<f8").tobytes(),
        model.labels.astype("<i1").tobytes(),
        _pack_blob(ids_blob),
    ]
    return b"".join(parts)


def read_model(data: bytes) -> tuple[SvmModel, str]:
    if data[:4] != MODEL_MAGIC:
        raise ParseError("not a model container")
    if data[4] != FORMAT_VERSION:
        raise ParseError(f"unsupported model version {data[4]}")
    provenance, offset = _unpack_blob(data, 5)
    n, c_value, bias = struct.unpack_from("<Idd", data, offset)
    offset += 20
    alpha = np.frombuffer(data, dtype="<f8", offset=offset, count=n).copy()
    offset += 8 * n
    labels = np.frombuffer(data, dtype="<i1", offset=offset, count=n)
    offset += n
    ids_blob, offset = _unpack_blob(data, offset)
    if offset != len(data):
        raise ParseError("model payload size mismatch")
    train_ids = ids_blob.decode("utf-8").split("\n") if ids_blob else None
    model = SvmModel(
        alpha=alpha,
        labels=labels.astype(np.float64),
        bias=bias,
        C=c_value,
        train_ids=train_ids,
    )
    return model, provenance.decode("utf-8")
