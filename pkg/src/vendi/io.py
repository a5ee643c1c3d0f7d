"""Matrix files (CSV or the VNDM1 binary layout) and atomic text output.

Binary layout, all little-endian::

    b"VNDM1\\0" | uint64 rows | uint64 cols | rows*cols float64, row-major
"""

import csv
import io
import os
import struct
import tempfile

import numpy as np

MAGIC = b"VNDM1\x00"
_HEADER = struct.Struct("<QQ")


class MatrixFileError(ValueError):
    pass


def fmt(v) -> str:
    """Shortest round-tripping text for a float."""
    return repr(float(v))


def write_matrix_binary(path, M):
    M = np.ascontiguousarray(M, dtype="<f8")
    if M.ndim != 2:
        raise MatrixFileError("only 2-D matrices can be written")
    payload = MAGIC + _HEADER.pack(*M.shape) + M.tobytes(order="C")
    atomic_write_bytes(path, payload)


def read_matrix_binary(data: bytes) -> np.ndarray:
    head = len(MAGIC) + _HEADER.size
    if len(data) < head or not data.startswith(MAGIC):
        raise MatrixFileError("not a VNDM1 file")
    rows, cols = _HEADER.unpack_from(data, len(MAGIC))
    expected = head + 8 * rows * cols
    if len(data) != expected:
        raise MatrixFileError(
            f"declared {rows}x{cols} needs {expected} bytes, file has {len(data)}")
    return np.frombuffer(data, dtype="<f8", offset=head).reshape(rows, cols).astype(float)


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def parse_csv(text: str):
    """Return (header or None, float matrix). A non-numeric first row is a header."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise MatrixFileError("empty CSV")
    header = None
    if not all(_is_number(c) for c in rows[0]):
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
    if not rows:
        raise MatrixFileError("CSV has a header but no data rows")
    width = len(rows[0])
    if header is not None and len(header) != width:
        raise MatrixFileError("header width does not match data width")
    out = np.empty((len(rows), width))
    for i, r in enumerate(rows):
        if len(r) != width:
            raise MatrixFileError(f"row {i + 1} has {len(r)} fields, expected {width}")
        for j, c in enumerate(r):
            c = c.strip()
            if c == "":
                raise MatrixFileError(f"missing value at row {i + 1}, column {j + 1}")
            try:
                out[i, j] = float(c)
            except ValueError:
                raise MatrixFileError(f"non-numeric value {c!r} at row {i + 1}") from None
    if not np.all(np.isfinite(out)):
        raise MatrixFileError("CSV contains non-finite values")
    return header, out


def read_matrix(path) -> np.ndarray:
    """Read a binary or CSV matrix file, detected by the magic bytes."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise MatrixFileError(f"cannot read {path}: {exc.strerror}") from None
    if data.startswith(MAGIC):
        return read_matrix_binary(data)
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        raise MatrixFileError(f"{path} is neither VNDM1 nor UTF-8 CSV") from None
    return parse_csv(text)[1]


def read_table(path):
    """CSV with a required header row: (column names, matrix)."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise MatrixFileError(f"cannot read {path}: {exc}") from None
    header, data = parse_csv(text)
    if header is None:
        raise MatrixFileError("table needs a header row with column names")
    return header, data


def matrix_to_csv(M, header=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header is not None:
        w.writerow(header)
    for row in np.atleast_2d(M):
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_matrix_csv(path, M, header=None):
    atomic_write_text(path, matrix_to_csv(M, header))


def atomic_write_bytes(path, data: bytes):
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str):
    atomic_write_bytes(path, text.encode("utf-8"))
