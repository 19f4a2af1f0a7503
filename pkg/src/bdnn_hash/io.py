"""On-disk formats: datasets, labels, packed codes, ground truth, traces, reports.

Dataset (``BHDM``)::

    magic b"BHDM" | version u32 = 1 | rows u32 | cols u32
    rows * cols little-endian float32, column-major (sample j contiguous)

Labels: one little-endian uint32 per sample, no header.

Packed codes (``BHCB``)::

    magic b"BHCB" | L u32 | count u32
    count * ceil(L / 64) little-endian uint64 words, code by code

Ground truth: text, one line per query of space-separated database indices.
"""

import csv
import struct

import numpy as np

from .search_eval import PackedCodes, words_per_code

DATASET_MAGIC = b"BHDM"
DATASET_VERSION = 1
CODES_MAGIC = b"BHCB"


class FileFormatError(ValueError):
    """A data file does not match its documented layout."""


def write_dataset(path, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("dataset must be a 2-D matrix")
    rows, cols = X.shape
    with open(path, "wb") as fh:
        fh.write(DATASET_MAGIC + struct.pack("<III", DATASET_VERSION, rows, cols))
        fh.write(X.astype("<f4").tobytes(order="F"))


def read_dataset(path):
    """Load a dataset as a float64 ``rows x cols`` array (columns are samples)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 16 or data[:4] != DATASET_MAGIC:
        raise FileFormatError(f"{path}: not a BHDM dataset")
    version, rows, cols = struct.unpack("<III", data[4:16])
    if version != DATASET_VERSION:
        raise FileFormatError(f"{path}: unsupported dataset version {version}")
    payload = data[16:]
    if len(payload) != rows * cols * 4:
        raise FileFormatError(
            f"{path}: payload is {len(payload)} bytes, header promises {rows * cols * 4}")
    X = np.frombuffer(payload, dtype="<f4").reshape((rows, cols), order="F")
    if not np.all(np.isfinite(X)):
        raise FileFormatError(f"{path}: dataset contains non-finite values")
    return X.astype(np.float64)


def write_labels(path, labels):
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or not np.all(labels == np.round(labels))):
        raise ValueError("labels must be non-negative integers")
    with open(path, "wb") as fh:
        fh.write(labels.astype("<u4").tobytes())


def read_labels(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) % 4:
        raise FileFormatError(f"{path}: labels file length is not a multiple of 4")
    return np.frombuffer(data, dtype="<u4").astype(np.int64)


def write_codes(path, codes):
    with open(path, "wb") as fh:
        fh.write(CODES_MAGIC + struct.pack("<II", codes.L, codes.count))
        fh.write(np.ascontiguousarray(codes.words, dtype="<u8").tobytes())


def read_codes(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != CODES_MAGIC:
        raise FileFormatError(f"{path}: not a BHCB codes file")
    L, count = struct.unpack("<II", data[4:12])
    if L < 1:
        raise FileFormatError(f"{path}: code length must be >= 1")
    nw = words_per_code(L)
    payload = data[12:]
    if len(payload) != count * nw * 8:
        raise FileFormatError(f"{path}: payload size does not match L={L}, count={count}")
    words = np.frombuffer(payload, dtype="<u8").astype(np.uint64).reshape(count, nw)
    if L % 64 and np.any(words[:, -1] >> np.uint64(L % 64)):
        raise FileFormatError(f"{path}: padding bits are set")
    return PackedCodes(L, words)


def write_ground_truth(path, gt):
    with open(path, "w") as fh:
        for row in gt:
            fh.write(" ".join(str(int(i)) for i in row) + "\n")


def read_ground_truth(path):
    gt = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            try:
                gt.append(np.array([int(tok) for tok in line.split()], dtype=np.int64))
            except ValueError as exc:
                raise FileFormatError(f"{path}:{lineno}: {exc}") from None
    return gt


def write_trace(path, history, header=None):
    """Objective trace CSV: optional ``# key=value`` line, then iteration,phase,objective."""
    with open(path, "w", newline="") as fh:
        if header:
            fh.write("# " + " ".join(f"{k}={v}" for k, v in header.items()) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "phase", "objective"])
        for t, phase, J in history:
            w.writerow([t, phase, repr(float(J))])


def read_trace(path):
    with open(path, newline="") as fh:
        rows = [line for line in fh if not line.startswith("#")]
    reader = csv.DictReader(rows)
    return [(int(r["iteration"]), r["phase"], float(r["objective"])) for r in reader]


REPORT_COLUMNS = ["query", "ap", "retrieved_within_radius", "precision_at_radius"]


def write_report(path, report):
    """Per-query rows in :data:`REPORT_COLUMNS` order, then a ``mean`` summary row."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# L={report.L} k_gt={report.k_gt} map_top_k={report.map_top_k} "
                 f"radius={report.radius}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for i, (ap, n, p) in enumerate(zip(report.ap, report.retrieved, report.precision)):
            w.writerow([i, repr(float(ap)), int(n), repr(float(p))])
        w.writerow(["mean", repr(report.map),
                    repr(float(np.mean(report.retrieved))) if report.retrieved.size else "0.0",
                    repr(report.precision_at_radius2)])
