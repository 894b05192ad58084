"""
File formats: event recordings (CSV and packed binary), AOP frame binaries, PGM images with
scale sidecars, flow fields, corner overlays and the CSV report.

All binary formats are little-endian except PGM sample data, which is big-endian per the
netpbm definition. Layouts are documented byte-for-byte in docs/FILE_FORMATS.md.
"""

import csv
import logging
import math
import os
import re
import struct
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .aop_model import AopFrame
from .error_handler import FormatError
from .evs_model import EventStream

logger = logging.getLogger(__name__)

EVENT_CSV_HEADER = "t_us,x,y,p"
EVENT_MAGIC = b"BVSEVT1\x00"
EVENT_HEADER = struct.Struct("<8sIIqqQ")
EVENT_DTYPE = np.dtype([("t", "<u8"), ("x", "<u2"), ("y", "<u2"), ("p", "i1")])

AOP_MAGIC = b"BVSAOP1\x00"
AOP_HEADER = struct.Struct("<8sIIdIdI4i")
AOP_TIMESTAMP = struct.Struct("<q")

FLOW_MAGIC = b"BVSFLW1\x00"
FLOW_HEADER = struct.Struct("<8sII")

_CSV_META = re.compile(r"^#\s*bvs_bench events\s+(.*)$")

REPORT_TEXT_COLUMNS = ("config_hash", "sensor_id", "sensor_kind", "pattern", "status", "error", "flow_method")


def ensure_directory(path: str) -> str:
    """Create ``path`` if needed and fail early when it is not writable."""
    os.makedirs(path, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise PermissionError(f"Output directory is not writable: {path}")
    return path


def sanitize_component(name: Any) -> str:
    """Path component for a sensor id or a numeric sweep value (``100.0`` → ``100``)."""
    if isinstance(name, float) and name.is_integer():
        name = int(name)
    cleaned = re.sub(r'[\\/:*?"<>|\s]+', '_', str(name))
    return cleaned.strip('_') or '_'


# ----------------------------------------------------------------------
# Events
# ----------------------------------------------------------------------

def write_events_csv(stream: EventStream, file_path: str) -> str:
    """One metadata comment line, the header ``t_us,x,y,p`` and one row per event."""
    os.makedirs(os.path.dirname(file_path) or ".", exist_ok=True)
    with open(file_path, 'w', encoding='utf-8', newline='\n') as file:
        file.write(f"# bvs_bench events width={stream.width} height={stream.height} "
                   f"t_start_us={stream.t_start_us} t_end_us={stream.t_end_us}\n")
        file.write(EVENT_CSV_HEADER + "\n")
        if len(stream):
            rows = np.column_stack([stream.t, stream.x, stream.y, stream.p]).astype(np.int64)
            np.savetxt(file, rows, fmt="%d", delimiter=",")
    return file_path


def read_events_csv(file_path: str, resolution: Optional[Tuple[int, int]] = None) -> EventStream:
    """
    Read an event CSV. The metadata comment is optional for recordings made elsewhere; without
    it the sensor size comes from ``resolution`` or, failing that, the largest coordinates.
    """
    meta: Dict[str, int] = {}
    with open(file_path, 'r', encoding='utf-8') as file:
        lines = file.read().splitlines()
    body_start = 0
    for body_start, line in enumerate(lines):
        match = _CSV_META.match(line)
        if match:
            for item in match.group(1).split():
                key, _, value = item.partition("=")
                meta[key] = int(value)
            continue
        if line.startswith("#") or not line.strip():
            continue
        break
    else:
        body_start = len(lines)
    if body_start >= len(lines) or lines[body_start].replace(" ", "") != EVENT_CSV_HEADER:
        raise FormatError(f"{file_path}: expected header '{EVENT_CSV_HEADER}'")

    rows = [line for line in lines[body_start + 1:] if line.strip()]
    try:
        data = np.array([[int(v) for v in line.split(",")] for line in rows], dtype=np.int64).reshape(-1, 4)
    except ValueError as e:
        raise FormatError(f"{file_path}: malformed event row ({e})") from e
    t, x, y, p = data.T

    if "width" in meta and "height" in meta:
        width, height = meta["width"], meta["height"]
    elif resolution is not None:
        width, height = resolution
    elif len(data):
        width, height = int(x.max()) + 1, int(y.max()) + 1
    else:
        raise FormatError(f"{file_path}: empty recording without a sensor size")
    if len(t) and np.any(np.diff(t) < 0):
        raise FormatError(f"{file_path}: events are not sorted by time")
    try:
        return EventStream(t, x, y, p, width, height, meta.get("t_start_us", int(t.min()) if len(t) else 0),
                           meta.get("t_end_us"), {"source": file_path})
    except ValueError as e:
        raise FormatError(f"{file_path}: {e}") from e


def write_events_bin(stream: EventStream, file_path: str) -> str:
    """40-byte header then packed 13-byte records (u64 t, u16 x, u16 y, i8 p)."""
    if len(stream) and stream.t.min() < 0:
        raise FormatError("binary event files store non-negative timestamps only")
    os.makedirs(os.path.dirname(file_path) or ".", exist_ok=True)
    records = np.empty(len(stream), dtype=EVENT_DTYPE)
    records["t"] = stream.t
    records["x"] = stream.x
    records["y"] = stream.y
    records["p"] = stream.p
    with open(file_path, 'wb') as file:
        file.write(EVENT_HEADER.pack(EVENT_MAGIC, stream.width, stream.height,
                                     stream.t_start_us, stream.t_end_us, len(stream)))
        file.write(records.tobytes())
    return file_path


def read_events_bin(file_path: str) -> EventStream:
    with open(file_path, 'rb') as file:
        raw = file.read()
    if len(raw) < EVENT_HEADER.size:
        raise FormatError(f"{file_path}: truncated header")
    magic, width, height, t_start, t_end, count = EVENT_HEADER.unpack_from(raw)
    if magic != EVENT_MAGIC:
        raise FormatError(f"{file_path}: not an event binary")
    expected = EVENT_HEADER.size + count * EVENT_DTYPE.itemsize
    if len(raw) != expected:
        raise FormatError(f"{file_path}: expected {expected} bytes, found {len(raw)}")
    records = np.frombuffer(raw, dtype=EVENT_DTYPE, count=count, offset=EVENT_HEADER.size)
    try:
        return EventStream(records["t"].astype(np.int64), records["x"], records["y"], records["p"],
                           width, height, t_start, t_end, {"source": file_path})
    except ValueError as e:
        raise FormatError(f"{file_path}: {e}") from e


def write_events(stream: EventStream, file_path_stem: str, event_format: str = "csv") -> str:
    if event_format == "bin":
        return write_events_bin(stream, file_path_stem + ".bin")
    return write_events_csv(stream, file_path_stem + ".csv")


def read_events(file_path: str) -> EventStream:
    if file_path.endswith(".bin"):
        return read_events_bin(file_path)
    return read_events_csv(file_path)


# ----------------------------------------------------------------------
# AOP frames
# ----------------------------------------------------------------------

def write_aop_bin(frames: Sequence[AopFrame], fps: float, quant_bits: int, file_path: str) -> str:
    """Header, then per frame an i64 timestamp followed by the td, sd_a and sd_b i16 planes."""
    if not frames:
        raise FormatError("cannot write an empty AOP recording")
    height, width = frames[0].shape
    (ax, ay), (bx, by) = frames[0].sd_directions
    os.makedirs(os.path.dirname(file_path) or ".", exist_ok=True)
    with open(file_path, 'wb') as file:
        file.write(AOP_HEADER.pack(AOP_MAGIC, width, height, float(fps), int(quant_bits),
                                   float(frames[0].quant_step), len(frames), ax, ay, bx, by))
        for frame in frames:
            if frame.shape != (height, width):
                raise FormatError("all AOP frames must share one size")
            file.write(AOP_TIMESTAMP.pack(int(frame.t)))
            for plane in (frame.td, frame.sd_a, frame.sd_b):
                file.write(np.ascontiguousarray(plane, dtype="<i2").tobytes())
    return file_path


def read_aop_bin(file_path: str) -> Tuple[List[AopFrame], Dict[str, Any]]:
    """Frames plus a header dict (width, height, fps, quant_bits, quant_step, sd_directions)."""
    with open(file_path, 'rb') as file:
        raw = file.read()
    if len(raw) < AOP_HEADER.size:
        raise FormatError(f"{file_path}: truncated header")
    magic, width, height, fps, quant_bits, quant_step, n_frames, ax, ay, bx, by = AOP_HEADER.unpack_from(raw)
    if magic != AOP_MAGIC:
        raise FormatError(f"{file_path}: not an AOP binary")
    plane_bytes = width * height * 2
    frame_bytes = AOP_TIMESTAMP.size + 3 * plane_bytes
    expected = AOP_HEADER.size + n_frames * frame_bytes
    if len(raw) != expected:
        raise FormatError(f"{file_path}: expected {expected} bytes, found {len(raw)}")

    directions = ((ax, ay), (bx, by))
    frames = []
    offset = AOP_HEADER.size
    for _ in range(n_frames):
        (t,) = AOP_TIMESTAMP.unpack_from(raw, offset)
        offset += AOP_TIMESTAMP.size
        planes = []
        for _ in range(3):
            planes.append(np.frombuffer(raw, dtype="<i2", count=width * height, offset=offset)
                          .reshape(height, width).astype(np.int16))
            offset += plane_bytes
        frames.append(AopFrame(t, planes[0], planes[1], planes[2], quant_step, directions))
    header = {"width": width, "height": height, "fps": fps, "quant_bits": quant_bits,
              "quant_step": quant_step, "sd_directions": directions}
    return frames, header


# ----------------------------------------------------------------------
# Images
# ----------------------------------------------------------------------

def write_pgm(image: np.ndarray, file_path: str, bits: int = 8,
              value_range: Optional[Tuple[float, float]] = None) -> str:
    """
    Binary PGM (P5). Values are mapped linearly onto [0, 2^bits − 1]; the sidecar
    ``<file>.scale.txt`` records ``value = offset + scale · code``.
    """
    if bits not in (8, 16):
        raise FormatError("PGM depth must be 8 or 16 bits")
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise FormatError("PGM images must be 2-D")
    maxval = 2 ** bits - 1
    finite = image[np.isfinite(image)]
    lo, hi = value_range if value_range is not None else (
        (float(finite.min()), float(finite.max())) if finite.size else (0.0, 0.0))
    scale = (hi - lo) / maxval if hi > lo else 0.0
    codes = np.zeros(image.shape) if scale == 0 else (np.nan_to_num(image, nan=lo) - lo) / scale
    codes = np.clip(np.floor(codes + 0.5), 0, maxval)
    data = codes.astype(">u2" if bits == 16 else "u1")

    os.makedirs(os.path.dirname(file_path) or ".", exist_ok=True)
    height, width = image.shape
    with open(file_path, 'wb') as file:
        file.write(f"P5\n{width} {height}\n{maxval}\n".encode("ascii"))
        file.write(data.tobytes())
    with open(file_path + ".scale.txt", 'w', encoding='utf-8') as file:
        file.write(f"offset={lo!r}\nscale={scale!r}\nbits={bits}\n")
    return file_path


def read_pgm(file_path: str) -> Tuple[np.ndarray, int]:
    """Raw PGM codes and maxval."""
    with open(file_path, 'rb') as file:
        raw = file.read()
    tokens: List[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            pos = raw.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{file_path}: truncated PGM header")
        tokens.append(raw[start:pos])
    if tokens[0] != b"P5":
        raise FormatError(f"{file_path}: not a binary PGM")
    width, height, maxval = (int(t) for t in tokens[1:])
    pos += 1
    dtype = ">u2" if maxval > 255 else "u1"
    count = width * height
    if len(raw) - pos != count * np.dtype(dtype).itemsize:
        raise FormatError(f"{file_path}: pixel data size mismatch")
    return np.frombuffer(raw, dtype=dtype, count=count, offset=pos).reshape(height, width), maxval


def write_corner_overlay(image: np.ndarray, corners: np.ndarray, file_path: str) -> str:
    """8-bit PGM of ``image`` with each (x, y) corner drawn as a 3×3 white dot."""
    image = np.asarray(image, dtype=np.float64)
    finite = image[np.isfinite(image)]
    lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    canvas = np.zeros(image.shape) if hi <= lo else (image - lo) / (hi - lo) * 254.0
    height, width = image.shape
    for x, y in np.asarray(corners, dtype=np.float64).reshape(-1, 2):
        col, row = int(round(x)), int(round(y))
        canvas[max(row - 1, 0):min(row + 2, height), max(col - 1, 0):min(col + 2, width)] = 255.0
    return write_pgm(canvas, file_path, bits=8, value_range=(0.0, 255.0))


# ----------------------------------------------------------------------
# Flow fields
# ----------------------------------------------------------------------

def write_flow_bin(vx: np.ndarray, vy: np.ndarray, valid: np.ndarray, file_path: str) -> str:
    """Header, vx and vy as f32 planes, then a little-bit-order validity bitmap."""
    height, width = vx.shape
    os.makedirs(os.path.dirname(file_path) or ".", exist_ok=True)
    with open(file_path, 'wb') as file:
        file.write(FLOW_HEADER.pack(FLOW_MAGIC, width, height))
        file.write(np.ascontiguousarray(vx, dtype="<f4").tobytes())
        file.write(np.ascontiguousarray(vy, dtype="<f4").tobytes())
        file.write(np.packbits(np.asarray(valid, dtype=bool).ravel(), bitorder="little").tobytes())
    return file_path


def read_flow_bin(file_path: str) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    with open(file_path, 'rb') as file:
        raw = file.read()
    if len(raw) < FLOW_HEADER.size:
        raise FormatError(f"{file_path}: truncated header")
    magic, width, height = FLOW_HEADER.unpack_from(raw)
    if magic != FLOW_MAGIC:
        raise FormatError(f"{file_path}: not a flow binary")
    n = width * height
    bitmap_bytes = (n + 7) // 8
    if len(raw) != FLOW_HEADER.size + 8 * n + bitmap_bytes:
        raise FormatError(f"{file_path}: size mismatch")
    offset = FLOW_HEADER.size
    vx = np.frombuffer(raw, dtype="<f4", count=n, offset=offset).reshape(height, width).astype(np.float64)
    vy = np.frombuffer(raw, dtype="<f4", count=n, offset=offset + 4 * n).reshape(height, width).astype(np.float64)
    bits = np.frombuffer(raw, dtype=np.uint8, count=bitmap_bytes, offset=offset + 8 * n)
    valid = np.unpackbits(bits, bitorder="little")[:n].reshape(height, width).astype(bool)
    return vx, vy, valid


# ----------------------------------------------------------------------
# Report
# ----------------------------------------------------------------------

def format_cell(value: Any) -> str:
    """CSV cell text: floats as %.10g, NaN and None as an empty field, bools as true/false."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return ""
        return "%.10g" % float(value)
    return str(value)


def write_report_csv(rows: Iterable[Dict[str, Any]], columns: Sequence[str], file_path: str) -> str:
    """Fixed column order, ``\\n`` line endings, no index column."""
    os.makedirs(os.path.dirname(file_path) or ".", exist_ok=True)
    with open(file_path, 'w', newline='', encoding='utf-8') as file:
        writer = csv.writer(file, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_cell(row.get(column)) for column in columns])
    return file_path


def _parse_cell(text: str) -> Any:
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return float(text) if any(c in text for c in ".eEn") else int(text)
    except ValueError:
        return text


def read_report_csv(file_path: str, text_columns: Sequence[str] = REPORT_TEXT_COLUMNS) -> List[Dict[str, Any]]:
    """Rows as dicts; numeric cells parsed, empty cells ``None``, ``text_columns`` kept verbatim."""
    with open(file_path, 'r', newline='', encoding='utf-8') as file:
        reader = csv.DictReader(file)
        if reader.fieldnames is None:
            raise FormatError(f"{file_path}: empty report")
        return [{key: (value if key in text_columns and value != "" else _parse_cell(value))
                 for key, value in row.items()} for row in reader]
