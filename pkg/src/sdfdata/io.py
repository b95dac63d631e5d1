"""
File formats owned by the SDF data package.

OBJ (subset): `v x y z` and `f i j k ...` records, 1-based (negative indices
count back from the last vertex), `i/t/n` tokens reduced to the vertex index,
polygons fan-triangulated. Everything else is ignored.

SampleSet binary (little-endian):
    b"GSDF" | u32 version=1 | u32 count | count * 5 f32 (x, y, z, sdf_hand, sdf_obj)
    | u32 metadata length | metadata JSON (sorted keys)
"""

from __future__ import annotations

import json
import struct
from typing import List

import numpy as np

from src.errors import ConfigError, InputParseError
from src.sdfdata.mesh import TriMesh
from src.sdfdata.sampling import SampleSet

SAMPLES_MAGIC = b"GSDF"
SAMPLES_VERSION = 1


def _read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return f.read()
    except FileNotFoundError:
        raise ConfigError(f"file not found: {path}", file=path)


def parse_obj(text: str, source: str = None) -> TriMesh:
    vertices: List[List[float]] = []
    faces: List[List[int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        if parts[0] == "v":
            try:
                vertices.append([float(x) for x in parts[1:4]])
            except ValueError:
                raise InputParseError(f"line {lineno}: bad vertex record", file=source, field="v")
            if len(vertices[-1]) != 3:
                raise InputParseError(f"line {lineno}: vertex needs 3 coordinates", file=source, field="v")
        elif parts[0] == "f":
            idx = []
            for tok in parts[1:]:
                try:
                    i = int(tok.split("/")[0])
                except ValueError:
                    raise InputParseError(f"line {lineno}: bad face index '{tok}'", file=source, field="f")
                if i == 0:
                    raise InputParseError(f"line {lineno}: face indices are 1-based", file=source, field="f")
                idx.append(i - 1 if i > 0 else len(vertices) + i)
            if len(idx) < 3:
                raise InputParseError(f"line {lineno}: face needs at least 3 vertices", file=source, field="f")
            faces.extend([idx[0], idx[k], idx[k + 1]] for k in range(1, len(idx) - 1))

    try:
        return TriMesh(np.array(vertices, dtype=np.float64).reshape(-1, 3),
                       np.array(faces, dtype=np.int64).reshape(-1, 3))
    except InputParseError as e:
        e.file = source
        raise


def load_obj(path: str) -> TriMesh:
    return parse_obj(_read_text(path), source=path)


def format_obj(mesh: TriMesh) -> str:
    lines = [f"v {x:.9g} {y:.9g} {z:.9g}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles]
    return "\n".join(lines) + "\n"


def save_obj(mesh: TriMesh, path: str):
    with open(path, "w", encoding="utf-8") as f:
        f.write(format_obj(mesh))


def encode_sample_set(samples: SampleSet) -> bytes:
    body = np.column_stack([samples.positions, samples.sdf_hand, samples.sdf_obj]).astype("<f4")
    meta = json.dumps(samples.metadata, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return b"".join([
        SAMPLES_MAGIC,
        struct.pack("<II", SAMPLES_VERSION, len(samples)),
        body.tobytes(order="C"),
        struct.pack("<I", len(meta)),
        meta,
    ])


def decode_sample_set(data: bytes, source: str = None) -> SampleSet:
    if len(data) < 12 or data[:4] != SAMPLES_MAGIC:
        raise InputParseError("not a sample set file (bad magic)", file=source, field="magic")
    version, count = struct.unpack_from("<II", data, 4)
    if version != SAMPLES_VERSION:
        raise InputParseError(f"unsupported sample set version {version}", file=source, field="version")
    body_end = 12 + 20 * count
    if len(data) < body_end + 4:
        raise InputParseError(f"truncated sample set: {count} samples declared", file=source, field="count")
    body = np.frombuffer(data, dtype="<f4", count=5 * count, offset=12).reshape(count, 5).astype(np.float64)
    (meta_len,) = struct.unpack_from("<I", data, body_end)
    if len(data) != body_end + 4 + meta_len:
        raise InputParseError("metadata length does not match file size", file=source, field="metadata")
    try:
        metadata = json.loads(data[body_end + 4:].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise InputParseError(f"bad metadata block: {e}", file=source, field="metadata")
    if count == 0:
        raise InputParseError("sample set is empty", file=source, field="count")
    return SampleSet(body[:, :3], body[:, 3], body[:, 4], metadata)


def save_sample_set(samples: SampleSet, path: str):
    with open(path, "wb") as f:
        f.write(encode_sample_set(samples))


def load_sample_set(path: str) -> SampleSet:
    try:
        with open(path, "rb") as f:
            data = f.read()
    except FileNotFoundError:
        raise ConfigError(f"file not found: {path}", file=path)
    return decode_sample_set(data, source=path)
