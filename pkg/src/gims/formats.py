"""On-disk formats. Binary payloads are little-endian; every writer is atomic.

* GIMK keypoints: JSON lines ``{x, y, scale, orientation, response, octave}``.
* GIMD descriptors: ``b"GIMD"``, u32 version, u32 count, u32 dim, float32 data.
* GIMG graph: JSON ``{n, method, params, edges}`` with sorted ``i < j`` pairs.
* GIMW weights: ``b"GIMW"``, u32 version, u32 manifest length, JSON manifest,
  float32 blob. The manifest lists ``{name, shape, offset}`` per tensor plus a
  SHA-256 of the blob.
* Matches: TSV with header ``iA  jB  confidence``.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .core import DescriptorSet, Graph, Image, Keypoint, MatchSet, canonical_edges
from .encoder import EncoderConfig, ModelWeights, parameter_shapes

GIMD_MAGIC = b"GIMD"
GIMW_MAGIC = b"GIMW"
VERSION = 1


class FormatError(ValueError):
    pass


def atomic_write(path, data: bytes | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


# ---- images ------------------------------------------------------------------------------

def load_image(path, max_pixels: int = 64_000_000) -> Image:
    from PIL import Image as PILImage

    try:
        with PILImage.open(path) as im:
            if im.width * im.height > max_pixels:
                raise FormatError(f"{path}: image of {im.width}x{im.height} exceeds {max_pixels} pixels")
            mode = "L" if im.mode in ("L", "I;16", "I", "F", "1", "LA") else "RGB"
            arr = np.asarray(im.convert(mode), dtype=np.float64) / 255.0
    except (OSError, SyntaxError) as exc:
        raise FormatError(f"cannot read image {path}: {exc}") from exc
    return Image(arr)


def save_image(img: Image, path) -> Path:
    from PIL import Image as PILImage
    import io

    arr = np.round(img.pixels * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    PILImage.fromarray(arr).save(buf, format="PNG")
    return atomic_write(path, buf.getvalue())


# ---- keypoints ---------------------------------------------------------------------------

def write_keypoints(path, kps) -> Path:
    lines = [json.dumps({"x": k.x, "y": k.y, "scale": k.scale, "orientation": k.orientation,
                         "response": k.response, "octave": k.octave}) for k in kps]
    return atomic_write(path, "".join(line + "\n" for line in lines))


def read_keypoints(path) -> list[Keypoint]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                out.append(Keypoint(float(d["x"]), float(d["y"]), float(d["scale"]), float(d["orientation"]),
                                    float(d["response"]), int(d["octave"])))
            except (KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"{path}:{lineno}: bad keypoint record ({exc})") from exc
    return out


# ---- descriptors -------------------------------------------------------------------------

def write_descriptors(path, desc: DescriptorSet) -> Path:
    data = np.ascontiguousarray(desc.data, dtype="<f4")
    head = GIMD_MAGIC + struct.pack("<III", VERSION, data.shape[0], data.shape[1])
    return atomic_write(path, head + data.tobytes())


def read_descriptors(path) -> DescriptorSet:
    raw = Path(path).read_bytes()
    if len(raw) < 16 or raw[:4] != GIMD_MAGIC:
        raise FormatError(f"{path}: not a GIMD file")
    version, count, dim = struct.unpack("<III", raw[4:16])
    if version != VERSION:
        raise FormatError(f"{path}: unsupported GIMD version {version}")
    if len(raw) != 16 + 4 * count * dim:
        raise FormatError(f"{path}: payload holds {len(raw) - 16} bytes, expected {4 * count * dim}")
    data = np.frombuffer(raw, dtype="<f4", offset=16).reshape(count, dim).astype(np.float64)
    return DescriptorSet(data, ~np.any(data != 0, axis=1))


# ---- graphs ------------------------------------------------------------------------------

def graph_to_json(g: Graph, method: str, params: dict | None = None) -> dict:
    edges = canonical_edges(g.edges)
    return {"n": int(g.n), "method": method, "params": params or {}, "edges": edges.tolist()}


def write_graph(path, g: Graph, method: str, params: dict | None = None) -> Path:
    return atomic_write(path, json.dumps(graph_to_json(g, method, params)))


def read_graph(path) -> tuple[Graph, str, dict]:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        g = Graph.from_edges(int(d["n"]), np.array(d["edges"], dtype=np.int64).reshape(-1, 2))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: bad graph file ({exc})") from exc
    return g, d.get("method", ""), d.get("params", {})


# ---- weights -----------------------------------------------------------------------------

def weights_bytes(w: ModelWeights) -> bytes:
    tensors, blobs, offset = [], [], 0
    for name in parameter_shapes(w.config):
        arr = np.asarray(w.params[name], dtype="<f4")  # keeps 0-d tensors 0-d
        tensors.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blobs.append(arr.tobytes())
        offset += arr.nbytes
    blob = b"".join(blobs)
    manifest = {"config": w.config.as_dict(), "tensors": tensors,
                "sha256": hashlib.sha256(blob).hexdigest(), "dtype": "<f4"}
    mbytes = json.dumps(manifest, sort_keys=True).encode("utf-8")
    return GIMW_MAGIC + struct.pack("<II", VERSION, len(mbytes)) + mbytes + blob


def write_weights(path, w: ModelWeights) -> Path:
    return atomic_write(path, weights_bytes(w))


def read_weights(path) -> ModelWeights:
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != GIMW_MAGIC:
        raise FormatError(f"{path}: not a GIMW file")
    version, mlen = struct.unpack("<II", raw[4:12])
    if version != VERSION:
        raise FormatError(f"{path}: unsupported GIMW version {version}")
    try:
        manifest = json.loads(raw[12:12 + mlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: corrupt manifest") from exc
    blob = raw[12 + mlen:]
    if hashlib.sha256(blob).hexdigest() != manifest.get("sha256"):
        raise FormatError(f"{path}: checksum mismatch")
    cfg = EncoderConfig(**manifest["config"])
    params = {}
    for t in manifest["tensors"]:
        shape = tuple(t["shape"])
        count = int(np.prod(shape)) if shape else 1
        end = t["offset"] + 4 * count
        if end > len(blob):
            raise FormatError(f"{path}: tensor {t['name']} runs past the blob")
        params[t["name"]] = np.frombuffer(blob, dtype="<f4", count=count, offset=t["offset"]).reshape(shape).astype(np.float64)
    try:
        return ModelWeights(cfg, params)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


# ---- matches and homographies ------------------------------------------------------------

def write_matches(path, ms: MatchSet) -> Path:
    rows = ["iA\tjB\tconfidence"]
    rows += [f"{a}\t{b}\t{float(c)!r}" for a, b, c in zip(ms.idx_a, ms.idx_b, ms.confidence)]
    return atomic_write(path, "\n".join(rows) + "\n")


def read_matches(path) -> MatchSet:
    a, b, c = [], [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0] == "iA":
                continue
            if len(parts) != 3:
                raise FormatError(f"{path}:{lineno}: expected 3 columns")
            a.append(int(parts[0]))
            b.append(int(parts[1]))
            c.append(float(parts[2]))
    return MatchSet(np.array(a, dtype=np.int64), np.array(b, dtype=np.int64), np.array(c))


def write_homography(path, H) -> Path:
    H = np.asarray(getattr(H, "matrix", H), dtype=np.float64).reshape(3, 3)
    return atomic_write(path, json.dumps({"H": H.tolist()}))


def read_homography(path) -> np.ndarray:
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    H = np.array(d["H"] if isinstance(d, dict) else d, dtype=np.float64)
    if H.shape != (3, 3):
        raise FormatError(f"{path}: homography must be 3x3")
    return H


def write_json(path, obj) -> Path:
    return atomic_write(path, json.dumps(obj, indent=2, sort_keys=True, default=_json_default))


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
