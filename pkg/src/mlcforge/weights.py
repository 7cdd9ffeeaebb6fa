"""Weight-archive I/O: the portable binary container for trained parameters.

Layout (all headers ASCII, one per line; payloads little-endian float32):

    MLCW1
    MANIFEST <nbytes>\\n<manifest kv text>\\n
    PARAM <name> <d1,d2,..> <nbytes>\\n<f32 payload>\\n
    ...
    OPTMETA <nbytes>\\n<kv text>\\n            (optional optimizer state)
    OPTP <name> <dims> <nbytes>\\n<f32>\\n     (moment arrays etc.)
    ...
    TRAILER sha256=<hex>\\n                    (digest of all preceding bytes)

The manifest block is self-describing (layer sizes, activations, transform
steps, dataset digest, epoch count, metric), so an archive loads without the
source model. The same format is produced and consumed by the training
runtime; this module is the toolchain side (planning, packaging, import
resolution, mock bridges in tests).
"""

from __future__ import annotations

import hashlib
import os
import struct
from dataclasses import dataclass

from .frontend.conflang import parse_value_document
from .frontend.printer import print_config_inline
from .model import ConfigTree

MAGIC = b"MLCW1\n"


class ArchiveError(Exception):
    pass


@dataclass(frozen=True)
class ParamBlock:
    name: str
    dims: tuple[int, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        count = 1
        for d in self.dims:
            count *= d
        if count != len(self.values):
            raise ArchiveError(f"param '{self.name}': dims {self.dims} need {count} values, got {len(self.values)}")


@dataclass(frozen=True)
class WeightArchive:
    manifest: ConfigTree
    params: tuple[ParamBlock, ...] = ()
    opt_meta: ConfigTree | None = None
    opt_params: tuple[ParamBlock, ...] = ()

    def param(self, name: str) -> ParamBlock | None:
        for p in self.params:
            if p.name == name:
                return p
        return None


def _f32(values) -> bytes:
    return struct.pack(f"<{len(values)}f", *values)


def _kv_bytes(tree: ConfigTree) -> bytes:
    return print_config_inline(tree).encode("utf-8")


def _param_bytes(tag: str, block: ParamBlock) -> bytes:
    payload = _f32(block.values)
    dims = ",".join(str(d) for d in block.dims)
    return f"{tag} {block.name} {dims} {len(payload)}\n".encode("ascii") + payload + b"\n"


def archive_bytes(archive: WeightArchive) -> bytes:
    chunks: list[bytes] = [MAGIC]
    manifest = _kv_bytes(archive.manifest)
    chunks.append(f"MANIFEST {len(manifest)}\n".encode("ascii") + manifest + b"\n")
    for block in archive.params:
        chunks.append(_param_bytes("PARAM", block))
    if archive.opt_meta is not None:
        meta = _kv_bytes(archive.opt_meta)
        chunks.append(f"OPTMETA {len(meta)}\n".encode("ascii") + meta + b"\n")
        for block in archive.opt_params:
            chunks.append(_param_bytes("OPTP", block))
    body = b"".join(chunks)
    digest = hashlib.sha256(body).hexdigest()
    return body + f"TRAILER sha256={digest}\n".encode("ascii")


def write_archive(path: str, archive: WeightArchive) -> str:
    """Write the archive; returns the payload digest recorded in the trailer."""
    data = archive_bytes(archive)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(data)
    return data[-65:-1].decode("ascii")


def _parse_kv(data: bytes, what: str) -> ConfigTree:
    tree, diags = parse_value_document(data.decode("utf-8"), f"<{what}>")
    if tree is None:
        raise ArchiveError(f"malformed {what} block: " + "; ".join(d.message for d in diags))
    return tree


def _read_line(data: bytes, offset: int) -> tuple[str, int]:
    end = data.find(b"\n", offset)
    if end < 0:
        raise ArchiveError("truncated archive")
    return data[offset:end].decode("ascii", errors="replace"), end + 1


def read_archive_bytes(data: bytes) -> WeightArchive:
    if not data.startswith(MAGIC):
        raise ArchiveError("bad magic; not a weight archive")
    trailer_at = data.rfind(b"TRAILER sha256=")
    if trailer_at < 0:
        raise ArchiveError("missing trailer")
    expected = data[trailer_at + len(b"TRAILER sha256="):].strip().decode("ascii")
    actual = hashlib.sha256(data[:trailer_at]).hexdigest()
    if expected != actual:
        raise ArchiveError(f"digest mismatch: trailer {expected}, payload {actual}")

    offset = len(MAGIC)
    manifest: ConfigTree | None = None
    params: list[ParamBlock] = []
    opt_meta: ConfigTree | None = None
    opt_params: list[ParamBlock] = []

    while offset < trailer_at:
        header, offset = _read_line(data, offset)
        fields = header.split(" ")
        tag = fields[0]
        if tag in ("MANIFEST", "OPTMETA"):
            nbytes = int(fields[1])
            blob = data[offset:offset + nbytes]
            offset += nbytes + 1
            if tag == "MANIFEST":
                manifest = _parse_kv(blob, "manifest")
            else:
                opt_meta = _parse_kv(blob, "optimizer state")
        elif tag in ("PARAM", "OPTP"):
            name = fields[1]
            dims = tuple(int(d) for d in fields[2].split(","))
            nbytes = int(fields[3])
            payload = data[offset:offset + nbytes]
            offset += nbytes + 1
            values = struct.unpack(f"<{nbytes // 4}f", payload)
            block = ParamBlock(name, dims, values)
            (params if tag == "PARAM" else opt_params).append(block)
        else:
            raise ArchiveError(f"unknown block tag '{tag}'")

    if manifest is None:
        raise ArchiveError("archive has no manifest block")
    return WeightArchive(manifest, tuple(params), opt_meta, tuple(opt_params))


def read_archive(path: str) -> WeightArchive:
    with open(path, "rb") as fh:
        return read_archive_bytes(fh.read())


def read_manifest(path: str) -> ConfigTree:
    """Read just the manifest block (cheap; skips parameter payloads)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ArchiveError("bad magic; not a weight archive")
        header = fh.readline().decode("ascii", errors="replace").strip()
        fields = header.split(" ")
        if fields[0] != "MANIFEST":
            raise ArchiveError("manifest block must come first")
        blob = fh.read(int(fields[1]))
    return _parse_kv(blob, "manifest")


def archive_io_shapes(path: str) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """(input dims, output dims) from an archive's layer sizes."""
    manifest = read_manifest(path)
    sizes = manifest.get("layer_sizes")
    if not isinstance(sizes, tuple) or len(sizes) < 2:
        raise ArchiveError(f"archive '{path}' manifest lacks layer_sizes")
    return (int(sizes[0]),), (int(sizes[-1]),)


def import_resolver_for(root: str):
    """ImportResolver reading pretrained-layer shapes from archives under ``root``."""

    def resolve(ref: str):
        path = ref if os.path.isabs(ref) else os.path.join(root, ref)
        try:
            return archive_io_shapes(path)
        except (OSError, ArchiveError):
            return None

    return resolve
