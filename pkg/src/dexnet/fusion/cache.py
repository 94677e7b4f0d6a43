"""Binary embedding cache keyed by (critic, weights, dataset, sample).

One file per (critic_id, dataset_id, weights_hash) holds fixed-dim
float32 records. Because the weights hash is part of the key and the
file identity, re-adapting a critic can never alias stale embeddings:
lookups under the new hash simply miss.

File layout, little-endian:

    header: magic "DEXF" | version u16 | dtype u8 (1 = f32le) | dim u32
            | count u64 | critic_id (u8 len + bytes)
            | weights_hash (u8 len + bytes) | dataset_id (u16 len + bytes)
    record: sample_id (u16 len + bytes) | dim*4 vector bytes
            | crc32 u32 over (id bytes + vector bytes)

Many threads may read while one appends; the in-memory index is guarded
by a lock and reads go through ``os.pread`` so they never share a file
offset with the writer.
"""

from __future__ import annotations

import os
import struct
import threading
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import CacheCorrupt, DimensionError

MAGIC = b"DEXF"
VERSION = 1
DTYPE_F32LE = 1
_FIXED_HEADER = struct.Struct("<4sHBIQ")  # magic, version, dtype, dim, count


@dataclass(frozen=True)
class FeatureCacheKey:
    critic_id: str
    weights_hash: str
    dataset_id: str
    sample_id: str


class _CacheFile:
    """A single cache segment; one exclusive writer, many readers."""

    def __init__(self, path: Path, critic_id: str, weights_hash: str, dataset_id: str, dim: int | None):
        self.path = path
        self.critic_id = critic_id
        self.weights_hash = weights_hash
        self.dataset_id = dataset_id
        self._lock = threading.Lock()
        self._index: dict[str, int] = {}
        if path.exists():
            self._open_existing()
        else:
            if dim is None:
                raise DimensionError(f"cannot create {path.name} without a known dim")
            self.dim = dim
            self._create()
        self._read_fd = os.open(self.path, os.O_RDONLY)

    # -- file structure ------------------------------------------------

    def _create(self) -> None:
        self.count = 0
        header = _FIXED_HEADER.pack(MAGIC, VERSION, DTYPE_F32LE, self.dim, 0)
        cid = self.critic_id.encode("utf-8")
        whash = self.weights_hash.encode("utf-8")
        did = self.dataset_id.encode("utf-8")
        header += struct.pack("<B", len(cid)) + cid
        header += struct.pack("<B", len(whash)) + whash
        header += struct.pack("<H", len(did)) + did
        self._count_offset = _FIXED_HEADER.size - 8
        self._data_start = len(header)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._write_fh = open(self.path, "wb")
        self._write_fh.write(header)
        self._write_fh.flush()

    def _open_existing(self) -> None:
        with open(self.path, "rb") as fh:
            fixed = fh.read(_FIXED_HEADER.size)
            if len(fixed) < _FIXED_HEADER.size:
                raise CacheCorrupt(f"{self.path.name}: truncated header")
            magic, version, dtype, dim, count = _FIXED_HEADER.unpack(fixed)
            if magic != MAGIC or version != VERSION or dtype != DTYPE_F32LE:
                raise CacheCorrupt(f"{self.path.name}: bad magic/version/dtype")
            cid = self._read_prefixed(fh, "<B")
            whash = self._read_prefixed(fh, "<B")
            did = self._read_prefixed(fh, "<H")
            if (cid, whash, did) != (self.critic_id, self.weights_hash, self.dataset_id):
                raise CacheCorrupt(
                    f"{self.path.name}: header identity does not match file name"
                )
            self.dim = dim
            self.count = count
            self._count_offset = _FIXED_HEADER.size - 8
            self._data_start = fh.tell()
            self._scan_records(fh)
        self._write_fh = open(self.path, "r+b")
        self._write_fh.seek(0, os.SEEK_END)

    @staticmethod
    def _read_prefixed(fh, fmt: str) -> str:
        size = struct.Struct(fmt)
        raw = fh.read(size.size)
        if len(raw) < size.size:
            raise CacheCorrupt("truncated length prefix")
        (n,) = size.unpack(raw)
        data = fh.read(n)
        if len(data) < n:
            raise CacheCorrupt("truncated string field")
        return data.decode("utf-8")

    def _scan_records(self, fh) -> None:
        vec_bytes = self.dim * 4
        for _ in range(self.count):
            offset = fh.tell()
            raw = fh.read(2)
            if len(raw) < 2:
                raise CacheCorrupt(f"{self.path.name}: record count exceeds file size")
            (id_len,) = struct.unpack("<H", raw)
            sample_id = fh.read(id_len)
            if len(sample_id) < id_len:
                raise CacheCorrupt(f"{self.path.name}: truncated record id")
            fh.seek(vec_bytes + 4, os.SEEK_CUR)
            self._index[sample_id.decode("utf-8")] = offset
        if fh.tell() > os.fstat(fh.fileno()).st_size:
            raise CacheCorrupt(f"{self.path.name}: truncated final record")

    # -- operations ----------------------------------------------------

    def put(self, sample_id: str, vector: np.ndarray) -> None:
        vec = np.ascontiguousarray(vector, dtype=np.float32)
        if vec.ndim != 1 or vec.shape[0] != self.dim:
            raise DimensionError(
                f"vector of length {vec.size} does not match dim {self.dim} "
                f"for {self.critic_id}"
            )
        sid = sample_id.encode("utf-8")
        payload = sid + vec.tobytes()
        record = struct.pack("<H", len(sid)) + payload + struct.pack("<I", zlib.crc32(payload))
        with self._lock:
            offset = self._write_fh.tell()
            self._write_fh.write(record)
            self._write_fh.flush()
            self.count += 1
            self._write_fh.seek(self._count_offset)
            self._write_fh.write(struct.pack("<Q", self.count))
            self._write_fh.seek(0, os.SEEK_END)
            self._write_fh.flush()
            self._index[sample_id] = offset

    def get(self, sample_id: str) -> np.ndarray | None:
        with self._lock:
            offset = self._index.get(sample_id)
        if offset is None:
            return None
        sid = sample_id.encode("utf-8")
        length = 2 + len(sid) + self.dim * 4 + 4
        raw = os.pread(self._read_fd, length, offset)
        if len(raw) < length:
            raise CacheCorrupt(f"{self.path.name}: truncated record for {sample_id!r}")
        (id_len,) = struct.unpack_from("<H", raw, 0)
        payload = raw[2 : 2 + id_len + self.dim * 4]
        (crc,) = struct.unpack_from("<I", raw, 2 + id_len + self.dim * 4)
        if id_len != len(sid) or payload[:id_len] != sid or zlib.crc32(payload) != crc:
            raise CacheCorrupt(f"{self.path.name}: checksum failure for {sample_id!r}")
        return np.frombuffer(payload[id_len:], dtype="<f4").copy()

    def __contains__(self, sample_id: str) -> bool:
        with self._lock:
            return sample_id in self._index

    def close(self) -> None:
        self._write_fh.close()
        os.close(self._read_fd)


class CacheStore:
    """Directory of cache segments, one per (critic, dataset, weights)."""

    def __init__(self, root: Path | str, dims=None):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.dims = dict(dims) if dims else {}
        self._files: dict[tuple, _CacheFile] = {}
        self._lock = threading.Lock()

    def _segment(self, key: FeatureCacheKey, create_dim: int | None = None) -> _CacheFile | None:
        ident = (key.critic_id, key.dataset_id, key.weights_hash)
        with self._lock:
            seg = self._files.get(ident)
            if seg is not None:
                return seg
            path = self.root / f"{key.critic_id}.{key.dataset_id}.{key.weights_hash}.feat"
            if not path.exists() and create_dim is None:
                return None
            seg = _CacheFile(
                path, key.critic_id, key.weights_hash, key.dataset_id,
                dim=create_dim if not path.exists() else None,
            )
            self._files[ident] = seg
            return seg

    def put(self, key: FeatureCacheKey, vector: np.ndarray) -> None:
        vec = np.ascontiguousarray(vector, dtype=np.float32)
        expected = self.dims.get(key.critic_id)
        if expected is not None and vec.shape != (expected,):
            raise DimensionError(
                f"vector of length {vec.size} does not match table dim {expected} "
                f"for {key.critic_id}"
            )
        seg = self._segment(key, create_dim=int(vec.shape[0]))
        seg.put(key.sample_id, vec)

    def get(self, key: FeatureCacheKey) -> np.ndarray | None:
        seg = self._segment(key)
        if seg is None:
            return None
        return seg.get(key.sample_id)

    def __contains__(self, key: FeatureCacheKey) -> bool:
        seg = self._segment(key)
        return seg is not None and key.sample_id in seg

    def close(self) -> None:
        with self._lock:
            for seg in self._files.values():
                seg.close()
            self._files.clear()
