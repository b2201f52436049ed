"""Named float32 parameter store and its binary file format.

File layout, little-endian::

    b"EBWT"
    u32 version (= 1)
    u32 entry count
    per entry:  u16 name length, UTF-8 name, u8 rank, u32 extents[rank]
    f32 payloads of all entries, in declaration order
    u32 CRC32 of every byte after the magic and before the CRC
"""
import math
import struct
import zlib
from collections.abc import Mapping

import numpy as np

from ..exceptions import ChecksumError, WeightsFormatError

MAGIC = b"EBWT"
VERSION = 1


class WeightStore(Mapping):
    """Ordered, read-only mapping ``name -> float32 ndarray``."""

    def __init__(self, entries=()):
        items = entries.items() if isinstance(entries, Mapping) else entries
        store = {}
        for name, value in items:
            if name in store:
                raise WeightsFormatError(f"duplicate entry {name!r}")
            arr = np.array(value, dtype="<f4", copy=True)
            arr.flags.writeable = False
            store[str(name)] = arr
        self._entries = store

    def __getitem__(self, name):
        try:
            return self._entries[name]
        except KeyError:
            raise WeightsFormatError(f"missing weight entry {name!r}") from None

    def __iter__(self):
        return iter(self._entries)

    def __len__(self):
        return len(self._entries)

    def __repr__(self):
        return f"WeightStore({len(self)} entries, {self.num_parameters()} parameters)"

    def num_parameters(self, prefix=""):
        return sum(int(v.size) for k, v in self._entries.items() if k.startswith(prefix))

    def check_shapes(self, shapes):
        """Raise naming the first entry that is missing or mis-shaped."""
        for name, shape in shapes.items():
            if name not in self._entries:
                raise WeightsFormatError(f"missing weight entry {name!r}")
            if self._entries[name].shape != tuple(shape):
                raise WeightsFormatError(
                    f"weight {name!r} has shape {self._entries[name].shape}, expected {tuple(shape)}"
                )

    def subset(self, prefix):
        return WeightStore((k, v) for k, v in self._entries.items() if k.startswith(prefix))

    def merged(self, other):
        return WeightStore(list(self.items()) + list(other.items()))

    def to_bytes(self):
        body = [struct.pack("<II", VERSION, len(self))]
        for name, arr in self._entries.items():
            raw = name.encode("utf-8")
            if len(raw) > 0xFFFF or arr.ndim > 0xFF:
                raise WeightsFormatError(f"entry {name!r} cannot be encoded")
            body.append(struct.pack("<H", len(raw)) + raw + struct.pack("<B", arr.ndim))
            body.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        for arr in self._entries.values():
            body.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
        body = b"".join(body)
        return MAGIC + body + struct.pack("<I", zlib.crc32(body))

    @classmethod
    def from_bytes(cls, data):
        data = bytes(data)
        if data[:4] != MAGIC:
            raise WeightsFormatError("bad magic: not a weights file")
        pos = 4

        def take(fmt):
            nonlocal pos
            size = struct.calcsize(fmt)
            if pos + size > len(data):
                raise WeightsFormatError("truncated weights file")
            values = struct.unpack_from(fmt, data, pos)
            pos += size
            return values

        version, count = take("<II")
        if version != VERSION:
            raise WeightsFormatError(f"unsupported weights version {version}")
        headers = []
        seen = set()
        for _ in range(count):
            (name_len,) = take("<H")
            if pos + name_len > len(data):
                raise WeightsFormatError("truncated weights file")
            try:
                name = data[pos:pos + name_len].decode("utf-8")
            except UnicodeDecodeError as exc:
                raise WeightsFormatError(f"entry name is not UTF-8: {exc}") from None
            pos += name_len
            (rank,) = take("<B")
            shape = take(f"<{rank}I")
            if name in seen:
                raise WeightsFormatError(f"duplicate entry {name!r}")
            seen.add(name)
            headers.append((name, shape))

        payload = sum(4 * math.prod(shape) for _, shape in headers)
        expected = pos + payload + 4
        if len(data) < expected:
            raise WeightsFormatError("truncated weights file")
        if len(data) > expected:
            raise WeightsFormatError(f"{len(data) - expected} unexpected trailing bytes")
        (crc,) = struct.unpack_from("<I", data, len(data) - 4)
        if zlib.crc32(data[4:-4]) != crc:
            raise ChecksumError("CRC32 mismatch: weights file is corrupt")

        entries = []
        for name, shape in headers:
            n = math.prod(shape)
            arr = np.frombuffer(data, dtype="<f4", count=n, offset=pos).reshape(shape)
            pos += 4 * n
            entries.append((name, arr))
        return cls(entries)

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())


def save_weights(store, path):
    store.save(path)


def load_weights(path):
    with open(path, "rb") as fh:
        return WeightStore.from_bytes(fh.read())


def _fan_in(name, shape):
    if len(shape) < 2:
        return None
    # conv (C_out, C_in/g, K) and transposed conv (C_in, C_out/g, K) alike
    return shape[1] * int(np.prod(shape[2:]))


def init_weights(shapes, seed=0):
    """Seeded fan-in uniform initialization.

    Entries are drawn in declaration order from ``numpy.random.default_rng(seed)``;
    a weight with fan-in ``f`` is uniform on ``[-1/sqrt(f), 1/sqrt(f)]`` and
    its bias uses the fan-in of the matching ``.weight``.
    """
    rng = np.random.default_rng(seed)
    entries = []
    for name, shape in shapes.items():
        if name.endswith(".bias"):
            fan = _fan_in(name, shapes.get(name[:-5] + ".weight", ())) or 1
        else:
            fan = _fan_in(name, shape) or 1
        bound = 1.0 / math.sqrt(fan)
        entries.append((name, rng.uniform(-bound, bound, size=shape)))
    return WeightStore(entries)


def zero_weights(shapes):
    return WeightStore((name, np.zeros(shape)) for name, shape in shapes.items())
