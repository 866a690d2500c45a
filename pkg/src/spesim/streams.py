"""Photon timestamp streams and their on-disk formats.

Timestamps are integer picoseconds (int64) so streams are portable and
exactly comparable across runs and platforms.  The binary PTSM format is
little-endian:

    magic    4 bytes  "PTSM"
    version  u16      currently 1
    channel  u8
    reserved u8       zero
    duration u64      acquisition span in ps
    count    u64      number of timestamps
    data     count x u64 timestamps, sorted strictly increasing

A plain one-timestamp-per-line CSV export is provided for debugging.
"""

import struct
from dataclasses import dataclass

import numpy as np

__all__ = ["PhotonStream", "write_ptsm", "read_ptsm", "write_csv", "read_csv"]

_MAGIC = b"PTSM"
_VERSION = 1
_HEADER = struct.Struct("<4sHBBQQ")


@dataclass(frozen=True)
class PhotonStream:
    """Channel-tagged, sorted photon arrival record.

    timestamps are strictly increasing int64 picoseconds, all in
    [0, duration).
    """

    channel: int
    timestamps: np.ndarray
    duration: int

    def __post_init__(self):
        ts = np.ascontiguousarray(self.timestamps, dtype=np.int64)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "duration", int(self.duration))
        if not 0 <= self.channel <= 255:
            raise ValueError("channel must fit in a u8")
        if self.duration <= 0:
            raise ValueError("duration must be > 0 ps")
        if ts.size:
            if ts[0] < 0 or ts[-1] >= self.duration:
                raise ValueError("timestamps must lie in [0, duration)")
            if ts.size > 1 and not np.all(np.diff(ts) > 0):
                raise ValueError("timestamps must be strictly increasing")

    def __len__(self):
        return int(self.timestamps.size)

    @property
    def rate(self):
        """Mean count rate in counts/s."""
        return self.timestamps.size / (self.duration * 1e-12)


def write_ptsm(stream: PhotonStream, path):
    """Write a stream to the binary PTSM format."""
    with open(path, "wb") as f:
        f.write(_HEADER.pack(_MAGIC, _VERSION, stream.channel, 0,
                             stream.duration, stream.timestamps.size))
        f.write(np.ascontiguousarray(stream.timestamps, dtype="<u8").tobytes())


def read_ptsm(path) -> PhotonStream:
    """Read a binary PTSM stream, validating header and ordering."""
    with open(path, "rb") as f:
        header = f.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise ValueError(f"{path}: truncated PTSM header")
        magic, version, channel, _reserved, duration, count = _HEADER.unpack(header)
        if magic != _MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported PTSM version {version}")
        data = f.read(8 * count)
    if len(data) != 8 * count:
        raise ValueError(f"{path}: expected {count} timestamps, file truncated")
    ts = np.frombuffer(data, dtype="<u8").astype(np.int64)
    return PhotonStream(channel=channel, timestamps=ts, duration=duration)


def write_csv(stream: PhotonStream, path):
    """Debug export: one integer timestamp (ps) per line."""
    with open(path, "w") as f:
        for t in stream.timestamps:
            f.write(f"{int(t)}\n")


def read_csv(path, channel=0, duration=None) -> PhotonStream:
    """Read a one-timestamp-per-line CSV written by :func:`write_csv`.

    duration defaults to last timestamp + 1 when not given.
    """
    ts = np.loadtxt(path, dtype=np.int64, ndmin=1) if _nonempty(path) else \
        np.empty(0, dtype=np.int64)
    if duration is None:
        duration = int(ts[-1]) + 1 if ts.size else 1
    return PhotonStream(channel=channel, timestamps=ts, duration=duration)


def _nonempty(path):
    with open(path) as f:
        return bool(f.read(1))
