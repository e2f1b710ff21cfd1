"""
Binary dataset container.

The bit-exact layout is documented in docs/formats.md. All numbers are
little-endian; records have a fixed stride so the file is read with a single
structured `numpy.frombuffer`.
"""

import json
import struct

import numpy as np

from ..errors import ValidationError
from ..integrate.trajectory import OUTPUT_CHANNELS, TrajectoryRecord
from ..mbd.params import VARIED_PARAMETERS, VehicleTrackParams

MAGIC = b"MBDNODS\x00"
VERSION = 1


def record_dtype(samples, n_params=len(VARIED_PARAMETERS), n_channels=14):
    return np.dtype(
        [
            ("params", "<f8", (n_params,)),
            ("residual", "<f8"),
            ("irregularity", "<f8", (samples, 4)),
            ("x", "<f8", (samples, n_channels)),
            ("v", "<f8", (samples, n_channels)),
            ("a", "<f8", (samples, n_channels)),
        ]
    )


def _pack_names(names):
    chunks = [struct.pack("<I", len(names))]
    for name in names:
        encoded = name.encode()
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
    return b"".join(chunks)


def _unpack_names(data, offset):
    (count,) = struct.unpack_from("<I", data, offset)
    offset += 4
    names = []
    for _ in range(count):
        (size,) = struct.unpack_from("<H", data, offset)
        offset += 2
        names.append(data[offset : offset + size].decode())
        offset += size
    return names, offset


class DatasetContainer:
    """
    Data pairs of one generation run plus the header needed to rebuild their
    systems.

    The first `n_train` records form the training split, the rest the
    validation split.
    """

    def __init__(
        self,
        records,
        n_train,
        dt_out,
        duration,
        seed,
        base_params: dict,
        channels=OUTPUT_CHANNELS,
        param_names=VARIED_PARAMETERS,
    ):
        self.records = records
        if not 0 <= n_train <= len(records):
            raise ValidationError(
                "Attribute 'n_train' has to be within [0, {}], not {}".format(
                    len(records), n_train
                )
            )
        self.n_train = int(n_train)
        self.dt_out = float(dt_out)
        self.duration = float(duration)
        self.seed = int(seed)
        self.base_params = base_params
        self.channels = tuple(channels)
        self.param_names = tuple(param_names)

    @classmethod
    def from_trajectories(
        cls, trajectories, n_train, seed, base_params: VehicleTrackParams
    ):
        if not trajectories:
            raise ValidationError("A dataset needs at least one record")
        first = trajectories[0]
        samples = len(first.times)
        records = np.zeros(len(trajectories), dtype=record_dtype(samples))
        for i, record in enumerate(trajectories):
            records[i]["params"] = record.params
            records[i]["residual"] = record.residual_ratio
            records[i]["irregularity"] = record.irregularity
            records[i]["x"] = record.x
            records[i]["v"] = record.v
            records[i]["a"] = record.a
        return cls(
            records,
            n_train,
            first.dt_out,
            first.duration,
            seed,
            base_params.to_dict(),
        )

    @property
    def count(self) -> int:
        return len(self.records)

    @property
    def samples(self) -> int:
        return self.records.dtype["x"].shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples) * self.dt_out

    @property
    def params(self) -> np.ndarray:
        return self.records["params"]

    @property
    def residual(self) -> np.ndarray:
        return self.records["residual"]

    @property
    def irregularity(self) -> np.ndarray:
        return self.records["irregularity"]

    @property
    def x(self) -> np.ndarray:
        return self.records["x"]

    @property
    def v(self) -> np.ndarray:
        return self.records["v"]

    @property
    def a(self) -> np.ndarray:
        return self.records["a"]

    def base_parameters(self) -> VehicleTrackParams:
        return VehicleTrackParams.from_dict(self.base_params)

    def pair_parameters(self, index) -> VehicleTrackParams:
        return self.base_parameters().with_varied(self.params[index])

    def record(self, index) -> TrajectoryRecord:
        r = self.records[index]
        return TrajectoryRecord(
            times=self.times,
            x=r["x"].copy(),
            v=r["v"].copy(),
            a=r["a"].copy(),
            irregularity=r["irregularity"].copy(),
            params=r["params"].copy(),
            residual_ratio=float(r["residual"]),
        )

    def _subset(self, selection, n_train):
        return DatasetContainer(
            self.records[selection],
            n_train,
            self.dt_out,
            self.duration,
            self.seed,
            self.base_params,
            self.channels,
            self.param_names,
        )

    def train(self) -> "DatasetContainer":
        return self._subset(slice(0, self.n_train), self.n_train)

    def val(self) -> "DatasetContainer":
        return self._subset(slice(self.n_train, None), 0)

    def split(self, name) -> "DatasetContainer":
        if name == "train":
            return self.train()
        if name == "val":
            return self.val()
        if name == "all":
            return self
        raise ValidationError("Unknown split '{}'".format(name))

    def header_bytes(self) -> bytes:
        meta = json.dumps(self.base_params, sort_keys=True).encode()
        return b"".join(
            [
                MAGIC,
                struct.pack(
                    "<IQQQddQ",
                    VERSION,
                    self.count,
                    self.n_train,
                    self.samples,
                    self.dt_out,
                    self.duration,
                    self.seed,
                ),
                _pack_names(self.channels),
                _pack_names(self.param_names),
                struct.pack("<Q", len(meta)),
                meta,
            ]
        )

    def write(self, path):
        with open(path, "wb") as f:
            f.write(self.header_bytes())
            f.write(self.records.tobytes())

    @classmethod
    def read(cls, path) -> "DatasetContainer":
        with open(path, "rb") as f:
            data = f.read()
        if data[:8] != MAGIC:
            raise ValidationError("'{}' is not a dataset container".format(path))
        version, count, n_train, samples, dt_out, duration, seed = struct.unpack_from(
            "<IQQQddQ", data, 8
        )
        if version != VERSION:
            raise ValidationError(
                "Unsupported dataset version {} in '{}'".format(version, path)
            )
        offset = 8 + struct.calcsize("<IQQQddQ")
        channels, offset = _unpack_names(data, offset)
        param_names, offset = _unpack_names(data, offset)
        (meta_len,) = struct.unpack_from("<Q", data, offset)
        offset += 8
        base_params = json.loads(data[offset : offset + meta_len].decode())
        offset += meta_len
        dtype = record_dtype(samples, len(param_names), len(channels))
        if len(data) - offset != count * dtype.itemsize:
            raise ValidationError(
                "Dataset '{}' is truncated: {} bytes of records, {} expected".format(
                    path, len(data) - offset, count * dtype.itemsize
                )
            )
        records = np.frombuffer(data, dtype=dtype, count=count, offset=offset).copy()
        return cls(
            records,
            n_train,
            dt_out,
            duration,
            seed,
            base_params,
            channels,
            param_names,
        )


def sidecar_path(path) -> str:
    return str(path) + ".stats"
