"""Simulation configuration and its JSON round trip."""

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import List, Optional

from .detectors import DetectorSpec
from .errors import ConfigInvalid
from .qam import SUPPORTED_ORDERS

__all__ = ["SimConfig", "load_config", "MODULATIONS"]

MODULATIONS = {"qpsk": 4, "qam4": 4, "qam16": 16, "qam64": 64}


def _default_snr():
    return [float(x) for x in range(0, 25, 2)]


@dataclass
class SimConfig:
    """Everything needed to reproduce a Monte-Carlo run bit for bit.

    SNR is the per-user transmit SNR ``1 / eta2`` (unit-energy symbols).
    ``snr_db`` may be ``None`` for an iteration search, which then brackets
    the reference crossing automatically.
    """

    n: int = 128
    k: int = 8
    zeta: float = 0.0
    snr_db: Optional[List[float]] = field(default_factory=_default_snr)
    modulation: str = "qam64"
    detectors: List[str] = field(default_factory=lambda: ["exact", "dns:4", "tma:3"])
    trials: int = 500
    master_seed: int = 0
    min_bit_errors: int = 200
    max_bits: int = 10_000_000
    frames_per_realization: int = 1
    block_size: int = 256
    phase_mode: str = "zero"
    target_ber: float = 1e-3
    gap_db: float = 0.3
    max_iterations: int = 64
    output_path: str = "results"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.trials < 1:
            raise ConfigInvalid("trials must be >= 1")
        if self.n < 1 or self.k < 1:
            raise ConfigInvalid("N and K must be >= 1")
        if self.n < self.k:
            raise ConfigInvalid(f"need N >= K, got N={self.n}, K={self.k}")
        if not 0.0 <= self.zeta <= 1.0:
            raise ConfigInvalid("zeta must lie in [0, 1]")
        if self.snr_db is not None:
            if len(self.snr_db) == 0:
                raise ConfigInvalid("snr_db sweep is empty")
            self.snr_db = [float(x) for x in self.snr_db]
        if self.modulation.lower() not in MODULATIONS:
            raise ConfigInvalid(f"unknown modulation {self.modulation!r}")
        self.modulation = self.modulation.lower()
        for name in ("min_bit_errors", "max_bits", "frames_per_realization", "block_size", "max_iterations"):
            if getattr(self, name) < 1:
                raise ConfigInvalid(f"{name} must be >= 1")
        if self.phase_mode not in ("zero", "random"):
            raise ConfigInvalid(f"unknown phase_mode {self.phase_mode!r}")
        try:
            self.detector_specs
        except ValueError as exc:
            raise ConfigInvalid(str(exc)) from exc

    @property
    def order(self):
        order = MODULATIONS[self.modulation]
        assert order in SUPPORTED_ORDERS
        return order

    @property
    def detector_specs(self):
        return [DetectorSpec.parse(d) for d in self.detectors]

    @property
    def beta(self):
        return self.n / self.k

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigInvalid(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigInvalid(str(exc)) from exc


def load_config(path):
    """Read a config file, or the ``config`` block of a run manifest."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigInvalid("config must be a JSON object")
    if "artifact_version" in data and "config" in data:
        data = data["config"]
    return SimConfig.from_dict(data)
