"""Flat key=value configuration for runs and scans.

Units are encoded in the key names; noise strengths are amplitude spectral
densities at 1 Hz in microgauss/sqrt(Hz) (PSD inputs are not accepted).
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

from .protocol import PROTOCOL_INTERLEAVED, PROTOCOL_MONITOR

PROTOCOLS = (PROTOCOL_MONITOR, PROTOCOL_INTERLEAVED)
FIDELITY_CONVENTIONS = ("paper", "half-angle")
CAL_ENCODINGS = ("monitor", "data")

UG = 1e-6  # microgauss -> gauss


class ConfigError(ValueError):
    """Invalid or unparseable configuration; message names the offending key."""


@dataclass
class RunConfig:
    protocol: str = PROTOCOL_MONITOR
    noise_asd_uG_sqrtHz: float = 18.0
    cutoff_hz: float = 2.4
    sample_rate_hz: float = 1000.0
    data_probe_s: float = 14.4e-3
    prep_s: float = 100e-6
    spam_s: float = 1.1e-3
    alpha: float = 0.05
    spam_fidelity: float = 0.99
    fidelity_convention: str = "paper"
    interleaved_cal_encoding: str = "monitor"
    duration_s: float = 45.0
    repeats: int = 10
    seed: int = 0

    def validate(self) -> None:
        positive = (
            "cutoff_hz",
            "sample_rate_hz",
            "data_probe_s",
            "prep_s",
            "spam_s",
            "alpha",
            "duration_s",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name}: must be positive, got {getattr(self, name)}")
        if self.noise_asd_uG_sqrtHz < 0:
            raise ConfigError(f"noise_asd_uG_sqrtHz: must be >= 0, got {self.noise_asd_uG_sqrtHz}")
        if not self.cutoff_hz < self.sample_rate_hz / 2:
            raise ConfigError("cutoff_hz: must be below Nyquist (sample_rate_hz / 2)")
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol: must be one of {PROTOCOLS}, got {self.protocol!r}")
        if self.fidelity_convention not in FIDELITY_CONVENTIONS:
            raise ConfigError(
                f"fidelity_convention: must be one of {FIDELITY_CONVENTIONS}, "
                f"got {self.fidelity_convention!r}"
            )
        if self.interleaved_cal_encoding not in CAL_ENCODINGS:
            raise ConfigError(
                f"interleaved_cal_encoding: must be one of {CAL_ENCODINGS}, "
                f"got {self.interleaved_cal_encoding!r}"
            )
        if not 0.5 <= self.spam_fidelity <= 1.0:
            raise ConfigError(f"spam_fidelity: must lie in [0.5, 1], got {self.spam_fidelity}")
        if self.repeats < 1:
            raise ConfigError(f"repeats: must be >= 1, got {self.repeats}")
        if self.seed < 0:
            raise ConfigError(f"seed: must be >= 0, got {self.seed}")

    @property
    def noise_asd_gauss(self) -> float:
        return self.noise_asd_uG_sqrtHz * UG


# Decade steps in noise power from 3.2 to 3.2e5 (uG)^2/Hz, quoted as ASDs.
DEFAULT_SCAN_ASDS_UG = [1.79, 5.66, 17.9, 56.6, 179.0]


@dataclass
class ScanConfig:
    base: RunConfig = field(default_factory=RunConfig)
    probe_times_s: list[float] = field(
        default_factory=lambda: [5e-3, 8e-3, 13e-3, 21e-3, 34e-3, 55e-3, 90e-3]
    )
    noise_asds_uG_sqrtHz: list[float] = field(
        default_factory=lambda: list(DEFAULT_SCAN_ASDS_UG)
    )

    def validate(self) -> None:
        self.base.validate()
        for name in ("probe_times_s", "noise_asds_uG_sqrtHz"):
            seq = getattr(self, name)
            if not seq:
                raise ConfigError(f"{name}: must be non-empty")
            if any(b <= a for a, b in zip(seq, seq[1:])):
                raise ConfigError(f"{name}: must be strictly increasing")
            if any(v <= 0 for v in seq):
                raise ConfigError(f"{name}: values must be positive")


_RUN_FIELDS = {f.name: f.type for f in fields(RunConfig)}
_LIST_KEYS = ("probe_times_s", "noise_asds_uG_sqrtHz")


def _parse_scalar(key: str, raw: str):
    kind = _RUN_FIELDS[key]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from exc


def parse_config(text: str) -> ScanConfig:
    """Parse flat ``key = value`` lines; '#' starts a comment."""
    run_kwargs = {}
    list_kwargs = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key in _LIST_KEYS:
            try:
                list_kwargs[key] = [float(v) for v in raw.split(",") if v.strip()]
            except ValueError as exc:
                raise ConfigError(f"{key}: cannot parse list {raw!r}") from exc
        elif key in _RUN_FIELDS:
            run_kwargs[key] = _parse_scalar(key, raw)
        else:
            raise ConfigError(f"unknown key: {key}")
    return ScanConfig(base=RunConfig(**run_kwargs), **list_kwargs)


def load_config(path) -> ScanConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def serialize_config(cfg: ScanConfig) -> str:
    lines = []
    for f in fields(RunConfig):
        lines.append(f"{f.name} = {getattr(cfg.base, f.name)}")
    for key in _LIST_KEYS:
        values = getattr(cfg, key)
        lines.append(f"{key} = {','.join(repr(v) for v in values)}")
    return "\n".join(lines) + "\n"


def apply_overrides(cfg: ScanConfig, overrides: dict[str, str]) -> ScanConfig:
    """Apply 'key=value' style overrides (strings) on top of a parsed config."""
    base = cfg.base
    for key, raw in overrides.items():
        if key in _LIST_KEYS:
            try:
                values = [float(v) for v in raw.split(",") if v.strip()]
            except ValueError as exc:
                raise ConfigError(f"{key}: cannot parse list {raw!r}") from exc
            cfg = replace(cfg, **{key: values})
        elif key in _RUN_FIELDS:
            base = replace(base, **{key: _parse_scalar(key, raw)})
        else:
            raise ConfigError(f"unknown key: {key}")
    return replace(cfg, base=base)
