"""Gateway configuration: defaults, YAML config file, CLI overlay.

The config file is a YAML mapping mirroring GatewayConfig; nested sections
(fusion, pedals, geometry, head, sim) take the corresponding dataclass
fields. Unknown keys fail startup loudly rather than being ignored.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml

from ..errors import StartupError
from ..fusion import FusionConfig
from ..head import HeadControlConfig
from ..pedals import PedalConfig
from ..sim import BaseGeometry, SimConfig

MODE_SIM = "sim"
MODE_HARDWARE = "hardware"

SOURCE_NONE = "none"
SOURCE_SIMULATED = "simulated"
SERIAL_PREFIX = "serial:"


@dataclass
class GatewayConfig:
    host: str = "0.0.0.0"
    port: int = 8443
    tls_cert: str | None = None
    tls_key: str | None = None
    self_signed: bool = False          # dev convenience; generates ephemeral TLS material
    mode: str = MODE_SIM
    pedal_source: str = SOURCE_NONE    # none | simulated | serial:<path>
    left_leader_source: str = SOURCE_NONE
    right_leader_source: str = SOURCE_NONE
    pedal_script: str | None = None    # JSON event script for the simulated pedal source
    record_dir: str | None = None
    client_dir: str | None = None      # built operator client assets served at /
    keyboard: bool = False             # enable the stdin step-control baseline
    video_fps: float = 20.0
    frame_width: int = 540             # synthetic camera; portrait by default so the
    frame_height: int = 960            # rotation path is exercised end to end
    jpeg_quality: int = 80
    fusion: FusionConfig = field(default_factory=FusionConfig)
    pedals: PedalConfig = field(default_factory=PedalConfig)
    geometry: BaseGeometry = field(default_factory=BaseGeometry)
    head: HeadControlConfig = field(default_factory=HeadControlConfig)
    head_speed_dps: float = 180.0
    arm_speed_dps: float = 240.0

    def sim_config(self) -> SimConfig:
        return SimConfig(
            geometry=self.geometry,
            head_speed_dps=self.head_speed_dps,
            arm_speed_dps=self.arm_speed_dps,
        )

    def validate_for_serving(self) -> None:
        """Checks that only matter when binding a real listener."""
        if self.mode not in (MODE_SIM, MODE_HARDWARE):
            raise StartupError(f"unknown mode {self.mode!r}")
        if not self.self_signed:
            if not self.tls_cert or not self.tls_key:
                raise StartupError(
                    "TLS certificate and key are required (browsers only expose "
                    "device orientation in secure contexts); pass --tls-cert/--tls-key "
                    "or --self-signed for development"
                )
            for p in (self.tls_cert, self.tls_key):
                if not Path(p).is_file():
                    raise StartupError(f"TLS file not found: {p}")
        for name in ("pedal_source", "left_leader_source", "right_leader_source"):
            value = getattr(self, name)
            if value not in (SOURCE_NONE, SOURCE_SIMULATED) and not value.startswith(SERIAL_PREFIX):
                raise StartupError(f"{name} must be none, simulated, or serial:<path>, got {value!r}")
            if value.startswith(SERIAL_PREFIX):
                raise StartupError(
                    f"{name}={value!r}: serial drivers are an integration seam, not "
                    "shipped here; use the simulated source or mode=sim"
                )


def _build_section(cls, data: dict, section: str):
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise StartupError(f"unknown {section} config keys: {sorted(unknown)}")
    converted = dict(data)
    for f in fields(cls):
        if f.name in converted and isinstance(converted[f.name], list):
            converted[f.name] = tuple(
                tuple(x) if isinstance(x, list) else x for x in converted[f.name]
            )
    try:
        return cls(**converted)
    except (TypeError, ValueError) as exc:
        raise StartupError(f"bad {section} config: {exc}") from exc


_SECTIONS = {
    "fusion": FusionConfig,
    "pedals": PedalConfig,
    "geometry": BaseGeometry,
    "head": HeadControlConfig,
}


def load_config(path: str | Path) -> GatewayConfig:
    """Load a YAML config file into a GatewayConfig."""
    try:
        with Path(path).open("r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise StartupError(f"cannot read config file {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise StartupError(f"config file {path} is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise StartupError("config file must contain a mapping")
    return config_from_dict(data)


def config_from_dict(data: dict) -> GatewayConfig:
    top_fields = {f.name for f in fields(GatewayConfig)}
    unknown = set(data) - top_fields
    if unknown:
        raise StartupError(f"unknown config keys: {sorted(unknown)}")

    kwargs = {}
    for key, value in data.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise StartupError(f"config section {key!r} must be a mapping")
            kwargs[key] = _build_section(_SECTIONS[key], value, key)
        else:
            kwargs[key] = value
    try:
        return GatewayConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise StartupError(f"bad config: {exc}") from exc


def apply_overrides(cfg: GatewayConfig, **overrides) -> GatewayConfig:
    """Overlay non-None CLI values onto a loaded config."""
    updates = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **updates)
