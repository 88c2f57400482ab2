"""Simulation parameter blocks and their JSON (de)serialization.

Every knob the scenario file's `config` section can set lives here, with the
package defaults applied for anything the file leaves out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace


@dataclass(frozen=True)
class CameraConfig:
    horizontal_fov: float = 90.0  # degrees
    raster_width: int = 160
    raster_height: int = 120
    max_view_distance: float = 60.0  # meters
    eye_height: float = 1.6
    wall_color: tuple[float, float, float] = (0.5, 0.5, 0.5)
    floor_color: tuple[float, float, float] = (0.35, 0.35, 0.35)
    background_noise: float = 0.0  # amplitude of deterministic per-pixel noise
    noise_seed: int = 0

    def validate(self) -> None:
        if not 0.0 < self.horizontal_fov < 180.0:
            raise ValueError(f"horizontal_fov must be in (0, 180), got {self.horizontal_fov}")
        if self.raster_width < 16 or self.raster_height < 16:
            raise ValueError("raster dimensions must be at least 16x16")
        if self.max_view_distance <= 0 or self.eye_height <= 0:
            raise ValueError("max_view_distance and eye_height must be positive")


@dataclass(frozen=True)
class FrustumParams:
    gaussian_mu: float = 0.0  # degrees
    gaussian_sigma: float = 7.0  # degrees
    beta_alpha: float = 3.0
    beta_beta: float = 12.0
    vertical_origin: str = "top"  # "top" | "bottom"

    def validate(self) -> None:
        if self.gaussian_sigma <= 0:
            raise ValueError("gaussian_sigma must be positive")
        if self.beta_alpha <= 0 or self.beta_beta <= 0:
            raise ValueError("beta parameters must be positive")
        if self.vertical_origin not in ("top", "bottom"):
            raise ValueError(f"vertical_origin must be 'top' or 'bottom', got {self.vertical_origin!r}")


@dataclass(frozen=True)
class FusionWeights:
    w_sal: float = 1.0
    w_sem: float = 1.0
    w_fru: float = 1.0

    def validate(self) -> None:
        if min(self.w_sal, self.w_sem, self.w_fru) < 0:
            raise ValueError("fusion weights must be nonnegative")
        if self.w_sal + self.w_sem + self.w_fru <= 0:
            raise ValueError("fusion weights must not all be zero")


@dataclass(frozen=True)
class SocialForceParams:
    desired_speed: float = 1.34  # m/s
    relaxation_time: float = 0.5  # s
    ped_strength: float = 2.1  # m^2/s^2
    ped_range: float = 0.3  # m
    wall_strength: float = 10.0  # m^2/s^2
    wall_range: float = 0.2  # m
    anisotropy: float = 0.5  # weight for forces outside the view cone
    fov_half_angle: float = 100.0  # degrees
    step_lookahead: float = 2.0  # s
    body_radius: float = 0.25  # m
    max_speed_factor: float = 1.3  # max_speed = factor * desired_speed

    @property
    def max_speed(self) -> float:
        return self.max_speed_factor * self.desired_speed

    def validate(self) -> None:
        positives = (
            self.desired_speed, self.relaxation_time, self.ped_strength, self.ped_range,
            self.wall_strength, self.wall_range, self.fov_half_angle, self.step_lookahead,
            self.body_radius, self.max_speed_factor,
        )
        if min(positives) <= 0:
            raise ValueError("social force parameters must be positive")
        if not 0.0 <= self.anisotropy <= 1.0:
            raise ValueError("anisotropy must be in [0, 1]")


@dataclass(frozen=True)
class SimulationConfig:
    dt: float = 0.05  # s
    perception_interval: float = 0.5  # s
    leg_timeout: float = 600.0  # s
    replications: int = 1
    master_seed: int = 0
    agents_per_replication: int = 20
    cell_size: float = 0.5  # nav grid resolution, m
    attention_kappa: float | None = None  # None -> 0.01 * raster area
    camera: CameraConfig = field(default_factory=CameraConfig)
    frustum: FrustumParams = field(default_factory=FrustumParams)
    fusion_weights: FusionWeights = field(default_factory=FusionWeights)
    social_force: SocialForceParams = field(default_factory=SocialForceParams)

    @property
    def kappa(self) -> float:
        if self.attention_kappa is not None:
            return self.attention_kappa
        return 0.01 * self.camera.raster_width * self.camera.raster_height

    def validate(self) -> None:
        if self.dt <= 0 or self.dt > 0.1:
            raise ValueError(f"dt must be in (0, 0.1], got {self.dt}")
        if self.perception_interval < self.dt:
            raise ValueError("perception_interval must be >= dt")
        if self.leg_timeout <= 0:
            raise ValueError("leg_timeout must be positive")
        if self.replications < 1 or self.agents_per_replication < 1:
            raise ValueError("replications and agents_per_replication must be >= 1")
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")
        if self.attention_kappa is not None and self.attention_kappa <= 0:
            raise ValueError("attention_kappa must be positive")
        self.camera.validate()
        self.frustum.validate()
        self.fusion_weights.validate()
        self.social_force.validate()


_CAMERA_KEYS = {
    "horizontal_fov", "raster_width", "raster_height", "max_view_distance",
    "eye_height", "wall_color", "floor_color", "background_noise", "noise_seed",
}
_FRUSTUM_KEYS = {"gaussian_mu", "gaussian_sigma", "beta_alpha", "beta_beta", "vertical_origin"}
_WEIGHT_KEYS = {"w_sal", "w_sem", "w_fru"}
_SOCIAL_KEYS = {
    "desired_speed", "relaxation_time", "ped_strength", "ped_range", "wall_strength",
    "wall_range", "anisotropy", "fov_half_angle", "step_lookahead", "body_radius",
    "max_speed_factor",
}
_TOP_KEYS = {
    "dt", "perception_interval", "leg_timeout", "replications", "master_seed",
    "agents_per_replication", "cell_size", "attention_kappa",
    "camera", "frustum", "fusion_weights", "social_force",
}


def _sub_config(cls, data: dict, allowed: set[str], path: str, tuple_keys: tuple[str, ...] = ()):
    unknown = set(data) - allowed
    if unknown:
        raise ValueError(f"{path}: unknown keys {sorted(unknown)}")
    kwargs = dict(data)
    for key in tuple_keys:
        if key in kwargs:
            kwargs[key] = tuple(float(v) for v in kwargs[key])
    return cls(**kwargs)


def config_from_dict(data: dict | None) -> SimulationConfig:
    """Build a SimulationConfig from a scenario `config` mapping, defaulting missing fields."""
    data = dict(data or {})
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ValueError(f"config: unknown keys {sorted(unknown)}")
    camera = _sub_config(CameraConfig, data.pop("camera", {}), _CAMERA_KEYS, "config.camera",
                         tuple_keys=("wall_color", "floor_color"))
    frustum = _sub_config(FrustumParams, data.pop("frustum", {}), _FRUSTUM_KEYS, "config.frustum")
    weights = _sub_config(FusionWeights, data.pop("fusion_weights", {}), _WEIGHT_KEYS, "config.fusion_weights")
    social = _sub_config(SocialForceParams, data.pop("social_force", {}), _SOCIAL_KEYS, "config.social_force")
    cfg = SimulationConfig(camera=camera, frustum=frustum, fusion_weights=weights,
                           social_force=social, **data)
    cfg.validate()
    return cfg


def config_to_dict(cfg: SimulationConfig) -> dict:
    return {
        "dt": cfg.dt,
        "perception_interval": cfg.perception_interval,
        "leg_timeout": cfg.leg_timeout,
        "replications": cfg.replications,
        "master_seed": cfg.master_seed,
        "agents_per_replication": cfg.agents_per_replication,
        "cell_size": cfg.cell_size,
        "attention_kappa": cfg.attention_kappa,
        "camera": {
            "horizontal_fov": cfg.camera.horizontal_fov,
            "raster_width": cfg.camera.raster_width,
            "raster_height": cfg.camera.raster_height,
            "max_view_distance": cfg.camera.max_view_distance,
            "eye_height": cfg.camera.eye_height,
            "wall_color": list(cfg.camera.wall_color),
            "floor_color": list(cfg.camera.floor_color),
            "background_noise": cfg.camera.background_noise,
            "noise_seed": cfg.camera.noise_seed,
        },
        "frustum": {
            "gaussian_mu": cfg.frustum.gaussian_mu,
            "gaussian_sigma": cfg.frustum.gaussian_sigma,
            "beta_alpha": cfg.frustum.beta_alpha,
            "beta_beta": cfg.frustum.beta_beta,
            "vertical_origin": cfg.frustum.vertical_origin,
        },
        "fusion_weights": {
            "w_sal": cfg.fusion_weights.w_sal,
            "w_sem": cfg.fusion_weights.w_sem,
            "w_fru": cfg.fusion_weights.w_fru,
        },
        "social_force": {
            "desired_speed": cfg.social_force.desired_speed,
            "relaxation_time": cfg.social_force.relaxation_time,
            "ped_strength": cfg.social_force.ped_strength,
            "ped_range": cfg.social_force.ped_range,
            "wall_strength": cfg.social_force.wall_strength,
            "wall_range": cfg.social_force.wall_range,
            "anisotropy": cfg.social_force.anisotropy,
            "fov_half_angle": cfg.social_force.fov_half_angle,
            "step_lookahead": cfg.social_force.step_lookahead,
            "body_radius": cfg.social_force.body_radius,
            "max_speed_factor": cfg.social_force.max_speed_factor,
        },
    }


def with_overrides(cfg: SimulationConfig, **kwargs) -> SimulationConfig:
    """Apply non-None CLI overrides on top of a scenario config."""
    updates = {k: v for k, v in kwargs.items() if v is not None}
    out = replace(cfg, **updates) if updates else cfg
    out.validate()
    return out
