"""Synthetic ground-truth scenes.

A scene holds constant-velocity scatterer trajectories with birth-death,
a constant-velocity user, and the path structure connecting them: every
first-bounce (FB) scatterer carries one single-bounce path (FB == LB)
and pairs with each last-bounce (LB) scatterer of its own cluster for
double-bounce paths. Queries (`ground_truth_paths`, `observe`) are pure
functions of the immutable scene and are safe to run concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from functools import cached_property

import numpy as np

from .constants import SPEED_OF_LIGHT
from .geometry import AngleSet, Vec3, angles_from_displacement, path_distance, wrap_angle

ROLE_FB = "fb"
ROLE_LB = "lb"

LOS_PATH_ID = -1


class ConfigError(ValueError):
    """Invalid scene or run configuration."""


class SceneRangeError(ValueError):
    """Query time outside the scene duration."""


@dataclass(frozen=True)
class ScattererTruth:
    """One scatterer's ground-truth trajectory segment.

    ``position`` anchors the trajectory at ``birth_time``; the scatterer
    moves with constant velocity until ``death_time`` (may be inf).
    """

    id: int
    cluster_id: int
    role: str
    position: Vec3
    velocity: Vec3
    rcs: float
    birth_time: float
    death_time: float

    def __post_init__(self) -> None:
        if self.role not in (ROLE_FB, ROLE_LB):
            raise ConfigError(f"unknown scatterer role {self.role!r}")
        if not self.birth_time < self.death_time:
            raise ConfigError(f"scatterer {self.id}: birth {self.birth_time} must precede death {self.death_time}")
        if not self.rcs > 0.0:
            raise ConfigError(f"scatterer {self.id}: rcs must be positive, got {self.rcs}")

    def alive(self, t: float) -> bool:
        return self.birth_time <= t < self.death_time

    def position_at(self, t: float) -> Vec3:
        return self.position + self.velocity * (t - self.birth_time)


@dataclass(frozen=True)
class PathSkeleton:
    """Static identity of a propagation path; powers/delays are time queries."""

    path_id: int
    fb_id: int
    lb_id: int
    cluster_id: int
    virtual_delay: float

    @property
    def single_bounce(self) -> bool:
        return self.fb_id == self.lb_id


@dataclass(frozen=True)
class PathTruth:
    """Path identity plus its power at one evaluation time."""

    path_id: int
    fb_id: int
    lb_id: int
    cluster_id: int
    virtual_delay: float
    power: float

    def __post_init__(self) -> None:
        if self.power < 0.0 or self.virtual_delay < 0.0:
            raise ConfigError("path power and virtual delay must be nonnegative")


@dataclass(frozen=True)
class PathObservation:
    """One multipath component as seen by the communication receiver.

    ``path_id``/``fb_id``/``lb_id`` carry the data association the
    tracker is given; the LoS observation uses LOS_PATH_ID throughout.
    """

    path_id: int
    fb_id: int
    lb_id: int
    cluster_id: int
    delay: float
    aod: AngleSet
    aoa: AngleSet
    power: float
    kind: str = "nlos"

    @property
    def degenerate(self) -> bool:
        return self.aod.degenerate or self.aoa.degenerate


@dataclass(frozen=True)
class SensingDetection:
    """Echo parameters of one first-bounce scatterer at the ISAC BS."""

    scatterer_id: int
    round_trip_delay: float
    angle: AngleSet
    doppler: float
    gain: float

    def __post_init__(self) -> None:
        if not self.round_trip_delay > 0.0:
            raise ConfigError(f"round-trip delay must be positive, got {self.round_trip_delay}")


@dataclass(frozen=True)
class ObservationFrame:
    """All measurements available at one sampling instant."""

    time: float
    comm_paths: tuple[PathObservation, ...]
    sensing_detections: tuple[SensingDetection, ...]
    los: PathObservation | None = None

    def comm_by_path(self) -> dict[int, PathObservation]:
        return {obs.path_id: obs for obs in self.comm_paths}

    def sensing_by_id(self) -> dict[int, SensingDetection]:
        return {det.scatterer_id: det for det in self.sensing_detections}


@dataclass(frozen=True)
class SceneConfig:
    """Knobs of the synthetic environment generator.

    Scatterer counts are given per role: every cluster gets
    ``fb_per_cluster`` first-bounce and ``lb_per_cluster`` last-bounce
    scatterers (slots). A positive ``birth_death_rate`` gives each
    scatterer an exponential lifetime and replaces it on death with a
    freshly placed one in the same cluster and role.
    """

    n_clusters: int = 3
    fb_per_cluster: int = 2
    lb_per_cluster: int = 2
    region_min: Vec3 = Vec3(-80.0, 20.0, 0.0)
    region_max: Vec3 = Vec3(80.0, 180.0, 30.0)
    speed_min: float = 0.0
    speed_max: float = 1.0
    birth_death_rate: float = 0.0
    rcs_min: float = 1.0
    rcs_max: float = 10.0
    sigma_delay: float = 5e-9
    sigma_angle: float = math.radians(1.0)
    seed: int = 11
    duration: float = 20.0
    carrier_hz: float = 28e9
    pdp_decay: float = 100e-9
    virtual_delay_max: float = 0.0
    bs_position: Vec3 = Vec3(0.0, 0.0, 10.0)
    user_start: Vec3 = Vec3(0.0, 120.0, 1.2)
    user_velocity: Vec3 = Vec3(0.0, 1.0, 0.0)

    def validate(self) -> None:
        if self.n_clusters < 1:
            raise ConfigError("need at least one cluster")
        if self.fb_per_cluster < 1:
            raise ConfigError("need at least one first-bounce scatterer per cluster")
        if self.lb_per_cluster < 0:
            raise ConfigError("lb_per_cluster must be nonnegative")
        for lo, hi, name in (
            (self.region_min.x, self.region_max.x, "x"),
            (self.region_min.y, self.region_max.y, "y"),
            (self.region_min.z, self.region_max.z, "z"),
        ):
            if lo > hi:
                raise ConfigError(f"empty region range on axis {name}: [{lo}, {hi}]")
        if not 0.0 <= self.speed_min <= self.speed_max:
            raise ConfigError(f"empty speed range [{self.speed_min}, {self.speed_max}]")
        if self.birth_death_rate < 0.0:
            raise ConfigError("birth_death_rate must be nonnegative")
        if not 0.0 < self.rcs_min <= self.rcs_max:
            raise ConfigError(f"rcs range must be positive and nonempty, got [{self.rcs_min}, {self.rcs_max}]")
        if self.sigma_delay < 0.0 or self.sigma_angle < 0.0:
            raise ConfigError("noise standard deviations must be nonnegative")
        if self.duration <= 0.0:
            raise ConfigError("duration must be positive")
        if self.carrier_hz <= 0.0:
            raise ConfigError("carrier frequency must be positive")
        if self.pdp_decay <= 0.0:
            raise ConfigError("pdp_decay must be positive")
        if self.virtual_delay_max < 0.0:
            raise ConfigError("virtual_delay_max must be nonnegative")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz


@dataclass(frozen=True)
class SceneTruth:
    """Immutable generated environment: trajectories plus path structure."""

    config: SceneConfig
    scatterers: tuple[ScattererTruth, ...]
    paths: tuple[PathSkeleton, ...]

    @cached_property
    def _by_id(self) -> dict[int, ScattererTruth]:
        return {s.id: s for s in self.scatterers}

    @cached_property
    def _paths_by_id(self) -> dict[int, PathSkeleton]:
        return {p.path_id: p for p in self.paths}

    @property
    def bs_position(self) -> Vec3:
        return self.config.bs_position

    @property
    def duration(self) -> float:
        return self.config.duration

    def scatterer(self, sid: int) -> ScattererTruth:
        return self._by_id[sid]

    def path(self, pid: int) -> PathSkeleton:
        return self._paths_by_id[pid]

    def user_position(self, t: float) -> Vec3:
        return self.config.user_start + self.config.user_velocity * t

    def alive_scatterers(self, t: float, role: str | None = None) -> list[ScattererTruth]:
        return [s for s in self.scatterers if s.alive(t) and (role is None or s.role == role)]

    def check_time(self, t: float) -> None:
        if not 0.0 <= t <= self.duration:
            raise SceneRangeError(f"time {t} outside scene duration [0, {self.duration}]")


def _random_unit_vector(rng: np.random.Generator) -> Vec3:
    v = rng.normal(size=3)
    n = float(np.linalg.norm(v))
    if n < 1e-12:
        return Vec3(1.0, 0.0, 0.0)
    return Vec3(float(v[0]) / n, float(v[1]) / n, float(v[2]) / n)


def _draw_scatterer(
    cfg: SceneConfig,
    rng: np.random.Generator,
    sid: int,
    cluster_id: int,
    role: str,
    birth: float,
) -> ScattererTruth:
    pos = Vec3(
        float(rng.uniform(cfg.region_min.x, cfg.region_max.x)),
        float(rng.uniform(cfg.region_min.y, cfg.region_max.y)),
        float(rng.uniform(cfg.region_min.z, cfg.region_max.z)),
    )
    speed = float(rng.uniform(cfg.speed_min, cfg.speed_max))
    vel = _random_unit_vector(rng) * speed
    rcs = float(rng.uniform(cfg.rcs_min, cfg.rcs_max))
    if cfg.birth_death_rate > 0.0:
        death = birth + float(rng.exponential(1.0 / cfg.birth_death_rate))
    else:
        death = math.inf
    return ScattererTruth(sid, cluster_id, role, pos, vel, rcs, birth, death)


def generate_scene(cfg: SceneConfig) -> SceneTruth:
    """Generate a scene; deterministic for a fixed config (seed included).

    Each cluster keeps ``fb_per_cluster + lb_per_cluster`` slots occupied:
    a slot's scatterer lives an exponential lifetime (infinite when the
    birth-death rate is 0) and is replaced on death by a new scatterer in
    the same cluster and role.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)

    scatterers: list[ScattererTruth] = []
    next_id = 0
    for cluster_id in range(cfg.n_clusters):
        for role, count in ((ROLE_FB, cfg.fb_per_cluster), (ROLE_LB, cfg.lb_per_cluster)):
            for _slot in range(count):
                birth = 0.0
                while birth < cfg.duration:
                    s = _draw_scatterer(cfg, rng, next_id, cluster_id, role, birth)
                    scatterers.append(s)
                    next_id += 1
                    birth = s.death_time

    pairs: list[tuple[int, int, int]] = []
    for cluster_id in range(cfg.n_clusters):
        members = [s for s in scatterers if s.cluster_id == cluster_id]
        fbs = sorted((s for s in members if s.role == ROLE_FB), key=lambda s: s.id)
        lbs = sorted((s for s in members if s.role == ROLE_LB), key=lambda s: s.id)
        for fb in fbs:
            pairs.append((fb.id, fb.id, cluster_id))
            for lb in lbs:
                # skip pairs whose lifetimes never overlap
                if fb.birth_time < lb.death_time and lb.birth_time < fb.death_time:
                    pairs.append((fb.id, lb.id, cluster_id))
    pairs.sort(key=lambda p: (p[2], p[0], p[1]))
    # single-bounce paths have no in-between propagation to stand in for
    paths = [
        PathSkeleton(
            pid, fb_id, lb_id, cluster_id,
            float(rng.uniform(0.0, cfg.virtual_delay_max))
            if cfg.virtual_delay_max > 0.0 and fb_id != lb_id
            else 0.0,
        )
        for pid, (fb_id, lb_id, cluster_id) in enumerate(pairs)
    ]

    return SceneTruth(cfg, tuple(scatterers), tuple(paths))


def path_delay(scene: SceneTruth, skeleton: PathSkeleton, t: float) -> float:
    """Geometric delay plus virtual delay of one path at time ``t``."""
    fb = scene.scatterer(skeleton.fb_id).position_at(t)
    lb = scene.scatterer(skeleton.lb_id).position_at(t)
    dist = path_distance(scene.bs_position, fb, lb, scene.user_position(t))
    return dist / SPEED_OF_LIGHT + skeleton.virtual_delay


def ground_truth_paths(scene: SceneTruth, t: float) -> list[PathTruth]:
    """Alive paths at ``t`` with powers from the exponential delay profile.

    Powers follow exp(-delay / pdp_decay) and are normalized to sum to 1
    over the frame, which makes the Rician LoS/NLoS power split exact.
    """
    scene.check_time(t)
    alive = [
        p for p in scene.paths
        if scene.scatterer(p.fb_id).alive(t) and scene.scatterer(p.lb_id).alive(t)
    ]
    if not alive:
        return []
    delays = np.array([path_delay(scene, p, t) for p in alive])
    raw = np.exp(-delays / scene.config.pdp_decay)
    powers = raw / raw.sum()
    return [
        PathTruth(p.path_id, p.fb_id, p.lb_id, p.cluster_id, p.virtual_delay, float(w))
        for p, w in zip(alive, powers)
    ]


def _noisy_angles(a: AngleSet, sigma: float, rng: np.random.Generator) -> AngleSet:
    az = wrap_angle(a.azimuth + float(rng.normal(0.0, sigma)))
    el = a.elevation + float(rng.normal(0.0, sigma))
    return AngleSet(az, el, degenerate=a.degenerate)


def observe(
    scene: SceneTruth,
    t: float,
    noise: tuple[float, float],
    rng: np.random.Generator,
) -> ObservationFrame:
    """Noisy measurement frame at time ``t``.

    Communication observations carry the true per-path delay, departure
    and arrival angles, and power, with zero-mean Gaussian noise of std
    ``noise = (sigma_delay, sigma_angle)`` added to delay and angles.
    Sensing detections cover every alive first-bounce scatterer with the
    echo round-trip delay (noisy), direction at the BS (noisy), Doppler
    and gain (exact). A LoS observation between BS and user is always
    present (the scene models no occlusion).
    """
    sigma_delay, sigma_angle = noise
    if sigma_delay < 0.0 or sigma_angle < 0.0:
        raise ConfigError("noise standard deviations must be nonnegative")
    scene.check_time(t)

    bs = scene.bs_position
    user = scene.user_position(t)
    lam = scene.config.wavelength

    comm: list[PathObservation] = []
    for p in ground_truth_paths(scene, t):
        fb = scene.scatterer(p.fb_id).position_at(t)
        lb = scene.scatterer(p.lb_id).position_at(t)
        delay = path_distance(bs, fb, lb, user) / SPEED_OF_LIGHT + p.virtual_delay
        aod = angles_from_displacement(fb - bs)
        aoa = angles_from_displacement(lb - user)
        comm.append(
            PathObservation(
                p.path_id,
                p.fb_id,
                p.lb_id,
                p.cluster_id,
                delay + float(rng.normal(0.0, sigma_delay)),
                _noisy_angles(aod, sigma_angle, rng),
                _noisy_angles(aoa, sigma_angle, rng),
                p.power,
            )
        )

    los_delay = (user - bs).norm() / SPEED_OF_LIGHT
    los = PathObservation(
        LOS_PATH_ID,
        LOS_PATH_ID,
        LOS_PATH_ID,
        LOS_PATH_ID,
        los_delay + float(rng.normal(0.0, sigma_delay)),
        _noisy_angles(angles_from_displacement(user - bs), sigma_angle, rng),
        _noisy_angles(angles_from_displacement(bs - user), sigma_angle, rng),
        1.0,
        kind="los",
    )

    detections: list[SensingDetection] = []
    for s in scene.alive_scatterers(t, role=ROLE_FB):
        pos = s.position_at(t)
        d = (pos - bs).norm()
        u = (pos - bs) * (1.0 / d)
        closing_speed = -s.velocity.dot(u)  # receding gives negative Doppler
        detections.append(
            SensingDetection(
                s.id,
                2.0 * d / SPEED_OF_LIGHT + float(rng.normal(0.0, sigma_delay)),
                _noisy_angles(angles_from_displacement(pos - bs), sigma_angle, rng),
                2.0 * closing_speed / lam,
                lam**2 * s.rcs / (64.0 * math.pi**3 * d**4),
            )
        )

    return ObservationFrame(t, tuple(comm), tuple(detections), los)


# --- scene file format -------------------------------------------------------
#
# Line-oriented text, one record per line:
#   "# isacsim scene v1"  header
#   "C <field> <values>"  one line per SceneConfig field
#   "S <id> <cluster> <role> <birth> <death> <px> <py> <pz> <vx> <vy> <vz> <rcs>"
#   "P <path_id> <fb_id> <lb_id> <cluster> <virtual_delay>"
# Floats are written with repr() and round-trip exactly.

SCENE_HEADER = "# isacsim scene v1"


def _fmt(value: float) -> str:
    return repr(float(value))


def scene_to_text(scene: SceneTruth) -> str:
    lines = [SCENE_HEADER]
    for f in fields(SceneConfig):
        value = getattr(scene.config, f.name)
        if isinstance(value, Vec3):
            lines.append(f"C {f.name} {_fmt(value.x)} {_fmt(value.y)} {_fmt(value.z)}")
        elif isinstance(value, int):
            lines.append(f"C {f.name} {value}")
        else:
            lines.append(f"C {f.name} {_fmt(value)}")
    for s in scene.scatterers:
        lines.append(
            "S "
            + " ".join(
                [
                    str(s.id),
                    str(s.cluster_id),
                    s.role,
                    _fmt(s.birth_time),
                    _fmt(s.death_time),
                    _fmt(s.position.x),
                    _fmt(s.position.y),
                    _fmt(s.position.z),
                    _fmt(s.velocity.x),
                    _fmt(s.velocity.y),
                    _fmt(s.velocity.z),
                    _fmt(s.rcs),
                ]
            )
        )
    for p in scene.paths:
        lines.append(f"P {p.path_id} {p.fb_id} {p.lb_id} {p.cluster_id} {_fmt(p.virtual_delay)}")
    return "\n".join(lines) + "\n"


def scene_from_text(text: str) -> SceneTruth:
    lines = text.splitlines()
    if not lines or lines[0].strip() != SCENE_HEADER:
        raise ConfigError(f"not a scene file (expected header {SCENE_HEADER!r})")
    cfg_kwargs: dict[str, object] = {}
    field_types = {f.name: f.type for f in fields(SceneConfig)}
    scatterers: list[ScattererTruth] = []
    paths: list[PathSkeleton] = []
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tag, *parts = line.split()
        try:
            if tag == "C":
                name, values = parts[0], parts[1:]
                if name not in field_types:
                    raise ConfigError(f"unknown config field {name!r}")
                if len(values) == 3:
                    cfg_kwargs[name] = Vec3(float(values[0]), float(values[1]), float(values[2]))
                elif "int" in str(field_types[name]):
                    cfg_kwargs[name] = int(values[0])
                else:
                    cfg_kwargs[name] = float(values[0])
            elif tag == "S":
                scatterers.append(
                    ScattererTruth(
                        int(parts[0]),
                        int(parts[1]),
                        parts[2],
                        Vec3(float(parts[5]), float(parts[6]), float(parts[7])),
                        Vec3(float(parts[8]), float(parts[9]), float(parts[10])),
                        float(parts[11]),
                        float(parts[3]),
                        float(parts[4]),
                    )
                )
            elif tag == "P":
                paths.append(
                    PathSkeleton(int(parts[0]), int(parts[1]), int(parts[2]), int(parts[3]), float(parts[4]))
                )
            else:
                raise ConfigError(f"unknown record tag {tag!r}")
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"scene file line {lineno}: {exc}") from exc
    cfg = SceneConfig(**cfg_kwargs)  # type: ignore[arg-type]
    cfg.validate()
    return SceneTruth(cfg, tuple(scatterers), tuple(paths))


def save_scene(scene: SceneTruth, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(scene_to_text(scene))


def load_scene(path: str) -> SceneTruth:
    with open(path, "r", encoding="utf-8") as fh:
        return scene_from_text(fh.read())
