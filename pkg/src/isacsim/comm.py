"""Bi-static communication channel between the BS and the user.

Taps are synthesized per antenna pair (q, p): one direct tap plus one
tap per alive scatterer path. Delays are exact per-pair geometric times
(spherical wavefront, no plane-wave shortcut); the direct and scattered
components are combined with the Rician amplitude weights sqrt(K/(K+1))
and sqrt(1/(K+1)). Dual polarization enters through a 2x2 random-phase
coupling matrix per path and per-antenna field patterns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .antenna import PlanarArray
from .constants import SPEED_OF_LIGHT
from .geometry import AngleSet, Vec3, angles_from_displacement
from .scene import LOS_PATH_ID, SceneTruth, ground_truth_paths

KIND_LOS = "los"
KIND_NLOS = "nlos"

TWO_PI = 2.0 * math.pi


class CommError(ValueError):
    """Invalid communication-channel input."""


@dataclass(frozen=True)
class PolarizedPattern:
    """Vertical/horizontal field responses of an antenna vs. direction."""

    f_v: Callable[[AngleSet], float]
    f_h: Callable[[AngleSet], float]

    def vector(self, a: AngleSet) -> np.ndarray:
        return np.array([self.f_v(a), self.f_h(a)], dtype=float)


ISOTROPIC_VERTICAL = PolarizedPattern(lambda a: 1.0, lambda a: 0.0)


@dataclass(frozen=True)
class PolarizationDraw:
    """Random polarization coupling of one path.

    Four phases uniform in [0, 2pi), the cross-polarization power ratio
    kappa and the co-polar imbalance mu; drawn once per path and held.
    """

    xi_vv: float
    xi_vh: float
    xi_hv: float
    xi_hh: float
    kappa: float
    mu: float

    def __post_init__(self) -> None:
        if self.kappa <= 0.0:
            raise CommError(f"cross-polarization ratio must be positive, got {self.kappa}")
        if self.mu <= 0.0:
            raise CommError(f"co-polar imbalance must be positive, got {self.mu}")


@dataclass(frozen=True)
class CommParams:
    """Link-level parameters: Rician K plus polarization defaults.

    ``xpr_db`` converts to the linear kappa handed to each path's draw.
    K is held constant over a run.
    """

    k_factor: float = 3.0
    xpr_db: float = 8.0
    copol_imbalance: float = 1.0

    def validate(self) -> None:
        if self.k_factor < 0.0:
            raise CommError(f"Rician K must be nonnegative, got {self.k_factor}")
        if self.copol_imbalance <= 0.0:
            raise CommError(f"co-polar imbalance must be positive, got {self.copol_imbalance}")

    @property
    def xpr_linear(self) -> float:
        return 10.0 ** (self.xpr_db / 10.0)


def draw_polarization_set(
    scene: SceneTruth, params: CommParams, rng: np.random.Generator
) -> dict[int, PolarizationDraw]:
    """Polarization draws keyed by path id, plus the LoS entry.

    The LoS entry comes first, then scene paths in stored order, so the
    draw sequence is reproducible from the generator state.
    """
    params.validate()
    draws: dict[int, PolarizationDraw] = {}
    for pid in [LOS_PATH_ID] + [p.path_id for p in scene.paths]:
        phases = rng.uniform(0.0, TWO_PI, size=4)
        draws[pid] = PolarizationDraw(
            *(float(x) for x in phases), kappa=params.xpr_linear, mu=params.copol_imbalance
        )
    return draws


def polarization_matrix(draw: PolarizationDraw, kind: str) -> np.ndarray:
    """2x2 coupling between (v, h) transmit and receive field components.

    The direct tap keeps only co-polar terms, the horizontal one sign
    flipped. Scattered taps leak across polarizations with powers set by
    kappa and mu; entry magnitudes are 1, sqrt(mu/kappa), sqrt(1/kappa),
    sqrt(mu).
    """
    if kind == KIND_LOS:
        return np.array(
            [
                [np.exp(1j * draw.xi_vv), 0.0],
                [0.0, -np.exp(1j * draw.xi_hh)],
            ],
            dtype=complex,
        )
    if kind == KIND_NLOS:
        return np.array(
            [
                [np.exp(1j * draw.xi_vv), math.sqrt(draw.mu / draw.kappa) * np.exp(1j * draw.xi_vh)],
                [
                    math.sqrt(1.0 / draw.kappa) * np.exp(1j * draw.xi_hv),
                    math.sqrt(draw.mu) * np.exp(1j * draw.xi_hh),
                ],
            ],
            dtype=complex,
        )
    raise CommError(f"unknown tap kind {kind!r}")


@dataclass(frozen=True)
class CommTap:
    """One tap of the impulse response between tx element p and rx element q."""

    q: int
    p: int
    kind: str
    path_id: int
    delay: float
    amplitude: complex

    def __post_init__(self) -> None:
        if not self.delay > 0.0:
            raise CommError(f"tap delay must be positive, got {self.delay}")

    @property
    def power(self) -> float:
        return abs(self.amplitude) ** 2


def los_tap(
    p: int,
    q: int,
    tx: PlanarArray,
    rx: PlanarArray,
    carrier_hz: float,
    draw: PolarizationDraw,
    tx_pattern: PolarizedPattern = ISOTROPIC_VERTICAL,
    rx_pattern: PolarizedPattern = ISOTROPIC_VERTICAL,
) -> CommTap:
    """Unweighted direct tap between tx element ``p`` and rx element ``q``.

    Patterns are evaluated at the boresight angles between the array
    origins; the per-pair element geometry enters via the exact delay and
    its carrier phase.
    """
    if carrier_hz <= 0.0:
        raise CommError(f"carrier frequency must be positive, got {carrier_hz}")
    tx_pos = tx.element_position(p)
    rx_pos = rx.element_position(q)
    dist = tx_pos.distance_to(rx_pos)
    if dist <= 0.0:
        raise CommError(f"coincident antennas: tx {p} and rx {q}")
    aod = angles_from_displacement(rx.origin - tx.origin)
    aoa = angles_from_displacement(tx.origin - rx.origin)
    coupling = complex(
        rx_pattern.vector(aoa) @ polarization_matrix(draw, KIND_LOS) @ tx_pattern.vector(aod)
    )
    delay = dist / SPEED_OF_LIGHT
    amplitude = coupling * np.exp(1j * TWO_PI * carrier_hz * delay)
    return CommTap(q, p, KIND_LOS, LOS_PATH_ID, delay, complex(amplitude))


def nlos_tap(
    p: int,
    q: int,
    tx: PlanarArray,
    rx: PlanarArray,
    fb: Vec3,
    lb: Vec3,
    path_id: int,
    path_power: float,
    virtual_delay: float,
    carrier_hz: float,
    draw: PolarizationDraw,
    tx_pattern: PolarizedPattern = ISOTROPIC_VERTICAL,
    rx_pattern: PolarizedPattern = ISOTROPIC_VERTICAL,
) -> CommTap:
    """Unweighted scattered tap via first bounce ``fb`` and last bounce ``lb``.

    Per-pair distance is |fb - tx_p| + |lb - rx_q|; the bounce-to-bounce
    leg carries no geometric delay and is represented by
    ``virtual_delay``. Departure angles point at the first bounce,
    arrival angles at the last.
    """
    if carrier_hz <= 0.0:
        raise CommError(f"carrier frequency must be positive, got {carrier_hz}")
    if path_power < 0.0 or virtual_delay < 0.0:
        raise CommError("path power and virtual delay must be nonnegative")
    d_tx = tx.element_position(p).distance_to(fb)
    d_rx = rx.element_position(q).distance_to(lb)
    if d_tx <= 0.0 or d_rx <= 0.0:
        raise CommError(f"zero-length leg on path {path_id}")
    aod = angles_from_displacement(fb - tx.origin)
    aoa = angles_from_displacement(lb - rx.origin)
    coupling = complex(
        rx_pattern.vector(aoa) @ polarization_matrix(draw, KIND_NLOS) @ tx_pattern.vector(aod)
    )
    delay = (d_tx + d_rx) / SPEED_OF_LIGHT + virtual_delay
    amplitude = coupling * math.sqrt(path_power) * np.exp(1j * TWO_PI * carrier_hz * delay)
    return CommTap(q, p, KIND_NLOS, path_id, delay, complex(amplitude))


def combine_rician(los: list[CommTap], nlos: list[CommTap], k_factor: float) -> list[CommTap]:
    """Scale amplitudes by the Rician weights and merge, sorted by delay.

    Direct taps get sqrt(K/(K+1)), scattered taps sqrt(1/(K+1)). With
    scattered path powers summing to 1 and unit-magnitude direct
    couplings, the power split per pair is exactly K : 1.
    """
    if k_factor < 0.0:
        raise CommError(f"Rician K must be nonnegative, got {k_factor}")
    w_los = math.sqrt(k_factor / (k_factor + 1.0))
    w_nlos = math.sqrt(1.0 / (k_factor + 1.0))
    out: list[CommTap] = []
    for tap in los:
        if tap.kind != KIND_LOS:
            raise CommError("direct tap list may only hold los taps")
        out.append(CommTap(tap.q, tap.p, tap.kind, tap.path_id, tap.delay, w_los * tap.amplitude))
    for tap in nlos:
        if tap.kind != KIND_NLOS:
            raise CommError("scattered tap list may only hold nlos taps")
        out.append(CommTap(tap.q, tap.p, tap.kind, tap.path_id, tap.delay, w_nlos * tap.amplitude))
    out.sort(key=lambda tap: (tap.q, tap.p, tap.delay, tap.path_id))
    return out


def comm_cir(
    scene: SceneTruth,
    t: float,
    tx: PlanarArray,
    rx_template: PlanarArray,
    params: CommParams,
    pol_draws: dict[int, PolarizationDraw],
    pairs: Iterable[tuple[int, int]] | None = None,
    tx_pattern: PolarizedPattern = ISOTROPIC_VERTICAL,
    rx_pattern: PolarizedPattern = ISOTROPIC_VERTICAL,
) -> dict[tuple[int, int], list[CommTap]]:
    """Impulse response at time ``t`` for the requested (q, p) pairs.

    ``rx_template`` supplies the user array geometry and is translated to
    the user position at ``t``. ``pairs`` defaults to every antenna pair;
    pass e.g. [(0, 0)] for the reference pair only. Each list holds the
    Rician-combined direct tap plus one tap per alive path, sorted by
    delay.
    """
    scene.check_time(t)
    params.validate()
    f_c = scene.config.carrier_hz
    rx = rx_template.moved_to(scene.user_position(t))
    if pairs is None:
        pairs = [(q, p) for q in range(rx.num_elements) for p in range(tx.num_elements)]
    else:
        pairs = list(pairs)

    truths = ground_truth_paths(scene, t)
    positions = {
        pt.path_id: (
            scene.scatterer(pt.fb_id).position_at(t),
            scene.scatterer(pt.lb_id).position_at(t),
        )
        for pt in truths
    }
    try:
        los_draw = pol_draws[LOS_PATH_ID]
        out: dict[tuple[int, int], list[CommTap]] = {}
        for q, p in pairs:
            direct = [los_tap(p, q, tx, rx, f_c, los_draw, tx_pattern, rx_pattern)]
            scattered = [
                nlos_tap(
                    p, q, tx, rx, positions[pt.path_id][0], positions[pt.path_id][1],
                    pt.path_id, pt.power, pt.virtual_delay, f_c, pol_draws[pt.path_id],
                    tx_pattern, rx_pattern,
                )
                for pt in truths
            ]
            out[(q, p)] = combine_rician(direct, scattered, params.k_factor)
    except KeyError as exc:
        raise CommError(f"missing polarization draw for path {exc.args[0]!r}") from exc
    return out
