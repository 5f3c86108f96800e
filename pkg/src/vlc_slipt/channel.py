"""Optical channel synthesis: Lambertian line-of-sight plus first reflection.

LED emission axes point straight down, photodiode normals straight up, so
for the direct link the radiance angle at the LED equals the incidence
angle at the receiver.  Incidence beyond the receiver FoV semi-angle
contributes nothing (the concentrator gain has a hard cutoff).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import PhysParams
from .geometry import Geometry, WallPatches

_DOWN = np.array([0.0, 0.0, -1.0])
_UP = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    """Dense nonnegative optical gains, IU rows first, then EHU rows."""

    gains: np.ndarray   # (n_iu + n_ehu, n_ap)
    n_iu: int

    @property
    def iu_gains(self) -> np.ndarray:
        return self.gains[:self.n_iu]

    @property
    def ehu_gains(self) -> np.ndarray:
        return self.gains[self.n_iu:]

    @property
    def n_ap(self) -> int:
        return self.gains.shape[1]


def _concentrator(cos_theta: np.ndarray, params: PhysParams) -> np.ndarray:
    """FoV-gated optical concentrator gain n^2 / sin^2(FoV)."""
    fov = math.radians(params.fov_semi_angle_deg)
    gain = params.refractive_index ** 2 / math.sin(fov) ** 2
    return np.where(cos_theta >= math.cos(fov), gain, 0.0)


def _los_matrix(users: np.ndarray, aps: np.ndarray, pd_area: float,
                params: PhysParams) -> np.ndarray:
    """Direct-link gains for every (user, AP) pair; shape (n_users, n_ap)."""
    if users.shape[0] == 0:
        return np.zeros((0, aps.shape[0]))
    diff = aps[None, :, :] - users[:, None, :]          # user -> AP
    dist = np.linalg.norm(diff, axis=2)
    cos_theta = np.clip(diff[:, :, 2] / dist, 0.0, 1.0)  # PD normal up
    m = params.lambertian_order
    # emission angle at the LED equals cos_theta for vertical orientations
    radial = (m + 1.0) * pd_area / (2.0 * math.pi * dist ** 2)
    return (radial * cos_theta ** m * params.optical_filter_gain
            * _concentrator(cos_theta, params) * cos_theta)


def _nlos_matrix(users: np.ndarray, aps: np.ndarray, patches: WallPatches,
                 pd_area: float, params: PhysParams) -> np.ndarray:
    """Single-bounce gains summed over wall patches; shape (n_users, n_ap).

    Factored as (user x patch) @ (patch x AP) so the AP-side geometry is
    computed once per scene.
    """
    n_u, n_ap = users.shape[0], aps.shape[0]
    if n_u == 0 or len(patches) == 0 or params.wall_reflectance == 0.0:
        return np.zeros((n_u, n_ap))

    m = params.lambertian_order
    centers, normals, areas = patches.centers, patches.normals, patches.areas

    # AP -> patch leg
    d1v = centers[None, :, :] - aps[:, None, :]          # (n_ap, n_p, 3)
    d1 = np.linalg.norm(d1v, axis=2)
    cos_emit = np.clip(np.einsum("apk,k->ap", d1v, _DOWN) / d1, 0.0, 1.0)
    cos_in_wall = np.clip(-np.einsum("apk,pk->ap", d1v, normals) / d1, 0.0, 1.0)
    ap_side = ((m + 1.0) / (2.0 * math.pi * d1 ** 2)
               * cos_emit ** m * cos_in_wall
               * params.wall_reflectance * areas[None, :])     # (n_ap, n_p)

    # patch -> user leg
    d2v = users[:, None, :] - centers[None, :, :]        # (n_u, n_p, 3)
    d2 = np.linalg.norm(d2v, axis=2)
    cos_out_wall = np.clip(np.einsum("upk,pk->up", d2v, normals) / d2, 0.0, 1.0)
    cos_inc = np.clip(-np.einsum("upk,k->up", d2v, _UP) / d2, 0.0, 1.0)
    user_side = (pd_area * params.optical_filter_gain / d2 ** 2
                 * cos_out_wall * _concentrator(cos_inc, params) * cos_inc)  # (n_u, n_p)

    return user_side @ ap_side.T


def los_gain(ap, user, pd_area: float, params: PhysParams) -> float:
    """Direct-link gain for a single AP/user pair (AP above the user)."""
    g = _los_matrix(np.asarray(user, dtype=float).reshape(1, 3),
                    np.asarray(ap, dtype=float).reshape(1, 3), pd_area, params)
    return float(g[0, 0])


def nlos_gain(ap, user, patches: WallPatches, pd_area: float,
              params: PhysParams) -> float:
    """First-reflection gain for a single AP/user pair over the given patches."""
    g = _nlos_matrix(np.asarray(user, dtype=float).reshape(1, 3),
                     np.asarray(ap, dtype=float).reshape(1, 3),
                     patches, pd_area, params)
    return float(g[0, 0])


def channel_matrix(geometry: Geometry, params: PhysParams) -> ChannelMatrix:
    """Assemble the full gain matrix, IU rows first.

    IU and EHU rows use their respective photodiode areas; both receiver
    classes share the configured FoV semi-angle.
    """
    aps = geometry.ap_positions
    blocks = []
    for users, area in ((geometry.iu_positions, params.pd_area_iu),
                        (geometry.ehu_positions, params.pd_area_ehu)):
        block = (_los_matrix(users, aps, area, params)
                 + _nlos_matrix(users, aps, geometry.wall_patches, area, params))
        blocks.append(block)
    gains = np.vstack(blocks) if blocks else np.zeros((0, aps.shape[0]))
    return ChannelMatrix(gains=gains, n_iu=geometry.n_iu)
