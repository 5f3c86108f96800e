"""Room geometry: ceiling AP lattice, user placement, wall discretization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig


@dataclass(frozen=True, eq=False)
class WallPatches:
    """First-reflection surface elements: centers, inward unit normals, areas."""

    centers: np.ndarray   # (n_patches, 3)
    normals: np.ndarray   # (n_patches, 3)
    areas: np.ndarray     # (n_patches,)

    def __len__(self):
        return self.centers.shape[0]

    @classmethod
    def empty(cls) -> "WallPatches":
        return cls(np.zeros((0, 3)), np.zeros((0, 3)), np.zeros(0))


@dataclass(frozen=True, eq=False)
class Geometry:
    """One spatial realization of the network."""

    room_dims: tuple          # (x, y, z) in meters
    ap_positions: np.ndarray  # (n_ap, 3), at ceiling level
    iu_positions: np.ndarray  # (n_iu, 3), at user height
    ehu_positions: np.ndarray # (n_ehu, 3), at user height
    wall_patches: WallPatches

    @property
    def n_ap(self) -> int:
        return self.ap_positions.shape[0]

    @property
    def n_iu(self) -> int:
        return self.iu_positions.shape[0]

    @property
    def n_ehu(self) -> int:
        return self.ehu_positions.shape[0]


def ap_lattice(room_dims, rows: int, cols: int) -> np.ndarray:
    """Regular ceiling lattice of APs at the centers of a rows x cols grid."""
    lx, ly, lz = room_dims
    xs = (np.arange(cols) + 0.5) * (lx / cols)
    ys = (np.arange(rows) + 0.5) * (ly / rows)
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    pts = np.column_stack([gx.ravel(), gy.ravel(), np.full(rows * cols, lz)])
    return pts


def discretize_walls(room_dims, edge: float) -> WallPatches:
    """Split the four walls into near-square patches of roughly ``edge`` size."""
    lx, ly, lz = room_dims
    centers, normals, areas = [], [], []

    def grid(extent_h, extent_v):
        nh = max(1, int(round(extent_h / edge)))
        nv = max(1, int(round(extent_v / edge)))
        hs = (np.arange(nh) + 0.5) * (extent_h / nh)
        vs = (np.arange(nv) + 0.5) * (extent_v / nv)
        area = (extent_h / nh) * (extent_v / nv)
        gh, gv = np.meshgrid(hs, vs, indexing="xy")
        return gh.ravel(), gv.ravel(), area

    # walls at x = 0 and x = lx, normals facing into the room
    gh, gv, a = grid(ly, lz)
    for x0, nx in ((0.0, 1.0), (lx, -1.0)):
        centers.append(np.column_stack([np.full_like(gh, x0), gh, gv]))
        normals.append(np.tile([nx, 0.0, 0.0], (gh.size, 1)))
        areas.append(np.full(gh.size, a))
    # walls at y = 0 and y = ly
    gh, gv, a = grid(lx, lz)
    for y0, ny in ((0.0, 1.0), (ly, -1.0)):
        centers.append(np.column_stack([gh, np.full_like(gh, y0), gv]))
        normals.append(np.tile([0.0, ny, 0.0], (gh.size, 1)))
        areas.append(np.full(gh.size, a))

    return WallPatches(np.vstack(centers), np.vstack(normals), np.concatenate(areas))


def build_geometry(config: ScenarioConfig, seed: int) -> Geometry:
    """Draw one network realization: fixed AP lattice, uniform random users.

    Deterministic for a given (config, seed).  All users in a trial are
    drawn in one block (IUs first), so splitting the same user population
    differently between IUs and EHUs reuses identical positions.
    """
    n_ap = config.ap_rows * config.ap_cols
    if config.n_iu >= n_ap:
        raise ValueError("number of IUs must be below the number of APs")
    if config.n_users == 0:
        raise ValueError("need at least one user")
    lx, ly, lz = config.room_dims
    if config.user_height <= 0 or config.user_height >= lz:
        raise ValueError("user height must lie strictly inside the room")

    aps = ap_lattice(config.room_dims, config.ap_rows, config.ap_cols)

    rng = np.random.default_rng(seed)
    pts = rng.uniform([0.0, 0.0], [lx, ly], size=(config.n_users, 2))
    # users must sit strictly inside the floor rectangle
    for _ in range(100):
        on_edge = (pts[:, 0] <= 0) | (pts[:, 0] >= lx) | (pts[:, 1] <= 0) | (pts[:, 1] >= ly)
        if not on_edge.any():
            break
        pts[on_edge] = rng.uniform([0.0, 0.0], [lx, ly], size=(int(on_edge.sum()), 2))
    users = np.column_stack([pts, np.full(config.n_users, config.user_height)])

    patches = discretize_walls(config.room_dims, config.phys.wall_patch_edge)

    return Geometry(
        room_dims=config.room_dims,
        ap_positions=aps,
        iu_positions=users[:config.n_iu],
        ehu_positions=users[config.n_iu:],
        wall_patches=patches,
    )
