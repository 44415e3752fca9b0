"""Vehicle-centered BEV grid and rasterization.

Convention: the vehicle sits at cell (height//2, width//2); +x (forward) runs
toward decreasing row index and +y (left) toward decreasing column index.
"""
from __future__ import annotations
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from travbev.config import BevConfig
from travbev.core.errors import ConfigurationError, FormatError
from travbev.core.geometry import PointCloud, Pose
from travbev.core.io import load_json, load_mask, load_rgb, save_json, save_mask, save_rgb, sidecar_path

@dataclass(frozen=True)
class GridSpec:
	width_cells : int = 300
	height_cells : int = 300
	resolution : float = 0.2 # meters/cell

	def __post_init__(self) -> None:
		if self.width_cells <= 0 or self.height_cells <= 0:
			raise ConfigurationError("Grid dimensions must be positive")
		if self.resolution <= 0:
			raise ConfigurationError("Grid resolution must be positive")

	@classmethod
	def from_config(cls, cfg:BevConfig) -> "GridSpec":
		return cls(cfg.width_cells, cfg.height_cells, cfg.resolution)

	@property
	def shape(self) -> tuple[int, int]:
		return self.height_cells, self.width_cells

	@property
	def center(self) -> tuple[int, int]:
		return self.height_cells//2, self.width_cells//2

	## ------ Public API ------ ##
	def continuous_cells(self, points:np.ndarray) -> np.ndarray:
		"""
		Fractional (row, col) coordinates of (N, 2+) vehicle-frame points.
		Cell centers sit at integer coordinates.
		"""
		pts = np.asarray(points, dtype=np.float64)
		r0, c0 = self.center
		return np.stack([r0 - pts[:, 0]/self.resolution, c0 - pts[:, 1]/self.resolution], axis=1)

	def world_to_cells(self, points:np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
		"""Vectorized world_to_cell: returns (rows, cols, inside)."""
		rc = np.floor(self.continuous_cells(points) + 0.5).astype(np.int64)
		rows, cols = rc[:, 0], rc[:, 1]
		inside = (rows >= 0) & (rows < self.height_cells) & (cols >= 0) & (cols < self.width_cells)
		return rows, cols, inside

	def cell_to_world(self, row:int|np.ndarray, col:int|np.ndarray) -> np.ndarray:
		"""Center of a cell in the vehicle frame (x, y)."""
		r0, c0 = self.center
		return np.stack([(r0 - np.asarray(row))*self.resolution, (c0 - np.asarray(col))*self.resolution], axis=-1)

	def cell_centers(self) -> np.ndarray:
		"""(H, W, 2) vehicle-frame (x, y) of every cell center."""
		rows, cols = np.meshgrid(np.arange(self.height_cells), np.arange(self.width_cells), indexing="ij")
		return self.cell_to_world(rows, cols)

	def to_dict(self) -> dict:
		return {"width": self.width_cells, "height": self.height_cells, "resolution": self.resolution}

def world_to_cell(p, spec:GridSpec) -> tuple[int, int] | None:
	rows, cols, inside = spec.world_to_cells(np.asarray(p, dtype=np.float64).reshape(1, -1))
	if not inside[0]:
		return None
	return int(rows[0]), int(cols[0])

@dataclass(frozen=True, eq=False)
class BevGrid:
	spec : GridSpec
	channels : np.ndarray # (H, W, 3) uint8
	occupancy : np.ndarray # (H, W) bool
	timestamp : float = 0.0
	pose : Pose | None = None # odometry pose the grid is centered on

	def __post_init__(self) -> None:
		channels = np.array(self.channels, dtype=np.uint8)
		occupancy = np.array(self.occupancy, dtype=bool)
		if channels.shape != (*self.spec.shape, 3) or occupancy.shape != self.spec.shape:
			raise ConfigurationError(
				f"BEV arrays {channels.shape}/{occupancy.shape} do not match grid {self.spec.shape}")
		if np.any(channels[~occupancy]):
			raise ConfigurationError("Unoccupied BEV cells must be black")
		channels.setflags(write=False)
		occupancy.setflags(write=False)
		object.__setattr__(self, "channels", channels)
		object.__setattr__(self, "occupancy", occupancy)

	@classmethod
	def empty(cls, spec:GridSpec, timestamp:float=0.0) -> "BevGrid":
		return cls(spec, np.zeros((*spec.shape, 3), np.uint8), np.zeros(spec.shape, bool), timestamp)

def rasterize(cloud:PointCloud, spec:GridSpec, timestamp:float=0.0, pose:Pose|None=None) -> BevGrid:
	"""
	Top-down raster of a colored vehicle-frame cloud. Each occupied cell takes
	the color of its highest point; equal heights resolve to the later point.
	"""
	if not cloud.is_colored:
		raise ConfigurationError("rasterize needs a colored cloud")
	channels = np.zeros((*spec.shape, 3), np.uint8)
	occupancy = np.zeros(spec.shape, bool)
	rows, cols, inside = spec.world_to_cells(cloud.points)
	idx = np.flatnonzero(inside)
	if len(idx):
		flat = rows[idx]*spec.width_cells + cols[idx]
		z = cloud.points[idx, 2]
		# Sort by cell, then height, then input order; the last entry per cell wins
		order = np.lexsort((idx, z, flat))
		flat_sorted = flat[order]
		last = np.r_[flat_sorted[1:] != flat_sorted[:-1], True]
		winners = idx[order[last]]
		cells = flat_sorted[last]
		channels.reshape(-1, 3)[cells] = cloud.colors[winners]
		occupancy.reshape(-1)[cells] = True
	return BevGrid(spec, channels, occupancy, timestamp, pose)

## ------ Files ------ ##
def occupancy_path(png:str|Path) -> Path:
	p = Path(png)
	return p.with_name(f"{p.stem}_occ.png")

def save_bev(bev:BevGrid, path:str|Path) -> None:
	"""RGB PNG + sidecar JSON + occupancy PNG next to it."""
	save_rgb(bev.channels, path)
	save_mask(bev.occupancy, occupancy_path(path))
	meta = {"timestamp": bev.timestamp, **bev.spec.to_dict()}
	if bev.pose is not None:
		meta["pose"] = bev.pose.as_row()
	save_json(meta, sidecar_path(path))

def load_bev(path:str|Path) -> BevGrid:
	meta = load_json(sidecar_path(path))
	try:
		spec = GridSpec(int(meta["width"]), int(meta["height"]), float(meta["resolution"]))
		timestamp = float(meta["timestamp"])
	except KeyError as e:
		raise FormatError(f"{path}: BEV sidecar is missing {e}") from e
	pose = None
	if "pose" in meta:
		row = np.asarray(meta["pose"], dtype=np.float64)
		pose = Pose(row[1:10].reshape(3, 3), row[10:13], row[0])
	channels = load_rgb(path)
	occ_file = occupancy_path(path)
	occupancy = load_mask(occ_file) if occ_file.exists() else np.any(channels > 0, axis=2)
	channels = np.where(occupancy[..., None], channels, 0)
	return BevGrid(spec, channels, occupancy, timestamp, pose)
