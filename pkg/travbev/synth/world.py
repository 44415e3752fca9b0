"""
Procedural terrain: a road along a smooth spline through grass, a driven
path swinging across it, and cylindrical obstacles clear of both.
"""
from __future__ import annotations
import logging
from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from scipy.interpolate import make_interp_spline
from scipy.ndimage import gaussian_filter

from travbev.core.errors import ConfigurationError

logger = logging.getLogger(__name__)

class Terrain(IntEnum):
	ROAD = 0
	GRASS = 1
	OBSTACLE = 2

TRAVERSABLE_CLASSES = (Terrain.ROAD, Terrain.GRASS)
SEASONS = ("spring", "winter")

# Mean RGB per terrain class and season
PALETTES = {
	"spring": {Terrain.ROAD: (105, 105, 112), Terrain.GRASS: (70, 150, 55), Terrain.OBSTACLE: (150, 85, 45)},
	"winter": {Terrain.ROAD: (150, 148, 158), Terrain.GRASS: (222, 228, 235), Terrain.OBSTACLE: (95, 70, 60)},
}

@dataclass(frozen=True)
class SceneSpec:
	length : float = 160.0 # meters along x
	width : float = 120.0 # meters along y, centered on y = 0
	resolution : float = 0.1 # class map meters/cell
	## --- Road --- ##
	road_width : float = 6.0 # 0 => no road
	road_control_points : int = 6
	road_wander : float = 6.0 # std of the centerline's lateral offsets, meters
	grass_patch_fraction : float = 0.3 # share of the road surface overgrown with grass
	corridor_clearance : float = 2.0 # obstacle-free margin beyond the road edge
	## --- Driven path --- ##
	path_wander : float = 7.0 # amplitude of the lateral swing about the centerline; 0 => drive the centerline
	path_wavelength : float = 50.0 # meters along x per full swing
	path_clearance : float = 3.0 # obstacle-free half width around the path
	## --- Obstacles --- ##
	obstacle_count : int = 170
	obstacle_radius : tuple[float, float] = (1.0, 2.5)
	obstacle_height : tuple[float, float] = (0.8, 2.0)
	## --- Appearance --- ##
	texture_season : str = "spring"
	texture_amplitude : float = 12.0 # smooth color variation
	texture_noise : float = 6.0 # per-cell color noise
	seed : int = 0

	def __post_init__(self) -> None:
		if self.length <= 0 or self.width <= 0 or self.resolution <= 0:
			raise ConfigurationError("Scene extent and resolution must be positive")
		if self.road_width < 0 or self.obstacle_count < 0:
			raise ConfigurationError("road_width and obstacle_count must be >= 0")
		if not (0 < self.obstacle_radius[0] <= self.obstacle_radius[1]):
			raise ConfigurationError("obstacle_radius must be an increasing positive range")
		if not (0 < self.obstacle_height[0] <= self.obstacle_height[1]):
			raise ConfigurationError("obstacle_height must be an increasing positive range")
		if self.texture_season not in SEASONS:
			raise ConfigurationError(f"texture_season must be one of {SEASONS}")
		if not 0 <= self.grass_patch_fraction <= 1:
			raise ConfigurationError("grass_patch_fraction must be in [0, 1]")
		if self.path_wander < 0 or self.path_clearance < 0 or self.path_wavelength <= 0:
			raise ConfigurationError("path_wander and path_clearance must be >= 0, path_wavelength > 0")
		object.__setattr__(self, "obstacle_radius", tuple(self.obstacle_radius))
		object.__setattr__(self, "obstacle_height", tuple(self.obstacle_height))

	@property
	def shape(self) -> tuple[int, int]:
		return int(round(self.length/self.resolution)), int(round(self.width/self.resolution))

	def expected_obstacle_fraction(self) -> float:
		"""Mean obstacle area over world area for disjoint obstacles."""
		a, b = self.obstacle_radius
		mean_r2 = (a*a + a*b + b*b)/3.0
		return self.obstacle_count*np.pi*mean_r2/(self.length*self.width)

@dataclass(frozen=True)
class Obstacle:
	x : float
	y : float
	radius : float
	height : float

@dataclass(frozen=True, eq=False)
class Scene:
	spec : SceneSpec
	class_map : np.ndarray # (nx, ny) Terrain values, index [ix, iy]
	color_map : np.ndarray # (nx, ny, 3) uint8
	obstacles : tuple[Obstacle, ...]
	centerline : np.ndarray # (K, 2) dense world xy samples of the road center
	arc_length : np.ndarray # (K,) cumulative distance along the centerline
	path : np.ndarray # (K, 2) the line the vehicle drives
	path_arc_length : np.ndarray

	## ------ Lookups ------ ##
	def cell_index(self, xy:np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
		"""(ix, iy, inside) of world points."""
		pts = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
		res = self.spec.resolution
		ix = np.floor(pts[:, 0]/res).astype(np.int64)
		iy = np.floor((pts[:, 1] + self.spec.width/2)/res).astype(np.int64)
		nx, ny = self.class_map.shape
		inside = (ix >= 0) & (ix < nx) & (iy >= 0) & (iy < ny)
		return ix, iy, inside

	def classes_at(self, xy:np.ndarray) -> np.ndarray:
		"""Terrain class per point; -1 outside the world."""
		ix, iy, inside = self.cell_index(xy)
		out = np.full(len(ix), -1, dtype=np.int64)
		out[inside] = self.class_map[ix[inside], iy[inside]]
		return out

	def colors_at(self, xy:np.ndarray) -> np.ndarray:
		ix, iy, inside = self.cell_index(xy)
		out = np.zeros((len(ix), 3), dtype=np.uint8)
		out[inside] = self.color_map[ix[inside], iy[inside]]
		return out

	def obstacle_fraction(self) -> float:
		return float(np.mean(self.class_map == Terrain.OBSTACLE))

	def point_on_road(self, s:float|np.ndarray) -> tuple[np.ndarray, np.ndarray]:
		"""World xy and heading at arc length s along the centerline."""
		return _point_along(self.centerline, self.arc_length, s)

	def point_on_path(self, s:float|np.ndarray) -> tuple[np.ndarray, np.ndarray]:
		"""World xy and heading at arc length s along the driven path."""
		return _point_along(self.path, self.path_arc_length, s)

## ------ Public API ------ ##
def generate_scene(spec:SceneSpec, seed:int|None=None) -> Scene:
	"""Deterministic given the seed (spec.seed when None)."""
	rng = np.random.default_rng(spec.seed if seed is None else seed)
	nx, ny = spec.shape
	xs = (np.arange(nx) + 0.5)*spec.resolution
	ys = (np.arange(ny) + 0.5)*spec.resolution - spec.width/2

	centerline = _road_centerline(spec, rng)
	path = _driven_path(spec, rng, centerline)
	center_y = np.interp(xs, centerline[:, 0], centerline[:, 1])
	offset = np.abs(ys[None, :] - center_y[:, None]) # (nx, ny) lateral distance to the centerline

	class_map = np.full((nx, ny), Terrain.GRASS, dtype=np.uint8)
	patches = _smooth_field(rng, (nx, ny), 1.5/spec.resolution)
	if spec.road_width > 0:
		road = offset <= spec.road_width/2
		if spec.grass_patch_fraction > 0:
			cut = np.quantile(patches[road], 1 - spec.grass_patch_fraction) if road.any() else np.inf
			road &= patches < cut
		class_map[road] = Terrain.ROAD

	obstacles = _place_obstacles(spec, rng, centerline, path)
	gx, gy = np.meshgrid(xs, ys, indexing="ij")
	for ob in obstacles:
		r = int(np.ceil(ob.radius/spec.resolution)) + 1
		i0, j0 = int(ob.x/spec.resolution), int((ob.y + spec.width/2)/spec.resolution)
		si = slice(max(i0 - r, 0), min(i0 + r + 1, nx))
		sj = slice(max(j0 - r, 0), min(j0 + r + 1, ny))
		disk = (gx[si, sj] - ob.x)**2 + (gy[si, sj] - ob.y)**2 <= ob.radius**2
		class_map[si, sj][disk] = Terrain.OBSTACLE

	color_map = _texture(spec, class_map, rng)
	logger.debug("Scene seed %s: %d obstacles, obstacle fraction %.4f", seed, len(obstacles),
		float(np.mean(class_map == Terrain.OBSTACLE)))
	return Scene(spec, class_map, color_map, tuple(obstacles), centerline, _arc_length(centerline),
		path, _arc_length(path))

## ------ Internal ------ ##
def _smooth_field(rng:np.random.Generator, shape:tuple[int, ...], sigma_cells:float|tuple[float, ...]) -> np.ndarray:
	"""Unit-variance Gaussian-smoothed noise."""
	noise = gaussian_filter(rng.standard_normal(shape), sigma=sigma_cells, mode="wrap")
	return noise/max(float(noise.std()), 1e-12)

def _arc_length(line:np.ndarray) -> np.ndarray:
	return np.r_[0.0, np.cumsum(np.hypot(*np.diff(line, axis=0).T))]

def _point_along(line:np.ndarray, arc:np.ndarray, s:float|np.ndarray) -> tuple[np.ndarray, np.ndarray]:
	s = np.clip(np.asarray(s, dtype=np.float64), 0.0, arc[-1])
	x = np.interp(s, arc, line[:, 0])
	y = np.interp(s, arc, line[:, 1])
	ds = 0.5
	x2 = np.interp(np.minimum(s + ds, arc[-1]), arc, line[:, 0])
	y2 = np.interp(np.minimum(s + ds, arc[-1]), arc, line[:, 1])
	x1 = np.interp(np.maximum(s - ds, 0.0), arc, line[:, 0])
	y1 = np.interp(np.maximum(s - ds, 0.0), arc, line[:, 1])
	return np.stack([x, y], axis=-1), np.arctan2(y2 - y1, x2 - x1)

def _road_centerline(spec:SceneSpec, rng:np.random.Generator) -> np.ndarray:
	n = max(spec.road_control_points, 4)
	ctrl_x = np.linspace(0.0, spec.length, n)
	ctrl_y = rng.normal(0.0, spec.road_wander, n)
	ctrl_y = np.clip(ctrl_y, -spec.width/4, spec.width/4)
	spline = make_interp_spline(ctrl_x, ctrl_y, k=3)
	x = np.linspace(0.0, spec.length, int(spec.length/0.25) + 1)
	y = np.clip(spline(x), -spec.width/2 + spec.road_width, spec.width/2 - spec.road_width)
	return np.stack([x, y], axis=1)

def _driven_path(spec:SceneSpec, rng:np.random.Generator, centerline:np.ndarray) -> np.ndarray:
	"""Sinusoidal lateral swing about the centerline, on and off the road."""
	phase = rng.uniform(0.0, 2*np.pi)
	swing = spec.path_wander*np.sin(2*np.pi*centerline[:, 0]/spec.path_wavelength + phase)
	margin = spec.path_clearance + 1.0
	y = np.clip(centerline[:, 1] + swing, -spec.width/2 + margin, spec.width/2 - margin)
	return np.stack([centerline[:, 0], y], axis=1)

def _place_obstacles(spec:SceneSpec, rng:np.random.Generator, centerline:np.ndarray,
		path:np.ndarray) -> list[Obstacle]:
	"""Disjoint cylinders inside the world, clear of the road corridor and the driven path."""
	road_keep_out = spec.road_width/2 + spec.corridor_clearance
	placed: list[Obstacle] = []
	xs, ys, rs = np.zeros(0), np.zeros(0), np.zeros(0)
	attempts = 0
	while len(placed) < spec.obstacle_count and attempts < 200*max(spec.obstacle_count, 1):
		attempts += 1
		r = rng.uniform(*spec.obstacle_radius)
		h = rng.uniform(*spec.obstacle_height)
		x = rng.uniform(r, spec.length - r)
		y = rng.uniform(-spec.width/2 + r, spec.width/2 - r)
		if np.min(np.hypot(centerline[:, 0] - x, centerline[:, 1] - y)) < road_keep_out + r:
			continue
		if np.min(np.hypot(path[:, 0] - x, path[:, 1] - y)) < spec.path_clearance + r:
			continue
		if np.any(np.hypot(xs - x, ys - y) < rs + r):
			continue
		placed.append(Obstacle(float(x), float(y), float(r), float(h)))
		xs, ys, rs = np.r_[xs, x], np.r_[ys, y], np.r_[rs, r]
	if len(placed) < spec.obstacle_count:
		logger.warning("Placed %d of %d obstacles; the scene is too crowded", len(placed), spec.obstacle_count)
	return placed

def _texture(spec:SceneSpec, class_map:np.ndarray, rng:np.random.Generator) -> np.ndarray:
	# Noise is drawn before the palette is chosen so seasons share it
	smooth = _smooth_field(rng, (*class_map.shape, 3), (0.8/spec.resolution, 0.8/spec.resolution, 0))
	grain = rng.standard_normal((*class_map.shape, 3))
	palette = np.array([PALETTES[spec.texture_season][t] for t in Terrain], dtype=np.float64)
	colors = palette[class_map] + spec.texture_amplitude*smooth + spec.texture_noise*grain
	return np.clip(np.rint(colors), 0, 255).astype(np.uint8)
