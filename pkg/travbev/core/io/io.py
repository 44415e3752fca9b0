"""File formats shared by every pipeline stage.

Sequence directory layout (synthetic and recorded data share it):

	poses.csv            timestamp,r00..r22,tx,ty,tz (or timestamp,qx,qy,qz,qw,tx,ty,tz)
	camera.json          CameraModel fields
	vehicle.json         wheel contact offsets
	clouds/NNNNNN.pts    LiDAR scans, vehicle frame
	images/NNNNNN.png    RGB camera frames
	obstacles/NNNNNN.png obstacle masks aligned to the BEV (nonzero = obstacle)
	gt/NNNNNN.png        ground-truth label masks (palette PNG), when known
"""
from __future__ import annotations
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, TypeVar

import numpy as np
import pandas as pd
from PIL import Image

from travbev.core.errors import DataIOError, FormatError
from travbev.core.geometry import CameraModel, FrameTag, PointCloud, Pose, WheelFootprint

T = TypeVar("T")

POSE_MATRIX_COLUMNS = ["timestamp", "r00", "r01", "r02", "r10", "r11", "r12", "r20", "r21", "r22", "tx", "ty", "tz"]
POSE_QUATERNION_COLUMNS = ["timestamp", "qx", "qy", "qz", "qw", "tx", "ty", "tz"]

PTS_MAGIC = b"PTS1"
PTS_HEADER = struct.Struct("<4sII") # magic, point count, flags (bit 0 = colored)
PTS_RAW = np.dtype([("xyz", "<f4", (3,))])
PTS_COLORED = np.dtype([("xyz", "<f4", (3,)), ("rgb", "u1", (3,))])

# Palette for label masks: 0 = unlabeled (gray), 1 = traversable (green), 2 = untraversable (red)
LABEL_PALETTE = [128, 128, 128, 0, 200, 0, 220, 0, 0]

def frame_name(index:int) -> str:
	return f"{index:06d}"

@dataclass(frozen=True)
class SequencePaths:
	root : Path

	@property
	def poses(self) -> Path: return self.root/"poses.csv"
	@property
	def camera(self) -> Path: return self.root/"camera.json"
	@property
	def vehicle(self) -> Path: return self.root/"vehicle.json"
	@property
	def clouds(self) -> Path: return self.root/"clouds"
	@property
	def images(self) -> Path: return self.root/"images"
	@property
	def obstacles(self) -> Path: return self.root/"obstacles"
	@property
	def gt(self) -> Path: return self.root/"gt"
	@property
	def bev(self) -> Path: return self.root/"bev"
	@property
	def labels(self) -> Path: return self.root/"labels"
	@property
	def maps(self) -> Path: return self.root/"maps"

	def frame_indices(self, subdir:Path, suffix:str=".png") -> list[int]:
		"""Sorted indices of NNNNNN<suffix> files in subdir."""
		if not subdir.is_dir():
			raise DataIOError(f"Directory not found: {subdir}")
		out = []
		for p in subdir.glob(f"*{suffix}"):
			stem = p.name[:-len(suffix)]
			if stem.isdigit():
				out.append(int(stem))
		return sorted(out)

## ------ Loader plumbing ------ ##
def _checked(path:str|Path) -> Path:
	p = Path(path)
	if not p.exists():
		raise DataIOError(f"File not found: {p}")
	return p

def _load(path:str|Path, reader:Callable[[Path], T]) -> T:
	"""
	Run reader on an existing path. Format errors pass through; anything else
	becomes a DataIOError naming the path.
	"""
	p = _checked(path)
	try:
		return reader(p)
	except FormatError:
		raise
	except Exception as e:
		raise DataIOError(f"Failed to load {p}: {e}") from e

def _prepare(path:str|Path) -> Path:
	p = Path(path)
	p.parent.mkdir(parents=True, exist_ok=True)
	return p

## ------ Poses ------ ##
def load_poses(path:str|Path) -> list[Pose]:
	"""Load a pose log. Quaternion logs are converted to rotation matrices."""
	def read(p:Path) -> list[Pose]:
		df = pd.read_csv(p)
		cols = [c.strip() for c in df.columns]
		df.columns = cols
		if cols == POSE_MATRIX_COLUMNS:
			vals = df.to_numpy(dtype=np.float64)
			return [Pose(v[1:10].reshape(3, 3), v[10:13], v[0]) for v in vals]
		if cols == POSE_QUATERNION_COLUMNS:
			vals = df.to_numpy(dtype=np.float64)
			return [Pose.from_quaternion(v[1:5], v[5:8], v[0]) for v in vals]
		raise FormatError(f"{p}: unexpected pose header {cols}")
	return _load(path, read)

def save_poses(poses:list[Pose], path:str|Path) -> None:
	rows = [pose.as_row() for pose in poses]
	pd.DataFrame(rows, columns=POSE_MATRIX_COLUMNS).to_csv(_prepare(path), index=False, float_format="%.17g")

## ------ Point clouds ------ ##
def load_cloud(path:str|Path) -> PointCloud:
	def read(p:Path) -> PointCloud:
		blob = p.read_bytes()
		if len(blob) < PTS_HEADER.size:
			raise FormatError(f"{p}: truncated point cloud header")
		magic, count, flags = PTS_HEADER.unpack_from(blob)
		if magic != PTS_MAGIC:
			raise FormatError(f"{p}: not a .pts file")
		dtype = PTS_COLORED if flags & 1 else PTS_RAW
		if len(blob) != PTS_HEADER.size + count*dtype.itemsize:
			raise FormatError(f"{p}: expected {count} records")
		rec = np.frombuffer(blob, dtype=dtype, count=count, offset=PTS_HEADER.size)
		colors = rec["rgb"].copy() if flags & 1 else None
		return PointCloud(rec["xyz"].astype(np.float64), colors, FrameTag.VEHICLE)
	return _load(path, read)

def save_cloud(cloud:PointCloud, path:str|Path) -> None:
	dtype = PTS_COLORED if cloud.is_colored else PTS_RAW
	rec = np.zeros(len(cloud), dtype=dtype)
	rec["xyz"] = cloud.points.astype(np.float32)
	if cloud.is_colored:
		rec["rgb"] = cloud.colors
	header = PTS_HEADER.pack(PTS_MAGIC, len(cloud), 1 if cloud.is_colored else 0)
	_prepare(path).write_bytes(header + rec.tobytes())

## ------ JSON ------ ##
def load_json(path:str|Path) -> dict[str, Any]:
	def read(p:Path) -> dict:
		try:
			return json.loads(p.read_text(encoding="utf-8"))
		except json.JSONDecodeError as e:
			raise FormatError(f"{p}: invalid JSON: {e}") from e
	return _load(path, read)

def save_json(data:dict[str, Any], path:str|Path) -> None:
	_prepare(path).write_text(json.dumps(data, indent=2), encoding="utf-8")

def load_camera(path:str|Path) -> CameraModel:
	data = load_json(path)
	try:
		return CameraModel(
			fx=float(data["fx"]), fy=float(data["fy"]),
			cx=float(data["cx"]), cy=float(data["cy"]),
			image_width=int(data["image_width"]), image_height=int(data["image_height"]),
			lidar_to_cam_rotation=np.asarray(data.get("lidar_to_cam_rotation", np.eye(3).tolist())),
			lidar_to_cam_translation=np.asarray(data.get("lidar_to_cam_translation", [0.0, 0.0, 0.0])),
		)
	except KeyError as e:
		raise FormatError(f"{path}: camera model is missing field {e}") from e

def save_camera(cam:CameraModel, path:str|Path) -> None:
	save_json(cam.to_dict(), path)

def load_footprint(path:str|Path) -> WheelFootprint:
	data = load_json(path)
	try:
		return WheelFootprint(data["left_front"], data["left_rear"], data["right_front"], data["right_rear"])
	except KeyError as e:
		raise FormatError(f"{path}: vehicle file is missing contact {e}") from e

def save_footprint(fp:WheelFootprint, path:str|Path) -> None:
	save_json({
		"left_front": fp.left_front.tolist(), "left_rear": fp.left_rear.tolist(),
		"right_front": fp.right_front.tolist(), "right_rear": fp.right_rear.tolist(),
	}, path)

def sidecar_path(png:str|Path) -> Path:
	return Path(png).with_suffix(".json")

## ------ Rasters ------ ##
def load_rgb(path:str|Path) -> np.ndarray:
	return _load(path, lambda p: np.array(Image.open(p).convert("RGB"), dtype=np.uint8))

def save_rgb(image:np.ndarray, path:str|Path) -> None:
	Image.fromarray(np.ascontiguousarray(image, dtype=np.uint8)).save(_prepare(path))

def load_mask(path:str|Path) -> np.ndarray:
	"""8-bit grayscale mask, nonzero = set."""
	return _load(path, lambda p: np.array(Image.open(p).convert("L")) > 0)

def save_mask(mask:np.ndarray, path:str|Path) -> None:
	Image.fromarray(np.where(mask, 255, 0).astype(np.uint8)).save(_prepare(path))

def load_labels(path:str|Path) -> np.ndarray:
	def read(p:Path) -> np.ndarray:
		img = Image.open(p)
		if img.mode != "P":
			raise FormatError(f"{p}: label masks must be palette PNGs, got mode {img.mode}")
		labels = np.array(img, dtype=np.uint8)
		if labels.max(initial=0) > 2:
			raise FormatError(f"{p}: label values must be 0, 1 or 2")
		return labels
	return _load(path, read)

def save_labels(labels:np.ndarray, path:str|Path) -> None:
	arr = np.ascontiguousarray(labels, dtype=np.uint8)
	img = Image.frombytes("P", (arr.shape[1], arr.shape[0]), arr.tobytes())
	img.putpalette(LABEL_PALETTE)
	img.save(_prepare(path))

def load_cost(path:str|Path) -> np.ndarray:
	"""16-bit cost map -> float values in [0, 1]."""
	def read(p:Path) -> np.ndarray:
		img = Image.open(p)
		if img.mode not in ("I;16", "I;16B", "I"):
			raise FormatError(f"{p}: cost maps must be 16-bit grayscale, got mode {img.mode}")
		return np.array(img).astype(np.float64)/65535.0
	return _load(path, read)

def save_cost(values:np.ndarray, path:str|Path) -> None:
	scaled = np.rint(np.clip(values, 0.0, 1.0)*65535.0).astype(np.uint16)
	Image.fromarray(scaled).save(_prepare(path))

## ------ Vector blocks ------ ##
_BLOCK_LEN = struct.Struct("<I")

def save_vector_block(header:dict[str, Any], vectors:np.ndarray, path:str|Path) -> None:
	"""
	Length-prefixed JSON header followed by a little-endian float32 block.
	Used for serialized prototype queues.
	"""
	head = json.dumps(header, sort_keys=True).encode("utf-8")
	block = np.ascontiguousarray(vectors, dtype="<f4").tobytes()
	_prepare(path).write_bytes(_BLOCK_LEN.pack(len(head)) + head + block)

def load_vector_block(path:str|Path) -> tuple[dict[str, Any], np.ndarray]:
	def read(p:Path) -> tuple[dict, np.ndarray]:
		blob = p.read_bytes()
		if len(blob) < _BLOCK_LEN.size:
			raise FormatError(f"{p}: truncated header")
		(n,) = _BLOCK_LEN.unpack_from(blob)
		try:
			header = json.loads(blob[_BLOCK_LEN.size:_BLOCK_LEN.size + n].decode("utf-8"))
			count, dim = int(header["count"]), int(header["D"])
		except (ValueError, KeyError, UnicodeDecodeError) as e:
			raise FormatError(f"{p}: bad vector block header: {e}") from e
		body = blob[_BLOCK_LEN.size + n:]
		if len(body) != count*dim*4:
			raise FormatError(f"{p}: expected {count}x{dim} float32 values")
		return header, np.frombuffer(body, dtype="<f4").reshape(count, dim).astype(np.float64)
	return _load(path, read)
