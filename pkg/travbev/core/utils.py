from __future__ import annotations

import colorsys
import hashlib

import numpy as np

def str2color(text:str) -> str:
	"""
	Return a hex color hashed from input text.
	Used to keep a run's curves the same color across figures.
	"""
	h = int(hashlib.sha1(text.encode("utf-8")).hexdigest()[:8], 16)
	hue = (h%360)/360.0
	r,g,b = colorsys.hsv_to_rgb(hue, 0.65, 0.85)
	return "#{:02x}{:02x}{:02x}".format(int(r*255), int(g*255), int(b*255))

def unit_normalize(vectors:np.ndarray, axis:int=-1, eps:float=1e-12) -> np.ndarray:
	"""
	L2-normalize along axis. Zero vectors stay zero.
	"""
	v = np.asarray(vectors, dtype=np.float64)
	norm = np.linalg.norm(v, axis=axis, keepdims=True)
	return v/np.maximum(norm, eps)

def make_rng(seed:int|np.random.Generator|None) -> np.random.Generator:
	if isinstance(seed, np.random.Generator):
		return seed
	return np.random.default_rng(seed)

def derive_seed(rng:np.random.Generator) -> int:
	"""Draw an int seed for libraries that only take integer random_state."""
	return int(rng.integers(0, 2**31-1))
