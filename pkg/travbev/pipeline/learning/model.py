"""Fully convolutional BEV encoder-decoder with per-pixel unit-norm embeddings."""
from __future__ import annotations
from dataclasses import asdict, dataclass, field, replace
from typing import TYPE_CHECKING

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F
from torch.nn.utils import parameters_to_vector, vector_to_parameters

from travbev.config import ModelConfig
from travbev.core.errors import ConfigurationError

if TYPE_CHECKING:
	from travbev.pipeline.bev import BevGrid

ARCHITECTURE_VERSION = 1

@dataclass(frozen=True)
class Architecture:
	in_channels : int = 3
	widths : tuple[int, ...] = (16, 32, 48, 64)
	embedding_dim : int = 16
	input_height : int = 300
	input_width : int = 300
	version : int = ARCHITECTURE_VERSION

	def __post_init__(self) -> None:
		object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
		if self.in_channels < 1 or self.embedding_dim < 1 or not self.widths or min(self.widths) < 1:
			raise ConfigurationError(f"Invalid architecture: {self}")
		if self.input_height < 1 or self.input_width < 1:
			raise ConfigurationError("Input size must be positive")

	@classmethod
	def from_config(cls, cfg:ModelConfig, height:int, width:int) -> "Architecture":
		return cls(widths=cfg.widths, embedding_dim=cfg.embedding_dim, input_height=height, input_width=width)

	@classmethod
	def from_dict(cls, data:dict) -> "Architecture":
		return cls(**{**data, "widths": tuple(data["widths"])})

	def to_dict(self) -> dict:
		d = asdict(self)
		d["widths"] = list(self.widths)
		return d

class TraversabilityNet(nn.Module):
	"""
	Encoder: one stride-2 3x3 conv per width. Decoder: nearest upsampling to
	the skip resolution, concatenation with the skip, 3x3 conv, down to full
	resolution where the skip is the raw input. A 1x1 head maps to D and the
	output is L2-normalized per pixel.
	"""
	def __init__(self, arch:Architecture) -> None:
		super().__init__()
		w = arch.widths
		enc_in = (arch.in_channels, *w[:-1])
		self.encoder = nn.ModuleList(nn.Conv2d(cin, cout, 3, stride=2, padding=1) for cin, cout in zip(enc_in, w))
		# Decoder level i fuses with skip i (0 = input, i = encoder output i)
		skip_ch = (arch.in_channels, *w[:-1])
		out_ch = (w[0], *w[:-1])
		self.decoder = nn.ModuleList()
		cur = w[-1]
		for i in reversed(range(len(w))):
			self.decoder.append(nn.Conv2d(cur + skip_ch[i], out_ch[i], 3, padding=1))
			cur = out_ch[i]
		self.head = nn.Conv2d(cur, arch.embedding_dim, 1)

	def forward(self, x:torch.Tensor) -> torch.Tensor:
		skips = [x]
		for conv in self.encoder:
			skips.append(F.relu(conv(skips[-1])))
		cur = skips.pop()
		for conv in self.decoder:
			skip = skips.pop()
			up = F.interpolate(cur, size=skip.shape[-2:], mode="nearest")
			cur = F.relu(conv(torch.cat([up, skip], dim=1)))
		return F.normalize(self.head(cur), p=2, dim=1)

@dataclass(eq=False)
class ModelParams:
	architecture : Architecture
	seed : int
	network : TraversabilityNet = field(repr=False)

	def named_shapes(self) -> list[tuple[str, tuple[int, ...]]]:
		return [(name, tuple(p.shape)) for name, p in self.network.named_parameters()]

	def flat(self) -> np.ndarray:
		"""All parameters as one vector, in named_parameters order."""
		with torch.no_grad():
			return parameters_to_vector(self.network.parameters()).cpu().numpy().copy()

	def load_flat(self, vector:np.ndarray) -> None:
		vec = torch.as_tensor(np.array(vector), dtype=self.dtype)
		if vec.numel() != self.size:
			raise ConfigurationError(f"Expected {self.size} parameters, got {vec.numel()}")
		with torch.no_grad():
			vector_to_parameters(vec, self.network.parameters())

	@property
	def size(self) -> int:
		return sum(p.numel() for p in self.network.parameters())

	@property
	def dtype(self) -> torch.dtype:
		return next(self.network.parameters()).dtype

	def resized(self, height:int, width:int) -> "ModelParams":
		"""Same weights, different expected input size."""
		return ModelParams(replace(self.architecture, input_height=height, input_width=width), self.seed, self.network)

@dataclass(frozen=True, eq=False)
class FeatureMap:
	values : np.ndarray # (H, W, D), network dtype

	@property
	def shape(self) -> tuple[int, int]:
		return self.values.shape[:2]

	@property
	def dim(self) -> int:
		return self.values.shape[2]

	def at(self, cells:np.ndarray) -> np.ndarray:
		"""(K, D) features of (K, 2) (row, col) cells."""
		c = np.asarray(cells, dtype=np.int64).reshape(-1, 2)
		return self.values[c[:, 0], c[:, 1]]

## ------ Public API ------ ##
def init_params(arch:Architecture, seed:int=0) -> ModelParams:
	"""He fan-in init drawn from the seed. Conv biases start at zero except the head."""
	rng = np.random.default_rng(seed)
	net = TraversabilityNet(arch)
	with torch.no_grad():
		for module in net.modules():
			if isinstance(module, nn.Conv2d):
				fan_in = module.in_channels*module.kernel_size[0]*module.kernel_size[1]
				std = np.sqrt(2.0/fan_in)
				module.weight.copy_(torch.from_numpy(rng.standard_normal(module.weight.shape)*std))
				module.bias.zero_()
		net.head.bias.copy_(torch.from_numpy(rng.standard_normal(net.head.bias.shape)*0.01))
	return ModelParams(arch, seed, net)

def bev_tensor(bevs:"list[BevGrid|np.ndarray]", dtype:torch.dtype=torch.float32) -> torch.Tensor:
	"""Stack (H, W, 3) uint8 grids into a (B, 3, H, W) tensor scaled to [0, 1]."""
	arrays = [np.asarray(getattr(b, "channels", b)) for b in bevs]
	batch = np.stack(arrays).astype(np.float64)/255.0
	return torch.from_numpy(batch).permute(0, 3, 1, 2).to(dtype).contiguous()

def embed(params:ModelParams, batch:torch.Tensor) -> torch.Tensor:
	"""(B, C, H, W) -> (B, D, H, W), differentiable."""
	arch = params.architecture
	if tuple(batch.shape[1:]) != (arch.in_channels, arch.input_height, arch.input_width):
		raise ConfigurationError(
			f"Input {tuple(batch.shape[1:])} does not match architecture "
			f"({arch.in_channels}, {arch.input_height}, {arch.input_width})")
	return params.network(batch.to(params.dtype))

def forward(params:ModelParams, bev:"BevGrid|np.ndarray") -> FeatureMap:
	with torch.no_grad():
		out = embed(params, bev_tensor([bev], params.dtype))
	return FeatureMap(out[0].permute(1, 2, 0).cpu().numpy().copy())

def backward(params:ModelParams, bev:"BevGrid|np.ndarray", upstream:np.ndarray) -> np.ndarray:
	"""
	Gradient of sum(F * upstream) w.r.t. every parameter, flattened like
	ModelParams.flat(). upstream is (H, W, D).
	"""
	out = embed(params, bev_tensor([bev], params.dtype))[0].permute(1, 2, 0)
	up = torch.as_tensor(np.asarray(upstream), dtype=out.dtype)
	if up.shape != out.shape:
		raise ConfigurationError(f"Upstream gradient {tuple(up.shape)} does not match output {tuple(out.shape)}")
	grads = torch.autograd.grad(out, list(params.network.parameters()), grad_outputs=up, allow_unused=True)
	flat = [g.reshape(-1) if g is not None else torch.zeros(p.numel(), dtype=out.dtype)
		for g, p in zip(grads, params.network.parameters())]
	return torch.cat(flat).detach().cpu().numpy().astype(np.float64)
