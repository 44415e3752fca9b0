from __future__ import annotations
from dataclasses import dataclass, field, replace, asdict, fields

from travbev.core.errors import ConfigurationError, FormatError

LOSS_TERMS = ("contrast", "cluster", "unlabel")
LOSS_VARIANTS = ("literal", "standard")

def _require(cond:bool, msg:str) -> None:
	if not cond:
		raise ConfigurationError(msg)

@dataclass(frozen=True)
class BevConfig:
	## --- Grid --- ##
	width_cells : int = 300
	height_cells : int = 300
	resolution : float = 0.2 # meters/cell
	## --- Accumulation window --- ##
	window_frames : int = 50
	max_range : float = 40.0 # meters
	cell_cap : int = 32 # points kept per cell, newest first

	def __post_init__(self) -> None:
		_require(self.width_cells > 0 and self.height_cells > 0, "grid dimensions must be positive")
		_require(self.resolution > 0, "resolution must be positive")
		_require(self.window_frames >= 1, "window_frames must be >= 1")
		_require(self.max_range > 0, "max_range must be positive")
		_require(self.cell_cap >= 1, "cell_cap must be >= 1")

@dataclass(frozen=True)
class VehicleConfig:
	# Wheel-ground contact offsets in the vehicle frame (x forward, y left)
	front_x : float = 1.4
	rear_x : float = -1.4
	left_y : float = 0.8
	right_y : float = -0.8
	contact_z : float = 0.0

@dataclass(frozen=True)
class AutolabelConfig:
	horizon : float = 10.0 # seconds of trajectory on either side of a frame

	def __post_init__(self) -> None:
		_require(self.horizon >= 0, "horizon must be >= 0")

@dataclass(frozen=True)
class ModelConfig:
	embedding_dim : int = 16
	widths : tuple[int, ...] = (16, 32, 48, 64) # one per stride-2 encoder block
	seed : int = 0

	def __post_init__(self) -> None:
		_require(self.embedding_dim >= 1, "embedding_dim must be >= 1")
		_require(len(self.widths) >= 1 and all(w > 0 for w in self.widths), "widths must be positive")

@dataclass(frozen=True)
class TrainConfig:
	## --- Schedule --- ##
	epochs : int = 60
	batch_size : int = 4
	learning_rate : float = 1e-4
	lr_power : float = 0.9 # polynomial decay to 0 at the final epoch
	lambda_ramp_epochs : int = 60 # lambda = min(1, epoch/ramp)
	train_fraction : float = 0.6 # leading fraction of each sequence used for training
	## --- Losses --- ##
	temperature : float = 0.05
	negatives : int = 8 # r, negative prototypes per sample
	psa_sigma : float = 0.1
	loss_terms : tuple[str, ...] = LOSS_TERMS
	contrast_variant : str = "literal"
	proto_variant : str = "standard"
	## --- Sampling / prototypes --- ##
	samples_per_class : int = 256
	queue_capacity : int = 4096
	cluster_sizes : tuple[int, ...] = (50, 100, 500)
	kmeans_max_iters : int = 100
	augment : bool = True # random flips and cyclic shifts of each BEV with its labels
	## --- Exported to the online stage --- ##
	momentum : float = 0.99
	alpha : float = 0.9
	seed : int = 0

	def __post_init__(self) -> None:
		_require(self.epochs >= 0, "epochs must be >= 0")
		_require(self.batch_size >= 1, "batch_size must be >= 1")
		_require(self.learning_rate > 0, "learning_rate must be positive")
		_require(self.lambda_ramp_epochs >= 1, "lambda_ramp_epochs must be >= 1")
		_require(0 < self.train_fraction <= 1, "train_fraction must be in (0, 1]")
		_require(self.temperature > 0, "temperature must be positive")
		_require(self.negatives >= 1, "negatives (r) must be >= 1")
		_require(self.psa_sigma >= 0, "psa_sigma must be >= 0")
		_require(set(self.loss_terms) <= set(LOSS_TERMS) and len(self.loss_terms) > 0,
			f"loss_terms must be a nonempty subset of {LOSS_TERMS}")
		_require(self.contrast_variant in LOSS_VARIANTS, f"contrast_variant must be one of {LOSS_VARIANTS}")
		_require(self.proto_variant in LOSS_VARIANTS, f"proto_variant must be one of {LOSS_VARIANTS}")
		_require(self.samples_per_class >= 1, "samples_per_class must be >= 1")
		_require(self.queue_capacity >= 1, "queue_capacity must be >= 1")
		_require(len(self.cluster_sizes) >= 1 and all(k >= 1 for k in self.cluster_sizes),
			"cluster_sizes must be positive")
		_require(all(a < b for a, b in zip(self.cluster_sizes, self.cluster_sizes[1:])),
			"cluster_sizes must be strictly increasing")
		_require(0 <= self.momentum <= 1, "momentum must be in [0, 1]")
		_require(-1 <= self.alpha <= 1, "alpha must be a cosine in [-1, 1]")

	def lambda_at(self, epoch:int) -> float:
		return min(1.0, epoch/self.lambda_ramp_epochs)

@dataclass(frozen=True)
class OnlineConfig:
	alpha : float = 0.9 # new-prototype threshold
	momentum : float = 0.99
	capacity : int | None = 64 # None => unbounded
	samples_per_frame : int = 64
	horizon : float = 5.0 # seconds of past trajectory sampled per frame
	seed : int = 0

	def __post_init__(self) -> None:
		_require(-1 <= self.alpha <= 1, "alpha must be a cosine in [-1, 1]")
		_require(0 <= self.momentum <= 1, "momentum must be in [0, 1]")
		_require(self.capacity is None or self.capacity >= 1, "capacity must be >= 1 or null")
		_require(self.samples_per_frame >= 1, "samples_per_frame must be >= 1")
		_require(self.horizon >= 0, "horizon must be >= 0")

@dataclass(frozen=True)
class EvalConfig:
	holdout_fraction : float = 0.6 # frames before this fraction are not scored

	def __post_init__(self) -> None:
		_require(0 <= self.holdout_fraction < 1, "holdout_fraction must be in [0, 1)")

SECTIONS = {
	"bev": BevConfig,
	"vehicle": VehicleConfig,
	"autolabel": AutolabelConfig,
	"model": ModelConfig,
	"train": TrainConfig,
	"online": OnlineConfig,
	"eval": EvalConfig,
}

@dataclass(frozen=True)
class Defaults:
	bev : BevConfig = field(default_factory=BevConfig)
	vehicle : VehicleConfig = field(default_factory=VehicleConfig)
	autolabel : AutolabelConfig = field(default_factory=AutolabelConfig)
	model : ModelConfig = field(default_factory=ModelConfig)
	train : TrainConfig = field(default_factory=TrainConfig)
	online : OnlineConfig = field(default_factory=OnlineConfig)
	eval : EvalConfig = field(default_factory=EvalConfig)

	@classmethod
	def desk_scale(cls) -> "Defaults":
		"""
		Preset for CPU-sized runs: small hierarchy, 20 epochs, faster ramp.
		The higher learning rate compensates for the short schedule. Contrast
		uses the standard denominator at tau 0.1: with the literal one the two
		classes collapse onto a pair of antipodal points within a few epochs.
		"""
		base = cls()
		return base.override("train", cluster_sizes=(4, 8, 16), epochs=20,
			lambda_ramp_epochs=20, learning_rate=1e-3, contrast_variant="standard", temperature=0.1)

	def override(self, section:str, **values) -> "Defaults":
		"""
		Return a copy with fields of one section replaced.
		None values are ignored so unset CLI flags fall through.
		"""
		if section not in SECTIONS:
			raise FormatError(f"Unknown config section: {section}")
		current = getattr(self, section)
		values = {k: v for k, v in values.items() if v is not None}
		known = {f.name for f in fields(current)}
		unknown = set(values) - known
		if unknown:
			raise FormatError(f"Unknown fields in section '{section}': {sorted(unknown)}")
		return replace(self, **{section: replace(current, **values)})

	def to_dict(self) -> dict:
		return asdict(self)
