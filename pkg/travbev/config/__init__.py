from .defaults import (
	LOSS_TERMS,
	Defaults,
	BevConfig,
	VehicleConfig,
	AutolabelConfig,
	ModelConfig,
	TrainConfig,
	OnlineConfig,
	EvalConfig,
)
from .loader import load_config, save_config, apply_sections

__all__ = [
	"LOSS_TERMS", "Defaults", "BevConfig", "VehicleConfig", "AutolabelConfig", "ModelConfig",
	"TrainConfig", "OnlineConfig", "EvalConfig", "load_config", "save_config", "apply_sections",
]
