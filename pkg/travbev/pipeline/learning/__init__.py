from travbev.pipeline.learning.model import (
	Architecture,
	FeatureMap,
	ModelParams,
	TraversabilityNet,
	backward,
	bev_tensor,
	embed,
	forward,
	init_params,
)
from travbev.pipeline.learning import checkpoint
from travbev.pipeline.learning.prototypes import (
	FeatureQueue,
	KMeansResult,
	PrototypeHierarchy,
	build_hierarchy,
	kmeans,
)
from travbev.pipeline.learning.losses import (
	assign_indices,
	assign_unlabeled,
	cluster_loss,
	contrast_loss,
	proto_loss,
	psa_perturb,
	total_loss,
	unlabel_loss,
)
from travbev.pipeline.learning.dataset import FrameDataset, augment_pair, sample_class_features, split_index
from travbev.pipeline.learning.training import TrainResult, fit, save_history, trained_prototypes

__all__ = [
	"Architecture",
	"FeatureMap",
	"FeatureQueue",
	"FrameDataset",
	"KMeansResult",
	"ModelParams",
	"PrototypeHierarchy",
	"TrainResult",
	"TraversabilityNet",
	"assign_indices",
	"assign_unlabeled",
	"augment_pair",
	"backward",
	"bev_tensor",
	"build_hierarchy",
	"checkpoint",
	"cluster_loss",
	"contrast_loss",
	"embed",
	"fit",
	"forward",
	"init_params",
	"kmeans",
	"proto_loss",
	"psa_perturb",
	"sample_class_features",
	"save_history",
	"split_index",
	"total_loss",
	"trained_prototypes",
	"unlabel_loss",
]
