from travbev.pipeline.online.queue import PrototypeQueue, update_prototypes
from travbev.pipeline.online.maps import (
	TraversabilityMap,
	extract_traversed_features,
	save_traversability,
	traversability_map,
)
from travbev.pipeline.online.engine import STAGES, OnlineEngine, Snapshot

__all__ = [
	"OnlineEngine",
	"PrototypeQueue",
	"STAGES",
	"Snapshot",
	"TraversabilityMap",
	"extract_traversed_features",
	"save_traversability",
	"traversability_map",
	"update_prototypes",
]
