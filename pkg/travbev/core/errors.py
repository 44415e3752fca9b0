"""Error hierarchy shared by every pipeline stage.

Each error carries a category name and the exit code the CLI returns for it.
"""
from __future__ import annotations


class TravbevError(Exception):
	category: str = "error"
	exit_code: int = 1


class ConfigurationError(TravbevError, ValueError):
	category = "configuration"
	exit_code = 2


class DataIOError(TravbevError, IOError):
	category = "io"
	exit_code = 3


class FormatError(TravbevError, ValueError):
	category = "format"
	exit_code = 4


class SequenceError(TravbevError, ValueError):
	category = "sequence"
	exit_code = 5


class CheckpointError(TravbevError, IOError):
	category = "checkpoint"
	exit_code = 6


class ClusteringError(TravbevError, ValueError):
	category = "clustering"
	exit_code = 7


class UndefinedMetricError(TravbevError, ValueError):
	category = "metric"
	exit_code = 8


class TrainingDivergedError(TravbevError, RuntimeError):
	category = "training"
	exit_code = 9
