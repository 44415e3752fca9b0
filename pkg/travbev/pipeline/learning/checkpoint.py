"""
Checkpoint layout:

	b"TRAVBEV1"
	uint32 LE header length, JSON header {architecture, seed, format_version, shapes}
	float32 LE parameter block (named_parameters order)
	uint32 LE CRC32 of everything above
"""
from __future__ import annotations
import json
import logging
import struct
import zlib
from pathlib import Path

import numpy as np

from travbev.core.errors import CheckpointError, ConfigurationError, DataIOError
from travbev.pipeline.learning.model import ARCHITECTURE_VERSION, Architecture, ModelParams, init_params

logger = logging.getLogger(__name__)

MAGIC = b"TRAVBEV1"
FORMAT_VERSION = 1
_U32 = struct.Struct("<I")

def save(params:ModelParams, path:str|Path) -> None:
	header = {
		"format_version": FORMAT_VERSION,
		"architecture": params.architecture.to_dict(),
		"seed": params.seed,
		"shapes": [[name, list(shape)] for name, shape in params.named_shapes()],
	}
	head = json.dumps(header, sort_keys=True).encode("utf-8")
	body = MAGIC + _U32.pack(len(head)) + head + params.flat().astype("<f4").tobytes()
	p = Path(path)
	p.parent.mkdir(parents=True, exist_ok=True)
	try:
		p.write_bytes(body + _U32.pack(zlib.crc32(body)))
	except OSError as e:
		raise DataIOError(f"Failed to write {p}: {e}") from e
	logger.debug("Saved %d parameters to %s", params.size, p)

def load(path:str|Path, expected_dim:int|None=None) -> ModelParams:
	"""
	Read a checkpoint. expected_dim, when given, must equal the stored
	embedding dimension.
	"""
	p = Path(path)
	if not p.exists():
		raise DataIOError(f"File not found: {p}")
	try:
		blob = p.read_bytes()
	except OSError as e:
		raise DataIOError(f"Failed to load {p}: {e}") from e

	if len(blob) < len(MAGIC) or blob[:len(MAGIC)] != MAGIC:
		raise CheckpointError(f"{p}: bad magic bytes")
	if len(blob) < len(MAGIC) + 2*_U32.size:
		raise CheckpointError(f"{p}: truncated checkpoint")
	body, (crc,) = blob[:-_U32.size], _U32.unpack(blob[-_U32.size:])
	if zlib.crc32(body) != crc:
		raise CheckpointError(f"{p}: CRC mismatch (truncated or corrupted)")

	(n,) = _U32.unpack_from(body, len(MAGIC))
	start = len(MAGIC) + _U32.size
	try:
		header = json.loads(body[start:start + n].decode("utf-8"))
		arch = Architecture.from_dict(header["architecture"])
		seed = int(header["seed"])
		version = int(header["format_version"])
	except (ValueError, KeyError, TypeError, UnicodeDecodeError) as e:
		raise CheckpointError(f"{p}: unreadable header: {e}") from e
	if version != FORMAT_VERSION or arch.version != ARCHITECTURE_VERSION:
		raise CheckpointError(
			f"{p}: checkpoint version {version}/{arch.version} is not {FORMAT_VERSION}/{ARCHITECTURE_VERSION}")
	if expected_dim is not None and arch.embedding_dim != expected_dim:
		raise ConfigurationError(f"{p}: checkpoint has D={arch.embedding_dim}, config expects D={expected_dim}")

	params = init_params(arch, seed)
	stored = [(name, tuple(shape)) for name, shape in header.get("shapes", [])]
	if stored != params.named_shapes():
		raise CheckpointError(f"{p}: parameter shapes do not match the architecture header")
	block = body[start + n:]
	if len(block) != params.size*4:
		raise CheckpointError(f"{p}: expected {params.size} parameters, found {len(block)//4}")
	params.load_flat(np.frombuffer(block, dtype="<f4"))
	return params
