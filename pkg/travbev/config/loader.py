from __future__ import annotations
import json
from dataclasses import fields, replace
from pathlib import Path
from typing import Any

from travbev.core.errors import DataIOError, FormatError
from .defaults import Defaults, SECTIONS

def load_config(path:str|Path|None=None, base:Defaults|None=None) -> Defaults:
	"""Load a JSON config with per-module sections on top of base (or Defaults()).

	Missing sections and fields keep their defaults.
	Raises FormatError on unknown sections/fields, ConfigurationError on bad values.
	"""
	config = base or Defaults()
	if path is None:
		return config
	p = Path(path)
	if not p.is_file():
		raise DataIOError(f"Config file not found: {p}")
	try:
		raw = json.loads(p.read_text(encoding="utf-8"))
	except json.JSONDecodeError as e:
		raise FormatError(f"Config {p} is not valid JSON: {e}") from e
	if not isinstance(raw, dict):
		raise FormatError(f"Config {p} must be a JSON object of sections")
	return apply_sections(config, raw)

def apply_sections(config:Defaults, raw:dict[str, Any]) -> Defaults:
	for section, values in raw.items():
		if section not in SECTIONS:
			raise FormatError(f"Unknown config section: {section}")
		if not isinstance(values, dict):
			raise FormatError(f"Config section '{section}' must be an object")
		config = _replace_section(config, section, values)
	return config

def save_config(config:Defaults, path:str|Path) -> None:
	Path(path).write_text(json.dumps(config.to_dict(), indent=2), encoding="utf-8")

## ------ Internal ------ ##
def _replace_section(config:Defaults, section:str, values:dict) -> Defaults:
	section_fields = {f.name: f for f in fields(SECTIONS[section])}
	unknown = set(values) - set(section_fields)
	if unknown:
		raise FormatError(f"Unknown fields in section '{section}': {sorted(unknown)}")
	# JSON has no tuples; tuple-typed fields arrive as lists
	values = {
		k: tuple(v) if isinstance(v, list) and "tuple" in str(section_fields[k].type) else v
		for k, v in values.items()
	}
	# Explicit nulls are kept here (e.g. unbounded queue capacity), unlike CLI overrides
	return replace(config, **{section: replace(getattr(config, section), **values)})
