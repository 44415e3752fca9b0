"""
Loss terms on sampled pixel features. Features are (N, D) torch tensors of
unit-norm rows; prototypes come from a PrototypeHierarchy and are constants.

Terms that cannot be evaluated for a batch (missing samples or prototypes)
contribute zero and increment a named counter in `skips`.
"""
from __future__ import annotations
import logging
from collections import Counter
from typing import Mapping

import numpy as np
import torch

from travbev.config import LOSS_TERMS
from travbev.pipeline.learning.prototypes import CLASSES, PrototypeHierarchy

logger = logging.getLogger(__name__)

def _zero(like:torch.Tensor) -> torch.Tensor:
	return torch.zeros((), dtype=like.dtype)

def _skip(skips:Counter|None, name:str) -> None:
	if skips is not None:
		skips[name] += 1
	logger.debug("Skipped loss term: %s", name)

def _const(array:np.ndarray, like:torch.Tensor) -> torch.Tensor:
	return torch.as_tensor(np.asarray(array), dtype=like.dtype)

## ------ Public API ------ ##
def contrast_loss(f_trav:torch.Tensor, f_untrav:torch.Tensor, tau:float,
		variant:str="literal", skips:Counter|None=None) -> torch.Tensor:
	"""
	Mean over ordered traversable pairs (i, j), i != j, of
	-log(exp(z_i.z_j/tau) / sum_k exp(z_i.z_k/tau)), k over untraversable samples.
	The "standard" variant adds the positive pair to the denominator.
	"""
	if len(f_trav) < 2 or len(f_untrav) < 1:
		_skip(skips, "contrast")
		return _zero(f_trav)
	pos = f_trav @ f_trav.T/tau
	lse_neg = torch.logsumexp(f_trav @ f_untrav.T/tau, dim=1, keepdim=True)
	match variant:
		case "literal":
			log_denom = lse_neg.expand_as(pos)
		case "standard":
			log_denom = torch.logaddexp(pos, lse_neg)
		case _:
			raise ValueError(f"Unknown contrast variant: {variant}")
	off_diag = ~torch.eye(len(f_trav), dtype=torch.bool)
	return -(pos - log_denom)[off_diag].mean()

def proto_loss(f:torch.Tensor, hierarchy:PrototypeHierarchy|None, cls:str, r:int, tau:float,
		rng:np.random.Generator, variant:str="standard", skips:Counter|None=None) -> torch.Tensor:
	"""
	Prototype InfoNCE: for each sample and group, the nearest own-class
	prototype is the positive and r opposite-class prototypes drawn without
	replacement are the negatives.
	"""
	if hierarchy is None or len(f) == 0:
		_skip(skips, f"cluster_{cls}")
		return _zero(f)
	other = CLASSES[1 - CLASSES.index(cls)]
	per_group = []
	for m in range(hierarchy.groups):
		own = _const(hierarchy.of(cls, m), f)
		opp = _const(hierarchy.of(other, m), f)
		if len(opp) == 0 or len(own) == 0:
			_skip(skips, f"cluster_{cls}")
			continue
		pos = (f @ own.T/tau).max(dim=1, keepdim=True).values
		n_neg = min(r, len(opp))
		picks = np.argsort(rng.random((len(f), len(opp))), axis=1)[:, :n_neg]
		neg = torch.gather(f @ opp.T/tau, 1, torch.from_numpy(picks))
		match variant:
			case "standard":
				log_denom = torch.logsumexp(torch.cat([pos, neg], dim=1), dim=1, keepdim=True)
			case "literal":
				log_denom = torch.logsumexp(neg, dim=1, keepdim=True)
			case _:
				raise ValueError(f"Unknown prototype variant: {variant}")
		per_group.append(-(pos - log_denom).mean())
	if not per_group:
		return _zero(f)
	return torch.stack(per_group).mean()

def cluster_loss(f_trav:torch.Tensor, f_untrav:torch.Tensor, hierarchy:PrototypeHierarchy|None, r:int,
		tau:float, rng:np.random.Generator, variant:str="standard", skips:Counter|None=None) -> torch.Tensor:
	return proto_loss(f_trav, hierarchy, "trav", r, tau, rng, variant, skips) \
		+ proto_loss(f_untrav, hierarchy, "untrav", r, tau, rng, variant, skips)

def assign_indices(z:torch.Tensor|np.ndarray, hierarchy:PrototypeHierarchy, m:int) -> np.ndarray:
	"""
	Index into hierarchy.union(m) of the most cosine-similar prototype for
	each row of z. Ties resolve to the lowest index.
	"""
	zz = z.detach().cpu().numpy() if isinstance(z, torch.Tensor) else np.asarray(z, dtype=np.float64)
	zz = np.atleast_2d(zz)
	norms = np.maximum(np.linalg.norm(zz, axis=1, keepdims=True), 1e-12)
	return np.argmax((zz/norms) @ hierarchy.union(m).T, axis=1)

def assign_unlabeled(z:np.ndarray, hierarchy:PrototypeHierarchy, m:int) -> np.ndarray:
	"""The prototype of group m (either class) that z is assigned to."""
	return hierarchy.union(m)[assign_indices(z, hierarchy, m)[0]]

def psa_perturb(z:torch.Tensor|np.ndarray, sigma:float, rng:np.random.Generator) -> torch.Tensor|np.ndarray:
	"""z + sigma*eps with standard normal eps. The result is not renormalized."""
	noise = rng.standard_normal(tuple(z.shape))
	if isinstance(z, torch.Tensor):
		return z + sigma*torch.as_tensor(noise, dtype=z.dtype)
	return np.asarray(z, dtype=np.float64) + sigma*noise

def unlabel_loss(f_unlabel:torch.Tensor, hierarchy:PrototypeHierarchy|None, sigma:float,
		rng:np.random.Generator, skips:Counter|None=None) -> torch.Tensor:
	"""
	Mean over samples and groups of the squared distance between the
	perturbed sample and its assigned prototype. Assignment uses the
	unperturbed sample.
	"""
	if hierarchy is None or len(f_unlabel) == 0:
		_skip(skips, "unlabel")
		return _zero(f_unlabel)
	per_group = []
	for m in range(hierarchy.groups):
		protos = hierarchy.union(m)
		target = _const(protos[assign_indices(f_unlabel, hierarchy, m)], f_unlabel)
		v = psa_perturb(f_unlabel, sigma, rng)
		per_group.append(((v - target)**2).sum(dim=1).mean())
	return torch.stack(per_group).mean()

def total_loss(parts:Mapping[str, torch.Tensor|float], lam:float, terms:tuple[str, ...]=LOSS_TERMS):
	"""contrast + lam*(cluster + unlabel), over the enabled terms only."""
	def part(name:str):
		return parts.get(name, 0.0) if name in terms else 0.0
	return part("contrast") + lam*(part("cluster") + part("unlabel"))
