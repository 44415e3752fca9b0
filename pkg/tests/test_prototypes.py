from __future__ import annotations
from itertools import product
import logging

import numpy as np
import pytest

from travbev.core.errors import ClusteringError, ConfigurationError
from travbev.pipeline.learning import FeatureQueue, PrototypeHierarchy, build_hierarchy, kmeans

def _filled(tag:str, n:int, d:int, rng) -> FeatureQueue:
	q = FeatureQueue(tag, 1000)
	q.push(rng.normal(size=(n, d)))
	return q

class TestFeatureQueue:
	def test_fifo_eviction(self):
		q = FeatureQueue("trav", 3)
		q.push(np.eye(5))
		assert len(q) == 3
		np.testing.assert_array_equal(q.vectors(), np.eye(5)[2:])

	def test_push_normalizes(self):
		q = FeatureQueue("untrav", 4)
		q.push([[3.0, 4.0]])
		np.testing.assert_allclose(q.vectors(), [[0.6, 0.8]])

	def test_dimension_is_fixed(self):
		q = FeatureQueue("trav", 4, dim=2)
		with pytest.raises(ConfigurationError):
			q.push(np.ones((1, 3)))

	def test_empty_push_is_ignored(self):
		q = FeatureQueue("trav", 4)
		q.push(np.zeros((0, 3)))
		assert len(q) == 0 and q.dim is None

	def test_unknown_tag(self):
		with pytest.raises(ConfigurationError):
			FeatureQueue("unlabel", 4)

class TestKMeans:
	def test_recovers_blob_directions(self, rng):
		means = np.eye(3)
		points = np.concatenate([m + 0.01*rng.normal(size=(50, 3)) for m in means])
		result = kmeans(points, 3, rng)
		np.testing.assert_allclose(np.linalg.norm(result.centroids, axis=1), 1.0)
		assert (result.centroids @ means.T).max(axis=0).min() > 0.999
		assert len(np.unique(result.assignments)) == 3

	def test_too_few_points(self, rng):
		with pytest.raises(ClusteringError):
			kmeans(rng.normal(size=(3, 2)), 4, rng)

	def test_inertia_matches_best_partition(self, rng):
		points = np.concatenate([rng.normal(size=(3, 2))*0.1, rng.normal(size=(3, 2))*0.1 + [5.0, 5.0]])
		best = np.inf
		for labels in product((0, 1), repeat=len(points)):
			labels = np.array(labels)
			if len(set(labels)) < 2:
				continue
			sse = sum(((points[labels == c] - points[labels == c].mean(axis=0))**2).sum() for c in (0, 1))
			best = min(best, sse)
		assert kmeans(points, 2, rng, n_init=5).inertia == pytest.approx(best)

	def test_seeded_runs_agree(self, rng):
		points = rng.normal(size=(40, 4))
		a, b = kmeans(points, 5, 11), kmeans(points, 5, 11)
		np.testing.assert_array_equal(a.centroids, b.centroids)

class TestHierarchy:
	def test_shapes(self, rng):
		h = build_hierarchy(_filled("trav", 20, 4, rng), _filled("untrav", 20, 4, rng), (2, 4), rng)
		assert h.groups == 2
		assert h.of("trav", 0).shape == (2, 4)
		assert h.of("untrav", 1).shape == (4, 4)
		assert h.union(1).shape == (8, 4)
		np.testing.assert_allclose(np.linalg.norm(h.union(1), axis=1), 1.0)

	def test_deferred_until_queues_fill(self, rng, caplog):
		with caplog.at_level(logging.INFO, logger="travbev.pipeline.learning.prototypes"):
			h = build_hierarchy(_filled("trav", 20, 4, rng), _filled("untrav", 3, 4, rng), (2, 4), rng)
		assert h is None
		assert "deferred" in caplog.text

	def test_sizes_must_increase(self):
		p = np.eye(2)
		with pytest.raises(ConfigurationError):
			PrototypeHierarchy((2, 2), (p, p), (p, p))

class TestSingleCluster:
	def test_k1_is_normalized_mean(self, rng):
		points = rng.normal(size=(30, 4)) + [2.0, 0.0, 0.0, 0.0]
		mean = points.mean(axis=0)
		np.testing.assert_allclose(kmeans(points, 1, rng).centroids[0], mean/np.linalg.norm(mean), atol=1e-9)
