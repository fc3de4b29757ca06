"""Scikit-learn style estimator facade over the functional core.

These wrappers follow the fit/transform + get_params/set_params contract so
the operators compose with pipelines, grid search and cloning. They are
stateless in the sklearn sense: ``fit`` validates and records attributes for
the fitted cloud, while ``transform`` recomputes on whatever cloud it is
given (the graph depends on the cloud itself, so nothing learned on one cloud
transfers to another).
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .graph import (
    GraphParams,
    SmoothDenoise,
    TrimDenoise,
    build_graph,
    denoise_points,
    extract_hf_points,
    highpass_response,
    variation_scores,
)
from .pipeline import PipelineConfig, UpsamplerPlugin, upsample_cloud
from .spatial import normalize_unit_sphere
from .validation import check_count, check_points


class HighFrequencySelector(BaseEstimator):
    """Select the points with the strongest high-pass graph filter response.

    Parameters
    ----------
    m : int, number of points to keep (top scores, ties to lowest index).
    epsilon : neighborhood ball radius.
    sigma : Gaussian kernel width, defaults to epsilon / 2.
    fallback_k : neighbors wired to otherwise isolated points.
    normalize : score on the unit-sphere-normalized cloud.

    Attributes
    ----------
    scores_ : (N,) variation score of every fitted point.
    indices_ : (m,) selected indices in descending score order.
    """

    def __init__(self, m=256, epsilon=0.5, sigma=None, fallback_k=1,
                 normalize=False):
        self.m = m
        self.epsilon = epsilon
        self.sigma = sigma
        self.fallback_k = fallback_k
        self.normalize = normalize

    def _graph_params(self):
        return GraphParams(epsilon=self.epsilon, sigma=self.sigma,
                           fallback_k=self.fallback_k)

    def _extract(self, X):
        return extract_hf_points(X, self.m, self._graph_params(),
                                 normalize=self.normalize)

    def fit(self, X, y=None):
        X = check_points(X, "X", min_points=2)
        check_count(self.m, "m", 1, X.shape[0])
        self.scores_ = self.score_samples(X)
        self.indices_ = np.argsort(-self.scores_, kind="stable")[: self.m]
        self.n_features_in_ = 3
        return self

    def score_samples(self, X):
        """Variation score (high-pass residual norm) of every point of X."""
        X = check_points(X, "X", min_points=2)
        work = normalize_unit_sphere(X)[0] if self.normalize else X
        graph = build_graph(work, self._graph_params())
        return variation_scores(highpass_response(graph, work))

    def transform(self, X):
        """The (m, 3) highest-scoring points of X, descending by score."""
        return self._extract(check_points(X, "X", min_points=2)).points

    def fit_transform(self, X, y=None):
        self.fit(X)
        return check_points(X)[self.indices_]


class GraphDenoiser(BaseEstimator, TransformerMixin):
    """Remove (trim) or attenuate (smooth) high-frequency noise.

    ``transform`` with the trim policy may return fewer rows than it was
    given; surviving points keep their input order.
    """

    def __init__(self, policy="trim", kappa=3.0, beta=0.5, iterations=1,
                 epsilon=0.5, sigma=None, fallback_k=1):
        self.policy = policy
        self.kappa = kappa
        self.beta = beta
        self.iterations = iterations
        self.epsilon = epsilon
        self.sigma = sigma
        self.fallback_k = fallback_k

    def _policy(self):
        if self.policy == "trim":
            return TrimDenoise(kappa=self.kappa)
        if self.policy == "smooth":
            return SmoothDenoise(beta=self.beta, iterations=self.iterations)
        raise ValueError(f"unknown policy {self.policy!r}")

    def fit(self, X, y=None):
        check_points(X, "X", min_points=2)
        self._policy()
        self.n_features_in_ = 3
        return self

    def transform(self, X):
        params = GraphParams(epsilon=self.epsilon, sigma=self.sigma,
                             fallback_k=self.fallback_k)
        return denoise_points(X, params, self._policy())


class PatchFusionUpsampler(BaseEstimator, TransformerMixin):
    """Upsample a cloud to ratio * N points through overlapping patches.

    ``upsampler`` is a builtin name ("duplicate" or "midpoint") or a command
    sequence for an external plugin process.
    """

    def __init__(self, ratio=4, patch_size=256, coverage_factor=3.0,
                 upsampler="duplicate", denoise="trim", kappa=3.0, beta=0.5,
                 iterations=1, epsilon=0.5, sigma=None, fallback_k=1,
                 plugin_timeout=60.0, seed=0, workers=1):
        self.ratio = ratio
        self.patch_size = patch_size
        self.coverage_factor = coverage_factor
        self.upsampler = upsampler
        self.denoise = denoise
        self.kappa = kappa
        self.beta = beta
        self.iterations = iterations
        self.epsilon = epsilon
        self.sigma = sigma
        self.fallback_k = fallback_k
        self.plugin_timeout = plugin_timeout
        self.seed = seed
        self.workers = workers

    def _config(self):
        if isinstance(self.upsampler, str):
            upsampler = self.upsampler
        else:
            upsampler = UpsamplerPlugin(argv=tuple(self.upsampler),
                                        timeout=self.plugin_timeout)
        if self.denoise is None:
            policy = None
        elif self.denoise == "trim":
            policy = TrimDenoise(kappa=self.kappa)
        elif self.denoise == "smooth":
            policy = SmoothDenoise(beta=self.beta, iterations=self.iterations)
        else:
            raise ValueError(f"unknown denoise {self.denoise!r}")
        return PipelineConfig(
            patch_size=self.patch_size, ratio=self.ratio,
            coverage_factor=self.coverage_factor, denoise=policy,
            graph=GraphParams(epsilon=self.epsilon, sigma=self.sigma,
                              fallback_k=self.fallback_k),
            upsampler=upsampler, seed=self.seed, workers=self.workers,
        )

    def fit(self, X, y=None):
        check_points(X, "X", min_points=self.patch_size)
        self._config()
        self.n_features_in_ = 3
        return self

    def transform(self, X):
        return upsample_cloud(X, self._config())

    def predict(self, X):
        """Alias for transform, for predict-shaped pipelines."""
        return self.transform(X)
