from ..base import BaseEstimator, ClusterMixin
from ..metrics.pairwise import pairwise_kernels
from ..neighbors import NearestNeighbors, kneighbors_graph


class SpectralClustering(ClusterMixin, BaseEstimator):
    """Apply clustering to a projection of the normalized Laplacian.

    Parameters
    ----------
    n_clusters : int, default=8
        The dimension of the projection subspace.

    gamma : float, default=1.0
        Kernel coefficient for rbf, poly, sigmoid, laplacian and chi2 kernels.
        Ignored for ``affinity='nearest_neighbors'``.

    affinity : str or callable, default='rbf'
        How to construct the affinity matrix. One of 'nearest_neighbors',
        'rbf', 'precomputed' or 'precomputed_nearest_neighbors', or a
        kernel name understood by pairwise_kernels.

    n_neighbors : int, default=10
        Number of neighbors to use when constructing the nearest neighbors
        graph.
    """

    def __init__(self, n_clusters=8, *, gamma=1.0, affinity="rbf", n_neighbors=10, n_jobs=None):
        self.n_clusters = n_clusters
        self.gamma = gamma
        self.affinity = affinity
        self.n_neighbors = n_neighbors
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        if self.affinity == "nearest_neighbors":
            connectivity = kneighbors_graph(X, n_neighbors=self.n_neighbors, include_self=True, n_jobs=self.n_jobs)
            self.affinity_matrix_ = 0.5 * (connectivity + connectivity.T)
        elif self.affinity == "precomputed_nearest_neighbors":
            estimator = NearestNeighbors(n_neighbors=self.n_neighbors, n_jobs=self.n_jobs, metric="precomputed").fit(X)
            connectivity = estimator.kneighbors_graph(X=X, mode="connectivity")
            self.affinity_matrix_ = 0.5 * (connectivity + connectivity.T)
        elif self.affinity == "precomputed":
            self.affinity_matrix_ = X
        else:
            params = self.kernel_params
            if params is None:
                params = {}
            if not callable(self.affinity):
                params["gamma"] = self.gamma
                params["degree"] = self.degree
                params["coef0"] = self.coef0
            self.affinity_matrix_ = pairwise_kernels(X, metric=self.affinity, filter_params=True, **params)
        return self
