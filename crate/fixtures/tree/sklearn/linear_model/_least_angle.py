import numpy as np


def lars_path(
    X,
    y,
    Xy=None,
    *,
    Gram=None,
    max_iter=500,
    alpha_min=0,
    method="lar",
):
    """Compute Least Angle Regression or Lasso path using the LARS algorithm.

    Parameters
    ----------
    X : None or ndarray of shape (n_samples, n_features)
        Input data. When X is None the Gram matrix has to be given,
        so it may be neither None nor False.

    y : None or ndarray of shape (n_samples,)
        Input targets.

    Gram : None, 'auto', bool, ndarray of shape (n_features, n_features), default=None
        Precomputed Gram matrix (X' * X), if ``'auto'``, the Gram
        matrix is precomputed from the given X, if there are more samples
        than features.

    max_iter : int, default=500
        Maximum number of iterations to perform, set to infinity for no limit.

    Returns
    -------
    alphas : ndarray of shape (n_alphas + 1,)
        Maximum of covariances (in absolute value) at each iteration.
    """
    if X is None and Gram is not None:
        raise ValueError("X cannot be None if Gram is not None. Use lars_path_gram to avoid passing X and y.")
    return _lars_path_solver(X=X, y=y, Xy=Xy, Gram=Gram, max_iter=max_iter, alpha_min=alpha_min, method=method)
