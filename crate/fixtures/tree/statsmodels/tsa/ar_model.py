import warnings

from statsmodels.tools.sm_exceptions import SpecificationWarning
from statsmodels.tsa.base import tsa_model


class AutoReg(tsa_model.TimeSeriesModel):
    """
    Autoregressive AR-X(p) model

    Estimate an AR-X model using Conditional Maximum Likelihood (OLS).

    Parameters
    ----------
    endog : array_like
        A 1-d endogenous response variable. The dependent variable.
    lags : {None, int, list[int]}
        The number of lags to include in the model if an integer or the
        list of lag indices to include.
    trend : {"n", "c", "t", "ct"}
        The trend to include in the model.
    seasonal : bool
        Flag indicating whether to include seasonal dummies in the model.
    deterministic : DeterministicProcess
        A deterministic process. When supplied, the trend and seasonal
        settings have no effect. A warning is issued when trend differs
        from "n" and seasonal is also not False.
    """

    def __init__(
        self,
        endog,
        lags,
        trend="c",
        seasonal=False,
        exog=None,
        hold_back=None,
        period=None,
        missing="none",
        *,
        deterministic=None,
        old_names=False,
    ):
        super().__init__(endog, exog, None, None, missing=missing)
        if deterministic is not None and (self.trend != "n" or self.seasonal):
            warnings.warn(
                'When using deterministic, trend must be "n" and seasonal must be False.',
                SpecificationWarning,
                stacklevel=2,
            )
        self._deterministic_reg = deterministic
