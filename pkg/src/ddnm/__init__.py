"""Sequential Bayesian forecasting for multivariate time series using
dynamic dependence networks, with model averaging and portfolio rules."""

__version__ = "0.1.0"
