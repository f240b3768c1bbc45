# -*- coding: utf-8 -*-
"""Per-window autoregressive integrated (ARI) baseline.

For every sample with a full history window an AR(p) model with intercept is
fitted by conditional least squares on the d-fold differenced history and the
one-step-ahead forecast residual is the sample's error (delta).
"""

import logging

import numpy as np

from numpy.lib import stride_tricks

from bpmartifacts import definitions
from bpmartifacts import interface
from bpmartifacts import records


logger = logging.getLogger(__name__)

# Normal equations with a larger condition number are treated as singular.
MAXIMUM_CONDITION_NUMBER = 1e10


class ARIMAConfig(object):
  """ARIMA baseline configuration.

  Attributes:
    d (int): differencing order.
    p (int): autoregressive order.
    q (int): moving average order, always 0.
    window_length (int): number of history samples per fit.
  """

  def __init__(self, p=3, d=1, q=0, window_length=60):
    """Initializes an ARIMA baseline configuration.

    Args:
      p (Optional[int]): autoregressive order.
      d (Optional[int]): differencing order.
      q (Optional[int]): moving average order.
      window_length (Optional[int]): number of history samples per fit.

    Raises:
      ValueError: if the orders are not supported or the window is too short
          to fit the autoregressive order.
    """
    if p < 1:
      raise ValueError(f'Unsupported autoregressive order: {p:d}')

    if d not in (0, 1):
      raise ValueError(f'Unsupported differencing order: {d:d}')

    if q != 0:
      raise ValueError(f'Unsupported moving average order: {q:d}')

    if window_length - d < p + 5:
      raise ValueError((
          f'Window length: {window_length:d} too short for autoregressive '
          f'order: {p:d}'))

    super(ARIMAConfig, self).__init__()
    self.d = d
    self.p = p
    self.q = q
    self.window_length = window_length


class ARFit(object):
  """Autoregressive model fit.

  Attributes:
    coefficients (numpy.ndarray): coefficients of y[t - 1] .. y[t - p].
    intercept (float): intercept.
    is_fallback (bool): True if the normal equations were singular and the
        fit is the persistence model.
    residuals (numpy.ndarray): in-sample residuals.
  """

  def __init__(self, intercept, coefficients, residuals, is_fallback=False):
    """Initializes an autoregressive model fit.

    Args:
      intercept (float): intercept.
      coefficients (numpy.ndarray): coefficients.
      residuals (numpy.ndarray): in-sample residuals.
      is_fallback (Optional[bool]): True for the persistence model.
    """
    super(ARFit, self).__init__()
    self.coefficients = coefficients
    self.intercept = intercept
    self.is_fallback = is_fallback
    self.residuals = residuals

  def Forecast(self, series):
    """Forecasts the value following a series.

    Args:
      series (numpy.ndarray): series of at least p values.

    Returns:
      float: one-step-ahead forecast.
    """
    order = self.coefficients.size
    lagged_values = series[::-1][:order]
    return float(self.intercept + self.coefficients @ lagged_values)


def Difference(series, d):
  """Differences a series d times.

  Args:
    series (array_like): series.
    d (int): differencing order.

  Returns:
    numpy.ndarray: differenced series.

  Raises:
    ValueError: if the series has no more than d values.
  """
  series = np.asarray(series, dtype=np.float64).reshape(-1)
  if series.size <= d:
    raise ValueError((
        f'Series of: {series.size:d} values too short for differencing '
        f'order: {d:d}'))

  if d == 0:
    return series.copy()

  return np.diff(series, n=d)


def FitAR(series, p):
  """Fits an AR(p) model with intercept by conditional least squares.

  The normal equations are solved by Gaussian elimination with partial
  pivoting. When they are singular or ill-conditioned the persistence model,
  which predicts the last value, is returned instead.

  Args:
    series (array_like): series.
    p (int): autoregressive order.

  Returns:
    ARFit: model fit.

  Raises:
    ValueError: if the series has fewer than p + 5 values.
  """
  series = np.asarray(series, dtype=np.float64).reshape(-1)
  if series.size < p + 5:
    raise ValueError((
        f'Series of: {series.size:d} values too short for autoregressive '
        f'order: {p:d}'))

  # Row t holds y[t - 1] .. y[t - p] for t = p .. n - 1.
  lagged_values = stride_tricks.sliding_window_view(series[:-1], p)[:, ::-1]
  targets = series[p:]
  design = np.column_stack([np.ones(targets.size), lagged_values])

  normal_matrix = design.T @ design
  normal_vector = design.T @ targets

  solution = None
  condition_number = np.linalg.cond(normal_matrix)
  if np.isfinite(condition_number) and (
      condition_number <= MAXIMUM_CONDITION_NUMBER):
    try:
      solution = np.linalg.solve(normal_matrix, normal_vector)
    except np.linalg.LinAlgError:
      pass

  if solution is None:
    coefficients = np.zeros(p, dtype=np.float64)
    coefficients[0] = 1.0
    residuals = targets - lagged_values[:, 0]
    return ARFit(0.0, coefficients, residuals, is_fallback=True)

  residuals = targets - design @ solution
  return ARFit(float(solution[0]), solution[1:], residuals)


def ARIMADeltaTrace(record, arima_config):
  """Computes the one-step-ahead forecast error (delta) trace of a record.

  Args:
    record (Record): scaled record.
    arima_config (ARIMAConfig): ARIMA baseline configuration.

  Returns:
    DeltaTrace: per-sample absolute forecast errors, UNDEFINED for samples
        without a full MISSING-free history window or MISSING themselves.
  """
  values = record.values
  number_of_samples = values.size
  window_length = arima_config.window_length

  deltas = np.full(number_of_samples, np.nan, dtype=np.float64)
  number_of_fallbacks = 0

  missing_counts = np.concatenate([
      [0], np.cumsum(record.is_missing, dtype=np.int64)])

  for index in range(window_length, number_of_samples):
    if np.isnan(values[index]):
      continue

    if missing_counts[index] != missing_counts[index - window_length]:
      continue

    history = values[index - window_length:index]
    differenced_history = Difference(history, arima_config.d)
    fit = FitAR(differenced_history, arima_config.p)

    forecast = fit.Forecast(differenced_history)
    if arima_config.d == 1:
      forecast += history[-1]

    deltas[index] = abs(forecast - values[index])

    if fit.is_fallback:
      number_of_fallbacks += 1
      logger.debug((
          f'Record: {record.record_identifier:s} sample: {index:d} fell back '
          f'to persistence forecast'))

  if number_of_fallbacks:
    logger.info((
        f'Record: {record.record_identifier:s} fell back to persistence '
        f'forecast in: {number_of_fallbacks:d} windows'))

  return records.DeltaTrace(
      record.record_identifier, deltas, number_of_fallbacks=number_of_fallbacks)


class ARIMADeltaTraceGenerator(interface.DeltaTraceGenerator):
  """Delta trace generator backed by the per-window ARIMA baseline."""

  def __init__(self, arima_config):
    """Initializes an ARIMA delta trace generator.

    Args:
      arima_config (ARIMAConfig): ARIMA baseline configuration.
    """
    super(ARIMADeltaTraceGenerator, self).__init__(
        definitions.DETECTOR_KIND_ARIMA)
    self._arima_config = arima_config

  def GenerateDeltaTrace(self, record):
    """Generates the delta trace of a record.

    Args:
      record (Record): scaled record.

    Returns:
      DeltaTrace: per-sample forecast errors.
    """
    return ARIMADeltaTrace(record, self._arima_config)
