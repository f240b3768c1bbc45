# -*- coding: utf-8 -*-
"""Statistical flatline detector.

A line is fitted by ordinary least squares on every unit step window of
contiguous non-MISSING samples. All samples of a window of which the slope
magnitude is below eps are labelled artifactual.
"""

import numpy as np

from numpy.lib import stride_tricks

from bpmartifacts import definitions
from bpmartifacts import records


class FlatlineConfig(object):
  """Flatline detector configuration.

  Attributes:
    eps (float): slope magnitude below which a window is a flatline.
    window_size (int): number of samples per window.
  """

  def __init__(self, window_size=10, eps=1e-9):
    """Initializes a flatline detector configuration.

    Args:
      window_size (Optional[int]): number of samples per window.
      eps (Optional[float]): slope threshold.

    Raises:
      ValueError: if the window size is smaller than 2 or eps is not
          positive.
    """
    if window_size < 2:
      raise ValueError(f'Unsupported window size: {window_size:d}')

    if eps <= 0.0:
      raise ValueError(f'Unsupported eps: {eps!r}')

    super(FlatlineConfig, self).__init__()
    self.eps = eps
    self.window_size = window_size


def _GetCenteredAbscissae(window_size):
  """Retrieves the abscissae 0, 1, ..., L - 1 centered on their mean.

  Args:
    window_size (int): number of samples per window.

  Returns:
    numpy.ndarray: centered abscissae.
  """
  abscissae = np.arange(window_size, dtype=np.float64)
  return abscissae - abscissae.mean()


def FitSlope(window):
  """Fits a line by ordinary least squares against the abscissae 0 .. L - 1.

  Args:
    window (array_like): samples.

  Returns:
    float: slope.

  Raises:
    ValueError: if the window has fewer than 2 samples or contains MISSING
        samples.
  """
  window = np.asarray(window, dtype=np.float64).reshape(-1)
  if window.size < 2:
    raise ValueError(f'Unsupported window length: {window.size:d}')

  if np.any(np.isnan(window)):
    raise ValueError('Unsupported window with MISSING samples.')

  abscissae = _GetCenteredAbscissae(window.size)
  return float(
      (window - window.mean()) @ abscissae / (abscissae @ abscissae))


def FitSlopes(values, window_size):
  """Fits a line to every unit step window of a series.

  Args:
    values (numpy.ndarray): samples, where MISSING samples are NaN.
    window_size (int): number of samples per window.

  Returns:
    numpy.ndarray: slope of the window starting at every index that leaves
        room for a full window, NaN for windows with MISSING samples.
  """
  if values.size < window_size:
    return np.zeros(0, dtype=np.float64)

  windows = stride_tricks.sliding_window_view(values, window_size)
  abscissae = _GetCenteredAbscissae(window_size)

  centered_windows = windows - windows.mean(axis=1, keepdims=True)
  return centered_windows @ abscissae / (abscissae @ abscissae)


def DetectFlatline(record, flatline_config):
  """Labels the flatline samples of a record.

  Args:
    record (Record): record, unscaled or scaled.
    flatline_config (FlatlineConfig): flatline detector configuration.

  Returns:
    LabelMask: ARTIFACT for every sample of a window with a slope magnitude
        below eps, UNKNOWN for MISSING samples and VALID otherwise.
  """
  window_size = flatline_config.window_size
  number_of_samples = len(record)

  labels = np.full(
      number_of_samples, definitions.LABEL_VALID, dtype=np.int8)

  slopes = FitSlopes(record.values, window_size)
  if slopes.size:
    # NaN slopes of windows with MISSING samples compare False.
    with np.errstate(invalid='ignore'):
      is_flatline_window = np.abs(slopes) < flatline_config.eps

    coverage = np.convolve(
        is_flatline_window.astype(np.int64),
        np.ones(window_size, dtype=np.int64))
    labels[coverage > 0] = definitions.LABEL_ARTIFACT

  labels[record.is_missing] = definitions.LABEL_UNKNOWN

  return records.LabelMask(labels, definitions.SOURCE_FLATLINE)
