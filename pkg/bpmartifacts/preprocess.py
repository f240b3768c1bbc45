# -*- coding: utf-8 -*-
"""Record-level robust scaling, windowing and record splitting."""

import numpy as np

from bpmartifacts import definitions
from bpmartifacts import prng
from bpmartifacts import records


class WindowBatch(object):
  """Matrix of overlapping scaled windows.

  Attributes:
    record_identifiers (list[str]): identifier of the record every window
        originates from.
    start_indices (numpy.ndarray): sample index within its record at which
        every window starts.
    window_length (int): window length W, in samples.
    windows (numpy.ndarray): windows, of shape [N, W].
  """

  def __init__(
      self, windows, record_identifiers, start_indices, window_length):
    """Initializes a window batch.

    Args:
      windows (numpy.ndarray): windows, of shape [N, W].
      record_identifiers (list[str]): record identifier per window.
      start_indices (array_like): start index per window.
      window_length (int): window length W.

    Raises:
      ValueError: if the windows, identifiers and indices are inconsistent.
    """
    windows = np.asarray(windows, dtype=np.float64).reshape(
        -1, window_length)
    start_indices = np.asarray(start_indices, dtype=np.int64).reshape(-1)

    if (len(record_identifiers) != windows.shape[0] or
        start_indices.size != windows.shape[0]):
      raise ValueError('Inconsistent number of windows and origins.')

    super(WindowBatch, self).__init__()
    self.record_identifiers = list(record_identifiers)
    self.start_indices = start_indices
    self.window_length = window_length
    self.windows = windows

  def __len__(self):
    """Retrieves the number of windows.

    Returns:
      int: number of windows.
    """
    return self.windows.shape[0]

  @property
  def origins(self):
    """list[tuple[str, int]]: record identifier and start index per window."""
    return list(zip(self.record_identifiers, self.start_indices.tolist()))


def Percentile(values, percentile):
  """Computes a percentile with linear interpolation.

  The values are sorted and the percentile is interpolated linearly between
  the order statistics adjacent to rank (n - 1) * percentile / 100.

  Args:
    values (array_like): values.
    percentile (float): percentile in [0, 100].

  Returns:
    float: percentile.

  Raises:
    ValueError: if there are no values.
  """
  values = np.asarray(values, dtype=np.float64)
  if not values.size:
    raise ValueError('Unable to compute percentile of empty values.')

  return float(np.percentile(values, percentile, method='linear'))


def ComputeScaleStats(record):
  """Computes the robust scaling statistics of a record.

  The median and interquartile range are computed over all non-MISSING
  samples, annotated artifacts included.

  Args:
    record (Record): record.

  Returns:
    ScaleStats: scaling statistics.

  Raises:
    ValueError: if the record has no non-MISSING samples.
  """
  values = record.values[~record.is_missing]
  if not values.size:
    raise ValueError(
        f'Record: {record.record_identifier:s} has no numeric samples.')

  lower_quartile, median, upper_quartile = np.percentile(
      values, [25.0, 50.0, 75.0], method='linear')

  return records.ScaleStats(
      float(median), max(float(upper_quartile - lower_quartile), 0.0))


def Scale(record, scale_stats):
  """Scales a record by subtracting the median and dividing by the IQR.

  Args:
    record (Record): record.
    scale_stats (ScaleStats): scaling statistics of the same record.

  Returns:
    Record: scaled record, where MISSING samples remain MISSING.
  """
  values = (record.values - scale_stats.median) / scale_stats.divisor
  return record.CopyWithValues(values)


def Unscale(record, scale_stats):
  """Reverts the scaling of a record.

  Args:
    record (Record): scaled record.
    scale_stats (ScaleStats): scaling statistics of the record.

  Returns:
    Record: record in mmHg.
  """
  values = record.values * scale_stats.divisor + scale_stats.median
  return record.CopyWithValues(values)


def _GetWindowStartIndices(is_usable, window_length, step):
  """Determines the start indices of windows with only usable samples.

  Args:
    is_usable (numpy.ndarray): boolean array, True where a sample may be part
        of a window.
    window_length (int): window length.
    step (int): window step.

  Returns:
    numpy.ndarray: start indices.
  """
  number_of_samples = is_usable.size
  if number_of_samples < window_length:
    return np.zeros(0, dtype=np.int64)

  unusable_counts = np.concatenate([
      [0], np.cumsum(~is_usable, dtype=np.int64)])
  start_indices = np.arange(
      0, number_of_samples - window_length + 1, step, dtype=np.int64)
  window_unusable_counts = (
      unusable_counts[start_indices + window_length] -
      unusable_counts[start_indices])

  return start_indices[window_unusable_counts == 0]


def _CreateWindowBatch(record, start_indices, window_length):
  """Creates a window batch from the windows of a record.

  Args:
    record (Record): record.
    start_indices (numpy.ndarray): start index per window.
    window_length (int): window length.

  Returns:
    WindowBatch: window batch.
  """
  if start_indices.size:
    offsets = start_indices[:, np.newaxis] + np.arange(window_length)
    windows = record.values[offsets]
  else:
    windows = np.zeros((0, window_length), dtype=np.float64)

  record_identifiers = [record.record_identifier] * start_indices.size
  return WindowBatch(windows, record_identifiers, start_indices, window_length)


def MakeWindows(record, window_length, step=1):
  """Splits a record into overlapping windows.

  Windows start at every multiple of step that leaves room for a full window;
  windows that contain a MISSING sample are dropped.

  Args:
    record (Record): scaled record.
    window_length (int): window length W.
    step (Optional[int]): window step.

  Returns:
    WindowBatch: windows, empty if the record is shorter than W.

  Raises:
    ValueError: if the window length or step is smaller than 1.
  """
  if window_length < 1 or step < 1:
    raise ValueError((
        f'Unsupported window length: {window_length:d} or step: {step:d}'))

  start_indices = _GetWindowStartIndices(
      ~record.is_missing, window_length, step)
  return _CreateWindowBatch(record, start_indices, window_length)


def CleanTrainingWindows(record, truth_labels, window_length):
  """Extracts training windows free of artifacts.

  The record is split into maximal contiguous runs of VALID non-MISSING
  samples and unit step windows are taken within every run, so that no window
  straddles an artifact or gap.

  Args:
    record (Record): scaled record.
    truth_labels (LabelMask): annotated labels of the record.
    window_length (int): window length W.

  Returns:
    WindowBatch: windows that contain only VALID samples.

  Raises:
    ValueError: if the labels do not match the record.
  """
  if len(truth_labels) != len(record):
    raise ValueError('Truth labels do not match the record.')

  is_usable = (
      (truth_labels.labels == definitions.LABEL_VALID) & ~record.is_missing)
  start_indices = _GetWindowStartIndices(is_usable, window_length, 1)
  return _CreateWindowBatch(record, start_indices, window_length)


def ShuffleAndPool(batches, seed):
  """Pools per-record windows into a patient-agnostic training matrix.

  The batches are concatenated and permuted by a Fisher-Yates shuffle driven
  by the pool stream of the seeded generator.

  Args:
    batches (list[WindowBatch]): per-record window batches.
    seed (int): seed.

  Returns:
    WindowBatch: pooled windows.

  Raises:
    ValueError: if there are no batches or the window lengths differ.
  """
  if not batches:
    raise ValueError('Missing window batches.')

  window_lengths = set(batch.window_length for batch in batches)
  if len(window_lengths) != 1:
    raise ValueError(f'Mixed window lengths: {sorted(window_lengths)!s}')

  window_length = batches[0].window_length
  windows = np.concatenate([batch.windows for batch in batches], axis=0)
  record_identifiers = [
      identifier for batch in batches
      for identifier in batch.record_identifiers]
  start_indices = np.concatenate([batch.start_indices for batch in batches])

  rng = prng.Rng(seed).Derive(definitions.STREAM_POOL)
  permutation = rng.Permutation(windows.shape[0])

  return WindowBatch(
      windows[permutation],
      [record_identifiers[index] for index in permutation.tolist()],
      start_indices[permutation], window_length)


def SplitRecords(record_identifiers, ratios=(53, 15, 17), seed=0):
  """Splits records into training, validation and test sets.

  The identifiers are permuted by the split stream of the seeded generator
  and divided proportionally to the ratios, where the remaining records after
  flooring are assigned by largest remainder (ties by split order).

  Args:
    record_identifiers (list[str]): record identifiers.
    ratios (Optional[tuple[int, int, int]]): training, validation and test
        ratios.
    seed (Optional[int]): seed.

  Returns:
    tuple[list[str], list[str], list[str]]: training, validation and test
        record identifiers.

  Raises:
    ValueError: if there are fewer than 3 records or the ratios are invalid.
  """
  number_of_records = len(record_identifiers)
  if number_of_records < 3:
    raise ValueError(
        f'Unable to split: {number_of_records:d} records, 3 or more required.')

  if len(ratios) != 3 or min(ratios) < 0 or sum(ratios) <= 0:
    raise ValueError(f'Unsupported split ratios: {ratios!s}')

  total = sum(ratios)
  sizes = [number_of_records * ratio // total for ratio in ratios]
  remainders = [number_of_records * ratio % total for ratio in ratios]

  remaining = number_of_records - sum(sizes)
  order = sorted(range(3), key=lambda index: (-remainders[index], index))
  for index in order[:remaining]:
    sizes[index] += 1

  rng = prng.Rng(seed).Derive(definitions.STREAM_SPLIT)
  permutation = rng.Permutation(number_of_records).tolist()
  shuffled = [record_identifiers[index] for index in permutation]

  training = shuffled[:sizes[0]]
  validation = shuffled[sizes[0]:sizes[0] + sizes[1]]
  test = shuffled[sizes[0] + sizes[1]:]
  return training, validation, test
