# -*- coding: utf-8 -*-
"""The BPm record, label mask and delta trace types."""

import numpy as np

from bpmartifacts import definitions


def _CreateReadOnlyArray(values, dtype):
  """Creates a read-only copy of an array.

  Args:
    values (array_like): values.
    dtype (numpy.dtype): data type.

  Returns:
    numpy.ndarray: read-only one-dimensional array.
  """
  array = np.array(values, dtype=dtype).reshape(-1)
  array.flags.writeable = False
  return array


class LabelMask(object):
  """Per-sample artifact label mask.

  Attributes:
    labels (numpy.ndarray): labels aligned with the samples of a record,
        where each label is one of LABEL_ARTIFACT, LABEL_VALID or
        LABEL_UNKNOWN.
    source (str): source of the labels, such as SOURCE_FLATLINE.
  """

  def __init__(self, labels, source):
    """Initializes a label mask.

    Args:
      labels (array_like): labels.
      source (str): source of the labels.

    Raises:
      ValueError: if the labels or source are not supported.
    """
    if source not in definitions.SOURCES:
      raise ValueError(f'Unsupported label source: {source!s}')

    labels = _CreateReadOnlyArray(labels, np.int8)
    if labels.size and (labels.min() < -1 or labels.max() > 1):
      raise ValueError('Unsupported label value.')

    super(LabelMask, self).__init__()
    self.labels = labels
    self.source = source

  def __eq__(self, other):
    """Determines if the label mask is equal to another.

    Args:
      other (object): other object.

    Returns:
      bool: True if both masks have the same labels and source.
    """
    if not isinstance(other, LabelMask):
      return NotImplemented

    return self.source == other.source and np.array_equal(
        self.labels, other.labels)

  def __len__(self):
    """Retrieves the number of labels.

    Returns:
      int: number of labels.
    """
    return self.labels.size

  @property
  def artifact_count(self):
    """int: number of samples labelled as artifact."""
    return int(np.count_nonzero(self.labels == definitions.LABEL_ARTIFACT))

  @property
  def is_artifact(self):
    """numpy.ndarray: boolean array, True where labelled as artifact."""
    return self.labels == definitions.LABEL_ARTIFACT


class Record(object):
  """Minute-resolution BPm record of a single patient.

  Attributes:
    minute_indices (numpy.ndarray): minute index of every sample.
    record_identifier (str): identifier of the record.
    truth_labels (LabelMask): annotated artifact labels or None if the record
        is not annotated.
    values (numpy.ndarray): sample values in mmHg, where MISSING samples
        are NaN.
  """

  def __init__(
      self, record_identifier, minute_indices, values, truth_labels=None):
    """Initializes a record.

    Args:
      record_identifier (str): identifier of the record.
      minute_indices (array_like): minute index of every sample.
      values (array_like): sample values, where MISSING samples are NaN.
      truth_labels (Optional[LabelMask]): annotated artifact labels.

    Raises:
      ValueError: if the number of indices, values and labels differ.
    """
    minute_indices = _CreateReadOnlyArray(minute_indices, np.int64)
    values = _CreateReadOnlyArray(values, np.float64)

    if minute_indices.size != values.size:
      raise ValueError((
          f'Number of minute indices: {minute_indices.size:d} does not match '
          f'number of values: {values.size:d}'))

    if truth_labels is not None and len(truth_labels) != values.size:
      raise ValueError((
          f'Number of truth labels: {len(truth_labels):d} does not match '
          f'number of values: {values.size:d}'))

    super(Record, self).__init__()
    self.minute_indices = minute_indices
    self.record_identifier = record_identifier
    self.truth_labels = truth_labels
    self.values = values

  def __len__(self):
    """Retrieves the number of samples.

    Returns:
      int: number of samples.
    """
    return self.values.size

  @property
  def is_missing(self):
    """numpy.ndarray: boolean array, True where the sample is MISSING."""
    return np.isnan(self.values)

  @property
  def numeric_fraction(self):
    """float: fraction of non-MISSING samples, 0.0 for an empty record."""
    if not self.values.size:
      return 0.0

    return float(np.count_nonzero(~self.is_missing)) / self.values.size

  def CopyWithValues(self, values):
    """Creates a copy of the record with other sample values.

    Args:
      values (array_like): sample values.

    Returns:
      Record: record with the same identifier, indices and truth labels.
    """
    return Record(
        self.record_identifier, self.minute_indices, values,
        truth_labels=self.truth_labels)


class ScaleStats(object):
  """Record-level robust scaling statistics.

  Attributes:
    iqr (float): interquartile range (75th - 25th percentile), in mmHg.
    median (float): median, in mmHg.
  """

  def __init__(self, median, iqr):
    """Initializes scaling statistics.

    Args:
      median (float): median.
      iqr (float): interquartile range.

    Raises:
      ValueError: if the interquartile range is negative.
    """
    if iqr < 0.0:
      raise ValueError(f'Unsupported interquartile range: {iqr:f}')

    super(ScaleStats, self).__init__()
    self.iqr = iqr
    self.median = median

  @property
  def divisor(self):
    """float: scale divisor, the interquartile range or 1.0 when it is 0."""
    return self.iqr or 1.0


class ValidationResult(object):
  """Record admission result.

  Attributes:
    is_accepted (bool): True if the record is accepted.
    rule (str): violated rule, such as RULE_INDEX_GAP, or None if accepted.
  """

  def __init__(self, rule=None):
    """Initializes a validation result.

    Args:
      rule (Optional[str]): violated rule or None if accepted.
    """
    super(ValidationResult, self).__init__()
    self.is_accepted = rule is None
    self.rule = rule


class DeltaTrace(object):
  """Per-sample reconstruction or forecast error of a record.

  Attributes:
    deltas (numpy.ndarray): absolute error of every sample, where samples
        without a defined error are NaN (UNDEFINED).
    number_of_fallbacks (int): number of per-window model fits that fell
        back to a persistence forecast.
    record_identifier (str): identifier of the record.
  """

  def __init__(self, record_identifier, deltas, number_of_fallbacks=0):
    """Initializes a delta trace.

    Args:
      record_identifier (str): identifier of the record.
      deltas (array_like): per-sample errors, NaN where UNDEFINED.
      number_of_fallbacks (Optional[int]): number of persistence fallbacks.
    """
    super(DeltaTrace, self).__init__()
    self.deltas = _CreateReadOnlyArray(deltas, np.float64)
    self.number_of_fallbacks = number_of_fallbacks
    self.record_identifier = record_identifier

  def __len__(self):
    """Retrieves the number of samples.

    Returns:
      int: number of samples.
    """
    return self.deltas.size

  @property
  def is_defined(self):
    """numpy.ndarray: boolean array, True where the error is defined."""
    return ~np.isnan(self.deltas)


def ValidateRecord(record):
  """Validates a record for admission to the pipelines.

  A record is accepted when its minute indices increase with a unit step and
  at least 90% of its samples are numeric.

  Args:
    record (Record): record.

  Returns:
    ValidationResult: validation result.
  """
  if record.minute_indices.size > 1:
    steps = np.diff(record.minute_indices)
    if np.any(steps != 1):
      return ValidationResult(rule=definitions.RULE_INDEX_GAP)

  if record.numeric_fraction < definitions.MINIMUM_NUMERIC_FRACTION:
    return ValidationResult(rule=definitions.RULE_INSUFFICIENT_DATA)

  return ValidationResult()


def OrMerge(first_mask, second_mask):
  """Merges two label masks with a logical OR.

  A sample is ARTIFACT if either mask labels it ARTIFACT and UNKNOWN only if
  both masks label it UNKNOWN.

  Args:
    first_mask (LabelMask): first label mask.
    second_mask (LabelMask): second label mask.

  Returns:
    LabelMask: merged label mask with source SOURCE_FUSED.

  Raises:
    ValueError: if the masks differ in length.
  """
  if len(first_mask) != len(second_mask):
    raise ValueError((
        f'Label mask length mismatch: {len(first_mask):d} != '
        f'{len(second_mask):d}'))

  labels = np.maximum(first_mask.labels, second_mask.labels)
  return LabelMask(labels, definitions.SOURCE_FUSED)
