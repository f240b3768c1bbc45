# -*- coding: utf-8 -*-
"""Confusion counting, sensitivity and specificity and experiment statistics.

Artifact samples are the positive class and valid samples the negative class.
"""

import logging

import numpy as np

from scipy import signal as scipy_signal

from bpmartifacts import definitions
from bpmartifacts import flatline


logger = logging.getLogger(__name__)


class ConfusionCounts(object):
  """Confusion counts.

  Attributes:
    false_negatives (int): number of artifact samples labelled valid.
    false_positives (int): number of valid samples labelled artifact.
    true_negatives (int): number of valid samples labelled valid.
    true_positives (int): number of artifact samples labelled artifact.
  """

  def __init__(
      self, true_positives=0, false_positives=0, true_negatives=0,
      false_negatives=0):
    """Initializes confusion counts.

    Args:
      true_positives (Optional[int]): number of true positives.
      false_positives (Optional[int]): number of false positives.
      true_negatives (Optional[int]): number of true negatives.
      false_negatives (Optional[int]): number of false negatives.
    """
    super(ConfusionCounts, self).__init__()
    self.false_negatives = false_negatives
    self.false_positives = false_positives
    self.true_negatives = true_negatives
    self.true_positives = true_positives

  def __add__(self, other):
    """Pools the counts with other counts.

    Args:
      other (ConfusionCounts): other counts.

    Returns:
      ConfusionCounts: pooled counts.
    """
    return ConfusionCounts(
        true_positives=self.true_positives + other.true_positives,
        false_positives=self.false_positives + other.false_positives,
        true_negatives=self.true_negatives + other.true_negatives,
        false_negatives=self.false_negatives + other.false_negatives)

  def __eq__(self, other):
    """Determines if the counts are equal to other counts.

    Args:
      other (object): other object.

    Returns:
      bool: True if all counts are equal.
    """
    if not isinstance(other, ConfusionCounts):
      return NotImplemented

    return self.CopyToDict() == other.CopyToDict()

  @property
  def total(self):
    """int: number of counted samples."""
    return (
        self.true_positives + self.false_positives + self.true_negatives +
        self.false_negatives)

  def CopyToDict(self):
    """Copies the counts to a dictionary.

    Returns:
      dict[str, int]: counts per name.
    """
    return {
        'fn': self.false_negatives,
        'fp': self.false_positives,
        'tn': self.true_negatives,
        'tp': self.true_positives}


class ExperimentStats(object):
  """Statistics of an experimental setup over its iterations.

  Attributes:
    beta (float): KL divergence weight of a VAE setup, None otherwise.
    kind (str): detector kind.
    number_of_iterations (int): number of iterations.
    q (float): threshold percentile.
    sensitivity_mean (float): mean sensitivity or None if UNDEFINED.
    sensitivity_std (float): population standard deviation of the
        sensitivity or None if UNDEFINED.
    specificity_mean (float): mean specificity or None if UNDEFINED.
    specificity_std (float): population standard deviation of the
        specificity or None if UNDEFINED.
  """

  def __init__(
      self, kind, beta, q, sensitivity_mean=None, sensitivity_std=None,
      specificity_mean=None, specificity_std=None, number_of_iterations=1):
    """Initializes experiment statistics.

    Args:
      kind (str): detector kind.
      beta (float): KL divergence weight or None.
      q (float): threshold percentile.
      sensitivity_mean (Optional[float]): mean sensitivity.
      sensitivity_std (Optional[float]): sensitivity standard deviation.
      specificity_mean (Optional[float]): mean specificity.
      specificity_std (Optional[float]): specificity standard deviation.
      number_of_iterations (Optional[int]): number of iterations.
    """
    super(ExperimentStats, self).__init__()
    self.beta = beta
    self.kind = kind
    self.number_of_iterations = number_of_iterations
    self.q = q
    self.sensitivity_mean = sensitivity_mean
    self.sensitivity_std = sensitivity_std
    self.specificity_mean = specificity_mean
    self.specificity_std = specificity_std

  @property
  def setup_identifier(self):
    """str: identifier of the experimental setup."""
    if self.beta is None:
      return f'{self.kind:s}-q{self.q!r}'
    return f'{self.kind:s}-beta{self.beta!r}-q{self.q!r}'


def Confusion(prediction, truth):
  """Counts the confusion of predicted against annotated labels.

  Samples of which either label is UNKNOWN are not counted.

  Args:
    prediction (LabelMask): predicted labels.
    truth (LabelMask): annotated labels.

  Returns:
    ConfusionCounts: confusion counts.

  Raises:
    ValueError: if the masks differ in length.
  """
  if len(prediction) != len(truth):
    raise ValueError((
        f'Label mask length mismatch: {len(prediction):d} != '
        f'{len(truth):d}'))

  is_counted = (
      (prediction.labels != definitions.LABEL_UNKNOWN) &
      (truth.labels != definitions.LABEL_UNKNOWN))

  is_predicted_artifact = prediction.labels == definitions.LABEL_ARTIFACT
  is_artifact = truth.labels == definitions.LABEL_ARTIFACT

  return ConfusionCounts(
      true_positives=int(np.count_nonzero(
          is_counted & is_predicted_artifact & is_artifact)),
      false_positives=int(np.count_nonzero(
          is_counted & is_predicted_artifact & ~is_artifact)),
      true_negatives=int(np.count_nonzero(
          is_counted & ~is_predicted_artifact & ~is_artifact)),
      false_negatives=int(np.count_nonzero(
          is_counted & ~is_predicted_artifact & is_artifact)))


def Sensitivity(confusion_counts):
  """Computes the sensitivity tp / (tp + fn).

  Args:
    confusion_counts (ConfusionCounts): confusion counts.

  Returns:
    float: sensitivity or None if UNDEFINED.
  """
  denominator = (
      confusion_counts.true_positives + confusion_counts.false_negatives)
  if not denominator:
    return None

  return confusion_counts.true_positives / denominator


def Specificity(confusion_counts):
  """Computes the specificity tn / (tn + fp).

  Args:
    confusion_counts (ConfusionCounts): confusion counts.

  Returns:
    float: specificity or None if UNDEFINED.
  """
  denominator = (
      confusion_counts.true_negatives + confusion_counts.false_positives)
  if not denominator:
    return None

  return confusion_counts.true_negatives / denominator


def ComputeMeanAndStd(values):
  """Computes the mean and population standard deviation.

  UNDEFINED (None) values are ignored.

  Args:
    values (list[float]): values.

  Returns:
    tuple[float, float]: mean and population standard deviation, or None and
        None if no value is defined.
  """
  values = [value for value in values if value is not None]
  if not values:
    return None, None

  values = np.array(values, dtype=np.float64)
  return float(np.mean(values)), float(np.std(values, ddof=0))


def CreateExperimentStats(kind, beta, q, confusion_counts_per_iteration):
  """Creates experiment statistics from per-iteration confusion counts.

  Args:
    kind (str): detector kind.
    beta (float): KL divergence weight or None.
    q (float): threshold percentile.
    confusion_counts_per_iteration (list[ConfusionCounts]): pooled test
        confusion counts of every iteration.

  Returns:
    ExperimentStats: experiment statistics.
  """
  sensitivity_mean, sensitivity_std = ComputeMeanAndStd([
      Sensitivity(counts) for counts in confusion_counts_per_iteration])
  specificity_mean, specificity_std = ComputeMeanAndStd([
      Specificity(counts) for counts in confusion_counts_per_iteration])

  return ExperimentStats(
      kind, beta, q, sensitivity_mean=sensitivity_mean,
      sensitivity_std=sensitivity_std, specificity_mean=specificity_mean,
      specificity_std=specificity_std,
      number_of_iterations=len(confusion_counts_per_iteration))


def HighFrequencyPower(
    signals, cutoff=definitions.HIGH_FREQUENCY_CUTOFF, sampling_frequency=1.0):
  """Estimates the power above a cutoff frequency.

  The power spectral density is estimated with Welch's method and integrated
  over the frequencies strictly above the cutoff.

  Args:
    signals (numpy.ndarray): signal of shape [T] or signals of shape [N, T].
    cutoff (Optional[float]): cutoff frequency, in cycles per sample
        interval.
    sampling_frequency (Optional[float]): sampling frequency, 1 sample per
        minute by default.

  Returns:
    float: high frequency power, averaged over the signals.

  Raises:
    ValueError: if the signals are empty.
  """
  signals = np.atleast_2d(np.asarray(signals, dtype=np.float64))
  if not signals.size:
    raise ValueError('Unable to estimate power of empty signals.')

  frequencies, power_spectral_densities = scipy_signal.welch(
      signals, fs=sampling_frequency, nperseg=min(256, signals.shape[1]),
      axis=-1)

  if frequencies.size < 2:
    return 0.0

  frequency_resolution = frequencies[1] - frequencies[0]
  is_high_frequency = frequencies > cutoff

  power_per_signal = np.sum(
      power_spectral_densities[:, is_high_frequency],
      axis=1) * frequency_resolution

  return float(np.mean(power_per_signal))


def TuneFlatlineWindow(validation_records, window_grid=(5, 10, 15), eps=1e-9):
  """Selects the flatline window size on annotated validation records.

  Every candidate window size is scored by the Youden index, sensitivity +
  specificity - 1, of its pooled flatline labels against the annotated
  labels, where an UNDEFINED metric counts as 0. The smallest window size
  wins ties.

  Args:
    validation_records (list[Record]): validation records with truth labels.
    window_grid (Optional[list[int]]): candidate window sizes.
    eps (Optional[float]): slope threshold.

  Returns:
    tuple[int, dict[int, float]]: best window size and score per window size.

  Raises:
    ValueError: if the window grid is empty or a record has no truth labels.
  """
  if not window_grid:
    raise ValueError('Missing window sizes.')

  scores = {}
  for window_size in sorted(window_grid):
    flatline_config = flatline.FlatlineConfig(window_size=window_size, eps=eps)

    confusion_counts = ConfusionCounts()
    for record in validation_records:
      if record.truth_labels is None:
        raise ValueError(
            f'Record: {record.record_identifier:s} has no truth labels.')

      flatline_mask = flatline.DetectFlatline(record, flatline_config)
      confusion_counts += Confusion(flatline_mask, record.truth_labels)

    sensitivity = Sensitivity(confusion_counts) or 0.0
    specificity = Specificity(confusion_counts) or 0.0
    scores[window_size] = sensitivity + specificity - 1.0

    logger.info((
        f'Flatline window: {window_size:d} Youden index: '
        f'{scores[window_size]:.6f}'))

  best_window_size = None
  for window_size, score in scores.items():
    if best_window_size is None or score > scores[best_window_size]:
      best_window_size = window_size

  return best_window_size, scores
