# -*- coding: utf-8 -*-
"""Seeded generator of synthetic BPm records with annotated artifacts.

The clean signal of a record is a per-record baseline plus a slow sinusoidal
drift plus AR(1) fluctuations, quantized to the monitor resolution. Flatline
artifacts hold the preceding clean value, spike artifacts add a step of
drawn amplitude and missing runs blank out samples. Events never overlap.
"""

import math

import numpy as np

from numpy.lib import stride_tricks
from scipy import signal as scipy_signal

from bpmartifacts import csv_files
from bpmartifacts import definitions
from bpmartifacts import flatline
from bpmartifacts import preprocess
from bpmartifacts import prng
from bpmartifacts import records


# The largest fraction of samples of a record that may be MISSING.
MAXIMUM_MISSING_FRACTION = 0.05

# The number of samples kept free between events.
_EVENT_GAP = 2

# The number of attempts to place an event before it is dropped.
_MAXIMUM_PLACEMENT_ATTEMPTS = 20


class SynthConfig(object):
  """Synthetic data configuration.

  Rates are expected numbers of events per 1000 minutes and ranges are
  inclusive (minimum, maximum) tuples.

  Attributes:
    ar_coefficient (float): AR(1) coefficient of the fluctuations.
    audit_window_size (int): window size of the clean window audit.
    baseline_range (tuple[float, float]): range of the per-record baseline,
        in mmHg.
    drift_amplitude (float): amplitude of the sinusoidal drift, in mmHg.
    drift_period_range (tuple[float, float]): range of the drift period, in
        minutes.
    flatline_duration_range (tuple[int, int]): range of flatline durations.
    flatline_rate (float): flatline rate.
    innovation_scale (float): standard deviation of the AR(1) innovations.
    missing_duration_range (tuple[int, int]): range of missing run durations.
    missing_rate (float): missing run rate.
    number_of_records (int): number of records of a dataset.
    quantization_step (float): quantization step in mmHg, 0.0 to disable.
    record_length (int): number of samples per record.
    seed (int): seed.
    spike_amplitude_range (tuple[float, float]): range of spike amplitude
        magnitudes, in mmHg.
    spike_duration_range (tuple[int, int]): range of spike durations.
    spike_rate (float): spike rate.
  """

  def __init__(
      self, number_of_records=85, record_length=720,
      baseline_range=(60.0, 100.0), drift_amplitude=10.0,
      drift_period_range=(120.0, 360.0), ar_coefficient=0.9,
      innovation_scale=3.0, quantization_step=1.0, flatline_rate=1.0,
      flatline_duration_range=(5, 120), spike_rate=3.0,
      spike_amplitude_range=(15.0, 60.0), spike_duration_range=(1, 3),
      missing_rate=0.5, missing_duration_range=(1, 20), seed=0,
      audit_window_size=10):
    """Initializes a synthetic data configuration.

    Args:
      number_of_records (Optional[int]): number of records.
      record_length (Optional[int]): number of samples per record.
      baseline_range (Optional[tuple[float, float]]): baseline range.
      drift_amplitude (Optional[float]): drift amplitude.
      drift_period_range (Optional[tuple[float, float]]): drift period range.
      ar_coefficient (Optional[float]): AR(1) coefficient.
      innovation_scale (Optional[float]): innovation standard deviation.
      quantization_step (Optional[float]): quantization step.
      flatline_rate (Optional[float]): flatline rate.
      flatline_duration_range (Optional[tuple[int, int]]): flatline
          durations.
      spike_rate (Optional[float]): spike rate.
      spike_amplitude_range (Optional[tuple[float, float]]): spike amplitude
          magnitudes.
      spike_duration_range (Optional[tuple[int, int]]): spike durations.
      missing_rate (Optional[float]): missing run rate.
      missing_duration_range (Optional[tuple[int, int]]): missing run
          durations.
      seed (Optional[int]): seed.
      audit_window_size (Optional[int]): clean window audit window size.

    Raises:
      ValueError: if a value is out of its supported range.
    """
    if number_of_records < 1 or record_length < 1:
      raise ValueError('Unsupported number of records or record length.')

    if min(flatline_rate, spike_rate, missing_rate) < 0.0:
      raise ValueError('Unsupported negative event rate.')

    for minimum, maximum in (
        flatline_duration_range, spike_duration_range,
        missing_duration_range):
      if minimum < 1 or maximum < minimum:
        raise ValueError(f'Unsupported duration range: {minimum!s}, '
                         f'{maximum!s}')

    for minimum, maximum in (
        baseline_range, drift_period_range, spike_amplitude_range):
      if maximum < minimum:
        raise ValueError(f'Unsupported range: {minimum!s}, {maximum!s}')

    if drift_period_range[0] <= 0.0:
      raise ValueError('Unsupported drift period.')

    if not -1.0 < ar_coefficient < 1.0:
      raise ValueError(f'Unsupported AR coefficient: {ar_coefficient!r}')

    if innovation_scale < 0.0 or quantization_step < 0.0:
      raise ValueError('Unsupported innovation scale or quantization step.')

    if audit_window_size < 2:
      raise ValueError(f'Unsupported audit window size: {audit_window_size:d}')

    super(SynthConfig, self).__init__()
    self.ar_coefficient = ar_coefficient
    self.audit_window_size = audit_window_size
    self.baseline_range = baseline_range
    self.drift_amplitude = drift_amplitude
    self.drift_period_range = drift_period_range
    self.flatline_duration_range = flatline_duration_range
    self.flatline_rate = flatline_rate
    self.innovation_scale = innovation_scale
    self.missing_duration_range = missing_duration_range
    self.missing_rate = missing_rate
    self.number_of_records = number_of_records
    self.quantization_step = quantization_step
    self.record_length = record_length
    self.seed = seed
    self.spike_amplitude_range = spike_amplitude_range
    self.spike_duration_range = spike_duration_range
    self.spike_rate = spike_rate


class GenerationAudit(object):
  """Self-audit of the generation of a record.

  Attributes:
    number_of_artifact_samples (int): number of samples annotated ARTIFACT.
    number_of_flatlines (int): number of injected flatlines.
    number_of_identical_clean_windows (int): number of windows of annotated
        VALID samples that all have the same value.
    number_of_missing_runs (int): number of injected missing runs.
    number_of_spikes (int): number of injected spikes.
    number_of_zero_slope_clean_windows (int): number of windows of annotated
        VALID samples of which the fitted slope is below the flatline eps.
    record_identifier (str): identifier of the record.
  """

  def __init__(self, record_identifier):
    """Initializes a generation audit.

    Args:
      record_identifier (str): identifier of the record.
    """
    super(GenerationAudit, self).__init__()
    self.number_of_artifact_samples = 0
    self.number_of_flatlines = 0
    self.number_of_identical_clean_windows = 0
    self.number_of_missing_runs = 0
    self.number_of_spikes = 0
    self.number_of_zero_slope_clean_windows = 0
    self.record_identifier = record_identifier


class SyntheticDataset(object):
  """Synthetic dataset.

  Attributes:
    audits (list[GenerationAudit]): generation audit per record.
    manifest_entries (list[ManifestEntry]): split assignment per record.
    records (list[Record]): records with truth labels.
  """

  def __init__(self, records_list, manifest_entries, audits):
    """Initializes a synthetic dataset.

    Args:
      records_list (list[Record]): records.
      manifest_entries (list[ManifestEntry]): manifest entries.
      audits (list[GenerationAudit]): generation audits.
    """
    super(SyntheticDataset, self).__init__()
    self.audits = audits
    self.manifest_entries = manifest_entries
    self.records = records_list


def GetRecordIdentifier(record_index):
  """Retrieves the identifier of a synthetic record.

  Args:
    record_index (int): index of the record.

  Returns:
    str: record identifier.
  """
  return f'record{record_index:04d}'


def _DrawPoisson(rng, mean):
  """Draws a Poisson distributed count by multiplying uniforms.

  Args:
    rng (Rng): pseudo random number generator.
    mean (float): expected count.

  Returns:
    int: count.
  """
  limit = math.exp(-mean)
  count = 0
  product = rng.NextUniform()
  while product > limit:
    count += 1
    product *= rng.NextUniform()

  return count


def _DrawInteger(rng, value_range):
  """Draws an integer uniformly from an inclusive range.

  Args:
    rng (Rng): pseudo random number generator.
    value_range (tuple[int, int]): inclusive range.

  Returns:
    int: integer.
  """
  minimum, maximum = value_range
  return minimum + rng.NextInteger(maximum - minimum + 1)


def _DrawReal(rng, value_range):
  """Draws a real uniformly from a range.

  Args:
    rng (Rng): pseudo random number generator.
    value_range (tuple[float, float]): range.

  Returns:
    float: real.
  """
  minimum, maximum = value_range
  return minimum + (maximum - minimum) * rng.NextUniform()


def _PlaceEvent(rng, is_occupied, duration):
  """Places an event on free samples.

  Args:
    rng (Rng): pseudo random number generator.
    is_occupied (numpy.ndarray): boolean array, True for samples occupied by
        an earlier event or its gap, updated on success.
    duration (int): number of samples of the event.

  Returns:
    int: start index of the event or None if it could not be placed.
  """
  number_of_samples = is_occupied.size
  if duration > number_of_samples:
    return None

  for _ in range(_MAXIMUM_PLACEMENT_ATTEMPTS):
    start_index = rng.NextInteger(number_of_samples - duration + 1)
    end_index = start_index + duration
    if not np.any(is_occupied[start_index:end_index]):
      is_occupied[max(start_index - _EVENT_GAP, 0):end_index + _EVENT_GAP] = (
          True)
      return start_index

  return None


def _Quantize(values, quantization_step):
  """Quantizes values to a step.

  Args:
    values (numpy.ndarray): values.
    quantization_step (float): step, 0.0 to leave the values unchanged.

  Returns:
    numpy.ndarray: quantized values.
  """
  if not quantization_step:
    return values

  return np.round(values / quantization_step) * quantization_step


def _AuditCleanWindows(values, labels, window_size, audit):
  """Counts the clean windows that could be mistaken for flatlines.

  Args:
    values (numpy.ndarray): sample values.
    labels (numpy.ndarray): truth labels.
    window_size (int): window size.
    audit (GenerationAudit): generation audit to update.
  """
  clean_values = np.where(
      labels == definitions.LABEL_VALID, values, np.nan)

  slopes = flatline.FitSlopes(clean_values, window_size)
  if not slopes.size:
    return

  windows = stride_tricks.sliding_window_view(clean_values, window_size)
  is_clean_window = ~np.any(np.isnan(windows), axis=1)
  is_identical_window = is_clean_window & np.all(
      windows == windows[:, :1], axis=1)

  with np.errstate(invalid='ignore'):
    is_zero_slope_window = is_clean_window & (
        np.abs(slopes) < flatline.FlatlineConfig().eps)

  audit.number_of_identical_clean_windows = int(
      np.count_nonzero(is_identical_window))
  audit.number_of_zero_slope_clean_windows = int(
      np.count_nonzero(is_zero_slope_window))


def GenerateRecord(synth_config, record_index):
  """Generates a synthetic record.

  The record is deterministic given the seed of the configuration and the
  record index, independent of other records.

  Args:
    synth_config (SynthConfig): synthetic data configuration.
    record_index (int): index of the record.

  Returns:
    tuple[Record, GenerationAudit]: record with truth labels and its
        generation audit.
  """
  rng = prng.Rng(synth_config.seed).Derive(
      definitions.STREAM_SYNTHESIS).Derive(record_index)

  record_identifier = GetRecordIdentifier(record_index)
  number_of_samples = synth_config.record_length
  audit = GenerationAudit(record_identifier)

  baseline = _DrawReal(rng, synth_config.baseline_range)
  drift_period = _DrawReal(rng, synth_config.drift_period_range)
  drift_phase = 2.0 * math.pi * rng.NextUniform()

  minutes = np.arange(number_of_samples, dtype=np.float64)
  drift = synth_config.drift_amplitude * np.sin(
      2.0 * math.pi * minutes / drift_period + drift_phase)

  ar_coefficient = synth_config.ar_coefficient
  innovations = synth_config.innovation_scale * rng.Gaussians(
      number_of_samples)
  # Start the AR(1) process in its stationary distribution.
  innovations[0] /= math.sqrt(1.0 - ar_coefficient ** 2)
  fluctuations = scipy_signal.lfilter(
      [1.0], [1.0, -ar_coefficient], innovations)

  clean_values = _Quantize(
      baseline + drift + fluctuations, synth_config.quantization_step)

  values = clean_values.copy()
  labels = np.full(number_of_samples, definitions.LABEL_VALID, dtype=np.int8)
  is_occupied = np.zeros(number_of_samples, dtype=bool)
  expected_events_scale = number_of_samples / 1000.0

  number_of_events = _DrawPoisson(
      rng, synth_config.flatline_rate * expected_events_scale)
  for _ in range(number_of_events):
    duration = _DrawInteger(rng, synth_config.flatline_duration_range)
    start_index = _PlaceEvent(rng, is_occupied, duration)
    if start_index is None:
      continue

    end_index = start_index + duration
    held_value = clean_values[max(start_index - 1, 0)]
    values[start_index:end_index] = held_value
    labels[start_index:end_index] = definitions.LABEL_ARTIFACT
    audit.number_of_flatlines += 1

  number_of_events = _DrawPoisson(
      rng, synth_config.spike_rate * expected_events_scale)
  for _ in range(number_of_events):
    duration = _DrawInteger(rng, synth_config.spike_duration_range)
    amplitude = _DrawReal(rng, synth_config.spike_amplitude_range)
    if rng.NextUniform() < 0.5:
      amplitude = -amplitude

    start_index = _PlaceEvent(rng, is_occupied, duration)
    if start_index is None:
      continue

    end_index = start_index + duration
    values[start_index:end_index] = _Quantize(
        clean_values[start_index:end_index] + amplitude,
        synth_config.quantization_step)
    labels[start_index:end_index] = definitions.LABEL_ARTIFACT
    audit.number_of_spikes += 1

  maximum_number_of_missing = int(
      MAXIMUM_MISSING_FRACTION * number_of_samples)
  number_of_missing = 0

  number_of_events = _DrawPoisson(
      rng, synth_config.missing_rate * expected_events_scale)
  for _ in range(number_of_events):
    duration = _DrawInteger(rng, synth_config.missing_duration_range)
    if number_of_missing + duration > maximum_number_of_missing:
      continue

    start_index = _PlaceEvent(rng, is_occupied, duration)
    if start_index is None:
      continue

    end_index = start_index + duration
    values[start_index:end_index] = np.nan
    labels[start_index:end_index] = definitions.LABEL_UNKNOWN
    number_of_missing += duration
    audit.number_of_missing_runs += 1

  audit.number_of_artifact_samples = int(
      np.count_nonzero(labels == definitions.LABEL_ARTIFACT))
  _AuditCleanWindows(values, labels, synth_config.audit_window_size, audit)

  truth_labels = records.LabelMask(labels, definitions.SOURCE_TRUTH)
  record = records.Record(
      record_identifier, np.arange(number_of_samples), values,
      truth_labels=truth_labels)

  return record, audit


def GenerateDataset(synth_config, ratios=(53, 15, 17)):
  """Generates a synthetic dataset with a split manifest.

  Args:
    synth_config (SynthConfig): synthetic data configuration.
    ratios (Optional[tuple[int, int, int]]): training, validation and test
        split ratios.

  Returns:
    SyntheticDataset: dataset.

  Raises:
    ValueError: if the dataset has fewer than 3 records.
  """
  records_list = []
  audits = []
  for record_index in range(synth_config.number_of_records):
    record, audit = GenerateRecord(synth_config, record_index)
    records_list.append(record)
    audits.append(audit)

  record_identifiers = [record.record_identifier for record in records_list]
  splits = preprocess.SplitRecords(
      record_identifiers, ratios=ratios, seed=synth_config.seed)

  split_per_record = {}
  for split, split_record_identifiers in zip(definitions.SPLITS, splits):
    for record_identifier in split_record_identifiers:
      split_per_record[record_identifier] = split

  manifest_entries = [
      csv_files.ManifestEntry(
          record_identifier, split_per_record[record_identifier],
          synth_config.seed, record_index)
      for record_index, record_identifier in enumerate(record_identifiers)]

  return SyntheticDataset(records_list, manifest_entries, audits)
