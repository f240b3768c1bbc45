# -*- coding: utf-8 -*-
"""Spike threshold calibration, spike labelling and detector fusion."""

import logging

import numpy as np

from bpmartifacts import definitions
from bpmartifacts import errors
from bpmartifacts import preprocess
from bpmartifacts import records


logger = logging.getLogger(__name__)


class Threshold(object):
  """Spike detection threshold.

  Attributes:
    model_identifier (str): identifier of the model the threshold was
        calibrated for.
    q (float): percentile of the validation delta distribution.
    validation_identifier (str): identifier of the validation set.
    value (float): delta above which a sample is a spike.
  """

  def __init__(self, q, value, model_identifier='', validation_identifier=''):
    """Initializes a threshold.

    Args:
      q (float): percentile.
      value (float): threshold value.
      model_identifier (Optional[str]): model identifier.
      validation_identifier (Optional[str]): validation set identifier.

    Raises:
      ValueError: if the percentile is outside [0, 100].
    """
    if not 0.0 <= q <= 100.0:
      raise ValueError(f'Unsupported percentile: {q!r}')

    super(Threshold, self).__init__()
    self.model_identifier = model_identifier
    self.q = q
    self.validation_identifier = validation_identifier
    self.value = value


def CalibrateThreshold(
    delta_traces, flatline_masks, q, model_identifier='',
    validation_identifier=''):
  """Calibrates a threshold on the flatline-filtered validation deltas.

  The deltas of all validation records are pooled, after dropping UNDEFINED
  deltas and those of flatline samples, and the threshold is their q-th
  percentile.

  Args:
    delta_traces (list[DeltaTrace]): delta trace per validation record.
    flatline_masks (list[LabelMask]): flatline mask per validation record.
    q (float): percentile.
    model_identifier (Optional[str]): model identifier.
    validation_identifier (Optional[str]): validation set identifier.

  Returns:
    Threshold: threshold.

  Raises:
    CalibrationError: if no deltas remain after filtering.
    ValueError: if the delta traces and masks do not align.
  """
  if len(delta_traces) != len(flatline_masks):
    raise ValueError('Number of delta traces and flatline masks differ.')

  pooled_deltas = []
  for delta_trace, flatline_mask in zip(delta_traces, flatline_masks):
    if len(delta_trace) != len(flatline_mask):
      raise ValueError((
          f'Delta trace of record: {delta_trace.record_identifier:s} does not '
          f'align with its flatline mask.'))

    is_retained = delta_trace.is_defined & ~flatline_mask.is_artifact
    pooled_deltas.append(delta_trace.deltas[is_retained])

  if pooled_deltas:
    pooled_deltas = np.concatenate(pooled_deltas)

  if not len(pooled_deltas):
    raise errors.CalibrationError(
        'No validation deltas remain after flatline filtering.')

  value = preprocess.Percentile(pooled_deltas, q)

  logger.info((
      f'Calibrated threshold: {value:.6g} at percentile: {q!r} over: '
      f'{len(pooled_deltas):d} validation deltas'))

  return Threshold(
      q, value, model_identifier=model_identifier,
      validation_identifier=validation_identifier)


def DetectSpikes(delta_trace, threshold):
  """Labels the spike samples of a delta trace.

  Args:
    delta_trace (DeltaTrace): delta trace.
    threshold (Threshold): calibrated threshold.

  Returns:
    LabelMask: ARTIFACT where the delta exceeds the threshold, VALID where it
        does not and UNKNOWN where it is UNDEFINED.
  """
  labels = np.full(len(delta_trace), definitions.LABEL_UNKNOWN, dtype=np.int8)

  is_defined = delta_trace.is_defined
  labels[is_defined] = np.where(
      delta_trace.deltas[is_defined] > threshold.value,
      definitions.LABEL_ARTIFACT, definitions.LABEL_VALID)

  return records.LabelMask(labels, definitions.SOURCE_SPIKE)


def Fuse(flatline_mask, spike_mask):
  """Fuses the flatline and spike labels.

  Args:
    flatline_mask (LabelMask): flatline labels.
    spike_mask (LabelMask): spike labels.

  Returns:
    LabelMask: labels that are ARTIFACT where either detector labelled an
        artifact.

  Raises:
    ValueError: if the masks differ in length.
  """
  return records.OrMerge(flatline_mask, spike_mask)


def ReadThresholdFile(byte_stream):
  """Reads a threshold sidecar file.

  Args:
    byte_stream (bytes): UTF-8 encoded "key=value" lines.

  Returns:
    Threshold: threshold.

  Raises:
    ParseError: if the file cannot be parsed.
  """
  try:
    text = byte_stream.decode('utf-8')
  except UnicodeDecodeError as exception:
    raise errors.ParseError(
        f'Unable to decode threshold file with error: {exception!s}')

  values = {}
  for line_number, line in enumerate(text.splitlines(), start=1):
    line = line.strip()
    if not line or line.startswith('#'):
      continue

    key, separator, value = line.partition('=')
    if not separator:
      raise errors.ParseError(f'Malformed line: {line_number:d}')

    values[key.strip()] = value.strip()

  try:
    return Threshold(
        float(values['q']), float(values['value']),
        model_identifier=values.get('model_id', ''),
        validation_identifier=values.get('validation_id', ''))

  except KeyError as exception:
    raise errors.ParseError(f'Missing threshold key: {exception!s}')

  except ValueError as exception:
    raise errors.ParseError(
        f'Unsupported threshold value with error: {exception!s}')


def WriteThresholdFile(threshold):
  """Writes a threshold sidecar file.

  Args:
    threshold (Threshold): threshold.

  Returns:
    bytes: UTF-8 encoded "key=value" lines.
  """
  lines = [
      f'model_id={threshold.model_identifier:s}',
      f'q={float(threshold.q)!r}',
      f'validation_id={threshold.validation_identifier:s}',
      f'value={float(threshold.value)!r}',
      '']
  return '\n'.join(lines).encode('utf-8')
