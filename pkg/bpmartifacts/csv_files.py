# -*- coding: utf-8 -*-
"""Reading and writing of the CSV file formats.

All writers produce byte-deterministic output: UTF-8, "\\n" line endings and
locale independent number formatting.
"""

import csv
import io

import numpy as np

from bpmartifacts import definitions
from bpmartifacts import errors
from bpmartifacts import records


_LABEL_STRINGS = {
    definitions.LABEL_ARTIFACT: '1',
    definitions.LABEL_UNKNOWN: '',
    definitions.LABEL_VALID: '0'}

_LABEL_VALUES = {
    string: label for label, string in _LABEL_STRINGS.items()}

_LABEL_COLUMN_NAMES = frozenset(['label', 'pred_label'])


def _FormatExactFloat(value):
  """Formats a real so that it reads back bit-exactly.

  Args:
    value (float): value, where NaN is formatted as an empty field.

  Returns:
    str: formatted value.
  """
  if np.isnan(value):
    return ''

  return repr(float(value))


def _FormatValue(value):
  """Formats a sample value with up to 6 significant digits.

  Args:
    value (float): value, where NaN is formatted as an empty field.

  Returns:
    str: formatted value.
  """
  if np.isnan(value):
    return ''

  return f'{float(value):.6g}'


def _DecodeText(byte_stream):
  """Decodes an UTF-8 byte stream.

  Args:
    byte_stream (bytes): byte stream.

  Returns:
    str: decoded text.

  Raises:
    ParseError: if the byte stream cannot be decoded.
  """
  try:
    return byte_stream.decode('utf-8')
  except UnicodeDecodeError as exception:
    raise errors.ParseError(
        f'Unable to decode UTF-8 text with error: {exception!s}')


def _ReadRows(byte_stream):
  """Reads the non-empty rows of a CSV byte stream.

  Args:
    byte_stream (bytes): byte stream.

  Yields:
    tuple[int, list[str]]: line number and fields.
  """
  text = _DecodeText(byte_stream)
  reader = csv.reader(io.StringIO(text, newline=''))
  for fields in reader:
    if fields:
      yield reader.line_num, fields


def _WriteRows(header, rows):
  """Writes CSV rows.

  Args:
    header (list[str]): column names.
    rows (iterable[list[str]]): formatted rows.

  Returns:
    bytes: UTF-8 encoded CSV.
  """
  output = io.StringIO(newline='')
  writer = csv.writer(output, lineterminator='\n')
  writer.writerow(header)
  writer.writerows(rows)
  return output.getvalue().encode('utf-8')


def ParseRecordCSV(byte_stream, record_identifier=''):
  """Parses a record CSV.

  The header line must be "time_min,bpm,label". Label files written by
  WriteLabelsCSV, with header "time_min,bpm,pred_label,source", are accepted
  as well; additional columns are ignored.

  Args:
    byte_stream (bytes): UTF-8 encoded CSV.
    record_identifier (Optional[str]): identifier of the record.

  Returns:
    Record: record with truth labels.

  Raises:
    ParseError: if a row is malformed.
    RecordValidationError: if the minute indices are not strictly increasing.
  """
  rows = _ReadRows(byte_stream)

  try:
    _, header = next(rows)
  except StopIteration:
    raise errors.ParseError('Missing header line.')

  if (len(header) < 3 or header[0] != 'time_min' or header[1] != 'bpm' or
      header[2] not in _LABEL_COLUMN_NAMES):
    header_string = ','.join(header)
    raise errors.ParseError(f'Unsupported header line: {header_string:s}')

  labels = []
  minute_indices = []
  values = []
  for line_number, fields in rows:
    if len(fields) < 3:
      raise errors.ParseError(
          f'Line {line_number:d}: expected 3 fields, found {len(fields):d}')

    try:
      minute_index = int(fields[0], 10)
    except ValueError:
      raise errors.ParseError(
          f'Line {line_number:d}: unsupported time_min: {fields[0]:s}')

    if fields[1] == '':
      value = np.nan
    else:
      try:
        value = float(fields[1])
      except ValueError:
        raise errors.ParseError(
            f'Line {line_number:d}: unsupported bpm: {fields[1]:s}')

      if not np.isfinite(value):
        raise errors.ParseError(
            f'Line {line_number:d}: unsupported bpm: {fields[1]:s}')

    label = _LABEL_VALUES.get(fields[2], None)
    if label is None:
      raise errors.ParseError(
          f'Line {line_number:d}: unsupported label: {fields[2]:s}')

    if minute_indices and minute_index <= minute_indices[-1]:
      raise errors.RecordValidationError((
          f'Line {line_number:d}: time_min: {minute_index:d} does not '
          f'increase'))

    # MISSING samples carry UNKNOWN labels.
    if np.isnan(value):
      label = definitions.LABEL_UNKNOWN

    labels.append(label)
    minute_indices.append(minute_index)
    values.append(value)

  truth_labels = records.LabelMask(labels, definitions.SOURCE_TRUTH)
  return records.Record(
      record_identifier, minute_indices, values, truth_labels=truth_labels)


def WriteRecordCSV(record):
  """Writes a record CSV.

  Values are written with their exact representation so that reading the
  file back reproduces the record exactly.

  Args:
    record (Record): record.

  Returns:
    bytes: UTF-8 encoded CSV with header "time_min,bpm,label".
  """
  if record.truth_labels is None:
    labels = [definitions.LABEL_UNKNOWN] * len(record)
  else:
    labels = record.truth_labels.labels.tolist()

  rows = [
      [f'{minute_index:d}', _FormatExactFloat(value), _LABEL_STRINGS[label]]
      for minute_index, value, label in zip(
          record.minute_indices.tolist(), record.values.tolist(), labels)]

  return _WriteRows(['time_min', 'bpm', 'label'], rows)


def WriteLabelsCSV(record, mask):
  """Writes predicted labels of a record.

  Args:
    record (Record): record.
    mask (LabelMask): predicted labels.

  Returns:
    bytes: UTF-8 encoded CSV with header "time_min,bpm,pred_label,source".

  Raises:
    ValueError: if the mask and record differ in length.
  """
  if len(mask) != len(record):
    raise ValueError((
        f'Label mask length: {len(mask):d} does not match record length: '
        f'{len(record):d}'))

  rows = [
      [f'{minute_index:d}', _FormatValue(value), _LABEL_STRINGS[label],
       mask.source]
      for minute_index, value, label in zip(
          record.minute_indices.tolist(), record.values.tolist(),
          mask.labels.tolist())]

  return _WriteRows(['time_min', 'bpm', 'pred_label', 'source'], rows)


def ParseDeltaTraceCSV(byte_stream, record_identifier=''):
  """Parses a delta trace CSV.

  Args:
    byte_stream (bytes): UTF-8 encoded CSV with header "time_min,delta".
    record_identifier (Optional[str]): identifier of the record.

  Returns:
    DeltaTrace: delta trace.

  Raises:
    ParseError: if a row is malformed.
  """
  rows = _ReadRows(byte_stream)

  try:
    _, header = next(rows)
  except StopIteration:
    raise errors.ParseError('Missing header line.')

  if header[:2] != ['time_min', 'delta']:
    header_string = ','.join(header)
    raise errors.ParseError(f'Unsupported header line: {header_string:s}')

  deltas = []
  for line_number, fields in rows:
    if len(fields) != 2:
      raise errors.ParseError(
          f'Line {line_number:d}: expected 2 fields, found {len(fields):d}')

    try:
      deltas.append(float(fields[1]) if fields[1] else np.nan)
    except ValueError:
      raise errors.ParseError(
          f'Line {line_number:d}: unsupported delta: {fields[1]:s}')

  return records.DeltaTrace(record_identifier, deltas)


def WriteDeltaTraceCSV(record, delta_trace):
  """Writes a delta trace CSV.

  Args:
    record (Record): record the delta trace was computed for.
    delta_trace (DeltaTrace): delta trace.

  Returns:
    bytes: UTF-8 encoded CSV with header "time_min,delta".

  Raises:
    ValueError: if the delta trace and record differ in length.
  """
  if len(delta_trace) != len(record):
    raise ValueError((
        f'Delta trace length: {len(delta_trace):d} does not match record '
        f'length: {len(record):d}'))

  rows = [
      [f'{minute_index:d}', _FormatExactFloat(delta)]
      for minute_index, delta in zip(
          record.minute_indices.tolist(), delta_trace.deltas.tolist())]

  return _WriteRows(['time_min', 'delta'], rows)


class ManifestEntry(object):
  """Dataset manifest entry.

  Attributes:
    index (int): index of the record within the generated dataset.
    record_identifier (str): identifier of the record.
    seed (int): seed the record was generated with.
    split (str): split the record is assigned to.
  """

  def __init__(self, record_identifier, split, seed, index):
    """Initializes a manifest entry.

    Args:
      record_identifier (str): identifier of the record.
      split (str): split the record is assigned to.
      seed (int): seed the record was generated with.
      index (int): index of the record within the generated dataset.
    """
    super(ManifestEntry, self).__init__()
    self.index = index
    self.record_identifier = record_identifier
    self.seed = seed
    self.split = split


def ParseManifestCSV(byte_stream):
  """Parses a dataset manifest CSV.

  Args:
    byte_stream (bytes): UTF-8 encoded CSV with header
        "record_id,split,seed,index".

  Returns:
    list[ManifestEntry]: manifest entries.

  Raises:
    ParseError: if a row is malformed.
  """
  rows = _ReadRows(byte_stream)

  try:
    _, header = next(rows)
  except StopIteration:
    raise errors.ParseError('Missing header line.')

  if header != ['record_id', 'split', 'seed', 'index']:
    header_string = ','.join(header)
    raise errors.ParseError(f'Unsupported header line: {header_string:s}')

  entries = []
  for line_number, fields in rows:
    if len(fields) != 4 or fields[1] not in definitions.SPLITS:
      raise errors.ParseError(f'Line {line_number:d}: malformed entry')

    try:
      seed = int(fields[2], 10)
      index = int(fields[3], 10)
    except ValueError:
      raise errors.ParseError(f'Line {line_number:d}: malformed entry')

    entries.append(ManifestEntry(fields[0], fields[1], seed, index))

  return entries


def WriteManifestCSV(entries):
  """Writes a dataset manifest CSV.

  Args:
    entries (list[ManifestEntry]): manifest entries.

  Returns:
    bytes: UTF-8 encoded CSV with header "record_id,split,seed,index".
  """
  rows = [
      [entry.record_identifier, entry.split, f'{entry.seed:d}',
       f'{entry.index:d}'] for entry in entries]

  return _WriteRows(['record_id', 'split', 'seed', 'index'], rows)


def WriteLossTraceCSV(loss_trace):
  """Writes a training loss trace CSV.

  Args:
    loss_trace (list[EpochLoss]): per-epoch losses.

  Returns:
    bytes: UTF-8 encoded CSV with header "epoch,recon,kl,total".
  """
  rows = [
      [f'{epoch_loss.epoch:d}', _FormatExactFloat(epoch_loss.reconstruction),
       _FormatExactFloat(epoch_loss.kl_divergence),
       _FormatExactFloat(epoch_loss.total)] for epoch_loss in loss_trace]

  return _WriteRows(['epoch', 'recon', 'kl', 'total'], rows)


def WriteGenerationLogCSV(audits):
  """Writes a synthetic data generation log CSV.

  Args:
    audits (list[GenerationAudit]): per-record generation audits.

  Returns:
    bytes: UTF-8 encoded CSV.
  """
  header = [
      'record_id', 'flatlines', 'spikes', 'missing_runs', 'artifact_samples',
      'identical_clean_windows', 'zero_slope_clean_windows']

  rows = [
      [audit.record_identifier, f'{audit.number_of_flatlines:d}',
       f'{audit.number_of_spikes:d}', f'{audit.number_of_missing_runs:d}',
       f'{audit.number_of_artifact_samples:d}',
       f'{audit.number_of_identical_clean_windows:d}',
       f'{audit.number_of_zero_slope_clean_windows:d}'] for audit in audits]

  return _WriteRows(header, rows)


def _FormatStatistic(value):
  """Formats an experiment statistic.

  Args:
    value (float): value or None if UNDEFINED.

  Returns:
    str: formatted value, empty if UNDEFINED.
  """
  if value is None:
    return ''

  return repr(float(value))


def WriteSweepCSV(statistics):
  """Writes a sweep table CSV.

  Args:
    statistics (list[ExperimentStats]): one row per experimental setup.

  Returns:
    bytes: UTF-8 encoded CSV with header
        "kind,beta,q,sens_mean,sens_std,spec_mean,spec_std".
  """
  header = [
      'kind', 'beta', 'q', 'sens_mean', 'sens_std', 'spec_mean', 'spec_std']

  rows = [
      [stats.kind, _FormatStatistic(stats.beta), repr(float(stats.q)),
       _FormatStatistic(stats.sensitivity_mean),
       _FormatStatistic(stats.sensitivity_std),
       _FormatStatistic(stats.specificity_mean),
       _FormatStatistic(stats.specificity_std)] for stats in statistics]

  return _WriteRows(header, rows)


def WritePlotDataCSV(statistics, metric):
  """Writes the per-point data of a metric against Q, one series per beta.

  Only the VAE setups are written.

  Args:
    statistics (list[ExperimentStats]): one row per experimental setup.
    metric (str): metric, either "sensitivity" or "specificity".

  Returns:
    bytes: UTF-8 encoded CSV with header "beta,q,mean,std".

  Raises:
    ValueError: if the metric is not supported.
  """
  if metric not in ('sensitivity', 'specificity'):
    raise ValueError(f'Unsupported metric: {metric!s}')

  rows = []
  for stats in statistics:
    if stats.kind != definitions.DETECTOR_KIND_VAE:
      continue

    mean = getattr(stats, f'{metric:s}_mean')
    std = getattr(stats, f'{metric:s}_std')
    rows.append([
        repr(float(stats.beta)), repr(float(stats.q)), _FormatStatistic(mean),
        _FormatStatistic(std)])

  return _WriteRows(['beta', 'q', 'mean', 'std'], rows)


def WriteComparisonCSV(statistics, beta):
  """Writes the ARIMA, AE and VAE comparison table.

  Args:
    statistics (list[ExperimentStats]): one row per experimental setup.
    beta (float): beta of the VAE column.

  Returns:
    bytes: UTF-8 encoded CSV with one row per Q and cells formatted as
        "sensitivity|specificity" with 3 decimals.
  """
  vae_column = f'vae_beta_{beta!r}'
  header = ['q', 'arima', 'ae', vae_column]

  cells = {}
  q_values = []
  for stats in statistics:
    if stats.kind == definitions.DETECTOR_KIND_VAE:
      if stats.beta != beta:
        continue
      column = vae_column
    else:
      column = stats.kind

    if stats.q not in q_values:
      q_values.append(stats.q)

    sensitivity = '' if stats.sensitivity_mean is None else (
        f'{stats.sensitivity_mean:.3f}')
    specificity = '' if stats.specificity_mean is None else (
        f'{stats.specificity_mean:.3f}')
    cells[(stats.q, column)] = f'{sensitivity:s}|{specificity:s}'

  rows = [
      [repr(float(q))] + [cells.get((q, column), '') for column in header[1:]]
      for q in q_values]

  return _WriteRows(header, rows)
