# -*- coding: utf-8 -*-
"""Experiment pipelines: dataset files, detection, evaluation and sweeps.

A sweep trains every (detector kind, beta, seed) combination once as a job,
persists the validation and test delta traces of the job and reuses them for
every threshold percentile Q, since Q only affects calibration.
"""

import hashlib
import logging
import os

from concurrent import futures

import numpy as np
import yaml

from bpmartifacts import arima
from bpmartifacts import autoencoder
from bpmartifacts import csv_files
from bpmartifacts import definitions
from bpmartifacts import errors
from bpmartifacts import evaluation
from bpmartifacts import flatline
from bpmartifacts import fusion
from bpmartifacts import model_file
from bpmartifacts import preprocess
from bpmartifacts import records


logger = logging.getLogger(__name__)

_JOB_COMPLETE_MARKER = 'complete'

# Configuration keys that do not affect the delta traces of a job.
_JOB_INDEPENDENT_KEYS = frozenset([
    'beta', 'beta_grid', 'data_dir', 'jobs', 'kind', 'q', 'q_grid', 'seed',
    'seeds', 'tune_flatline'])

_VALIDATION_IDENTIFIER = 'validation'


class DataSplits(object):
  """Records of the training, validation and test splits.

  Attributes:
    test_records (list[Record]): test records.
    training_records (list[Record]): training records.
    validation_records (list[Record]): validation records.
  """

  def __init__(self, training_records, validation_records, test_records):
    """Initializes data splits.

    Args:
      training_records (list[Record]): training records.
      validation_records (list[Record]): validation records.
      test_records (list[Record]): test records.
    """
    super(DataSplits, self).__init__()
    self.test_records = test_records
    self.training_records = training_records
    self.validation_records = validation_records


class DetectionResult(object):
  """Detection result of a record.

  Attributes:
    delta_trace (DeltaTrace): per-sample errors of the spike back-end.
    flatline_mask (LabelMask): flatline detector labels.
    fused_mask (LabelMask): fused labels.
    record (Record): record, in mmHg.
    spike_mask (LabelMask): spike detector labels.
  """

  def __init__(self, record, flatline_mask, delta_trace, spike_mask):
    """Initializes a detection result.

    Args:
      record (Record): record.
      flatline_mask (LabelMask): flatline detector labels.
      delta_trace (DeltaTrace): delta trace.
      spike_mask (LabelMask): spike detector labels.
    """
    super(DetectionResult, self).__init__()
    self.delta_trace = delta_trace
    self.flatline_mask = flatline_mask
    self.fused_mask = fusion.Fuse(flatline_mask, spike_mask)
    self.record = record
    self.spike_mask = spike_mask


class SweepJob(object):
  """Training and delta trace computation of one detector and seed.

  Attributes:
    beta (float): KL divergence weight of a VAE job, None otherwise.
    kind (str): detector kind.
    seed (int): seed of an AE or VAE job, None for the ARIMA job.
  """

  def __init__(self, kind, beta=None, seed=None):
    """Initializes a sweep job.

    Args:
      kind (str): detector kind.
      beta (Optional[float]): KL divergence weight of a VAE job.
      seed (Optional[int]): seed of an AE or VAE job.

    Raises:
      ValueError: if the kind is not supported.
    """
    if kind not in definitions.DETECTOR_KINDS:
      raise ValueError(f'Unsupported detector kind: {kind!s}')

    super(SweepJob, self).__init__()
    self.beta = beta if kind == definitions.DETECTOR_KIND_VAE else None
    self.kind = kind
    self.seed = seed if kind != definitions.DETECTOR_KIND_ARIMA else None

  @property
  def identifier(self):
    """str: identifier of the job, also the name of its directory."""
    if self.kind == definitions.DETECTOR_KIND_ARIMA:
      return self.kind

    if self.kind == definitions.DETECTOR_KIND_AE:
      return f'{self.kind:s}-seed{self.seed:d}'

    return f'{self.kind:s}-beta{self.beta!r}-seed{self.seed:d}'


class SweepJobResult(object):
  """Delta traces computed by a sweep job.

  Attributes:
    job (SweepJob): job.
    test_delta_traces (list[DeltaTrace]): delta trace per test record.
    validation_delta_traces (list[DeltaTrace]): delta trace per validation
        record.
  """

  def __init__(self, job, validation_delta_traces, test_delta_traces):
    """Initializes a sweep job result.

    Args:
      job (SweepJob): job.
      validation_delta_traces (list[DeltaTrace]): validation delta traces.
      test_delta_traces (list[DeltaTrace]): test delta traces.
    """
    super(SweepJobResult, self).__init__()
    self.job = job
    self.test_delta_traces = test_delta_traces
    self.validation_delta_traces = validation_delta_traces


def _ReadFile(path):
  """Reads the data of a file.

  Args:
    path (str): path of the file.

  Returns:
    bytes: data.

  Raises:
    OSError: if the file cannot be read.
  """
  with open(path, 'rb') as file_object:
    return file_object.read()


def _WriteFile(path, data):
  """Writes data to a file, creating its parent directory when needed.

  Args:
    path (str): path of the file.
    data (bytes): data.

  Raises:
    OSError: if the file cannot be written.
  """
  directory = os.path.dirname(path)
  if directory:
    os.makedirs(directory, exist_ok=True)

  with open(path, 'wb') as file_object:
    file_object.write(data)


def ReadRecordFile(path, record_identifier=None):
  """Reads a record CSV file.

  Args:
    path (str): path of the record CSV file.
    record_identifier (Optional[str]): identifier of the record, where None
        uses the file name without extension.

  Returns:
    Record: record.

  Raises:
    OSError: if the file cannot be read.
    ParseError: if the file cannot be parsed.
    RecordValidationError: if the minute indices are not strictly increasing.
  """
  if record_identifier is None:
    record_identifier, _, _ = os.path.basename(path).rpartition('.')

  return csv_files.ParseRecordCSV(
      _ReadFile(path), record_identifier=record_identifier)


def LoadDataSplits(data_directory):
  """Loads the records of a dataset directory by their manifest split.

  The directory contains "manifest.csv" and one "records/<record_id>.csv"
  file per record. Records that do not pass validation are skipped.

  Args:
    data_directory (str): path of the dataset directory.

  Returns:
    DataSplits: records per split, in manifest order.

  Raises:
    OSError: if a file cannot be read.
    ParseError: if a file cannot be parsed.
    RecordValidationError: if the minute indices of a record are not strictly
        increasing.
  """
  manifest_path = os.path.join(data_directory, 'manifest.csv')
  manifest_entries = csv_files.ParseManifestCSV(_ReadFile(manifest_path))

  records_per_split = {split: [] for split in definitions.SPLITS}
  for entry in manifest_entries:
    path = os.path.join(
        data_directory, 'records', f'{entry.record_identifier:s}.csv')
    record = ReadRecordFile(path, record_identifier=entry.record_identifier)

    validation_result = records.ValidateRecord(record)
    if not validation_result.is_accepted:
      logger.warning((
          f'Skipping record: {entry.record_identifier:s} rejected by rule: '
          f'{validation_result.rule:s}'))
      continue

    records_per_split[entry.split].append(record)

  logger.info((
      f'Loaded: {len(records_per_split[definitions.SPLIT_TRAIN]):d} '
      f'training, {len(records_per_split[definitions.SPLIT_VALIDATION]):d} '
      f'validation and {len(records_per_split[definitions.SPLIT_TEST]):d} '
      f'test records'))

  return DataSplits(
      records_per_split[definitions.SPLIT_TRAIN],
      records_per_split[definitions.SPLIT_VALIDATION],
      records_per_split[definitions.SPLIT_TEST])


def WriteDataset(output_directory, dataset):
  """Writes a synthetic dataset to a directory.

  Args:
    output_directory (str): path of the output directory.
    dataset (SyntheticDataset): dataset.

  Raises:
    OSError: if a file cannot be written.
  """
  for record in dataset.records:
    path = os.path.join(
        output_directory, 'records', f'{record.record_identifier:s}.csv')
    _WriteFile(path, csv_files.WriteRecordCSV(record))

  _WriteFile(
      os.path.join(output_directory, 'manifest.csv'),
      csv_files.WriteManifestCSV(dataset.manifest_entries))
  _WriteFile(
      os.path.join(output_directory, 'generation_log.csv'),
      csv_files.WriteGenerationLogCSV(dataset.audits))


def ScaleRecords(records_list):
  """Scales records by their own robust statistics.

  Args:
    records_list (list[Record]): records in mmHg.

  Returns:
    list[Record]: scaled records.
  """
  return [
      preprocess.Scale(record, preprocess.ComputeScaleStats(record))
      for record in records_list]


def ComputeFlatlineMasks(
    configuration, records_list, scaled_records, window_size=None):
  """Runs the flatline detector over records.

  Args:
    configuration (ExperimentConfiguration): configuration, where
        flatline_on_scaled selects the scaled records.
    records_list (list[Record]): records in mmHg.
    scaled_records (list[Record]): scaled records.
    window_size (Optional[int]): window size that overrides flatline_window.

  Returns:
    list[LabelMask]: flatline labels per record.
  """
  flatline_config = configuration.GetFlatlineConfig(window_size=window_size)
  if configuration.flatline_on_scaled:
    records_list = scaled_records

  return [
      flatline.DetectFlatline(record, flatline_config)
      for record in records_list]


def SelectFlatlineWindow(configuration, validation_records):
  """Selects the flatline window size.

  The window sizes are scored on the same records the flatline detector runs
  on, scaled when flatline_on_scaled is set.

  Args:
    configuration (ExperimentConfiguration): configuration.
    validation_records (list[Record]): validation records in mmHg.

  Returns:
    tuple[int, dict[int, float]]: flatline_window or, when tune_flatline is
        set, the window size of flatline_window_grid that scores best on the
        validation records, and the score per window size, which is None
        without tuning.
  """
  if not configuration.tune_flatline:
    return configuration.flatline_window, None

  if configuration.flatline_on_scaled:
    validation_records = ScaleRecords(validation_records)

  window_size, scores = evaluation.TuneFlatlineWindow(
      validation_records, window_grid=configuration.flatline_window_grid,
      eps=configuration.flatline_eps)

  logger.info(f'Selected flatline window: {window_size:d}')
  return window_size, scores


def BuildTrainingPool(scaled_records, window_length, seed):
  """Pools the clean training windows of records.

  Args:
    scaled_records (list[Record]): scaled training records with truth labels.
    window_length (int): window length W.
    seed (int): seed of the pool shuffle.

  Returns:
    WindowBatch: pooled clean windows.

  Raises:
    ValueError: if a record has no truth labels or there are no records.
  """
  batches = []
  for record in scaled_records:
    if record.truth_labels is None:
      raise ValueError(
          f'Training record: {record.record_identifier:s} has no truth labels.')

    batches.append(preprocess.CleanTrainingWindows(
        record, record.truth_labels, window_length))

  return preprocess.ShuffleAndPool(batches, seed)


def TrainDetector(configuration, training_records, kind, beta, seed):
  """Trains an AE or VAE on the clean windows of the training records.

  Args:
    configuration (ExperimentConfiguration): configuration.
    training_records (list[Record]): training records in mmHg.
    kind (str): detector kind, either DETECTOR_KIND_AE or DETECTOR_KIND_VAE.
    beta (float): KL divergence weight.
    seed (int): seed of the run.

  Returns:
    TrainingResult: trained parameters and loss trace.

  Raises:
    NumericError: if training diverges.
    ValueError: if there are no clean training windows.
  """
  pool = BuildTrainingPool(
      ScaleRecords(training_records), configuration.window_len, seed)
  if not len(pool):
    raise ValueError('No clean training windows.')

  logger.info((
      f'Training: {kind:s} with beta: {beta!r} seed: {seed:d} on: '
      f'{len(pool):d} windows'))

  train_config = configuration.GetTrainConfig(kind, beta, seed)
  return autoencoder.Train(pool, train_config)


def CreateDeltaTraceGenerator(
    configuration, kind, model_parameters=None, seed=0):
  """Creates the delta trace generator of a spike back-end.

  Args:
    configuration (ExperimentConfiguration): configuration.
    kind (str): detector kind.
    model_parameters (Optional[ModelParams]): trained parameters, required
        for an AE or VAE.
    seed (Optional[int]): seed of latent sampling.

  Returns:
    DeltaTraceGenerator: delta trace generator.

  Raises:
    ProtocolError: if an AE or VAE has no trained parameters.
  """
  if kind == definitions.DETECTOR_KIND_ARIMA:
    return arima.ARIMADeltaTraceGenerator(configuration.GetARIMAConfig())

  if model_parameters is None:
    raise errors.ProtocolError(f'Missing trained model of kind: {kind:s}')

  return autoencoder.AutoencoderDeltaTraceGenerator(
      model_parameters, sample_latent=configuration.sample_latent, seed=seed)


def DetectArtifacts(records_list, delta_traces, flatline_masks, threshold):
  """Labels spikes and fuses them with the flatline labels.

  Args:
    records_list (list[Record]): records in mmHg.
    delta_traces (list[DeltaTrace]): delta trace per record.
    flatline_masks (list[LabelMask]): flatline labels per record.
    threshold (Threshold): calibrated threshold.

  Returns:
    list[DetectionResult]: detection result per record.

  Raises:
    ValueError: if the records, delta traces and masks do not align.
  """
  if not len(records_list) == len(delta_traces) == len(flatline_masks):
    raise ValueError('Number of records, delta traces and masks differ.')

  return [
      DetectionResult(
          record, flatline_mask, delta_trace,
          fusion.DetectSpikes(delta_trace, threshold))
      for record, delta_trace, flatline_mask in zip(
          records_list, delta_traces, flatline_masks)]


def EvaluateDetection(detection_results):
  """Pools the confusion counts of fused labels over records.

  Args:
    detection_results (list[DetectionResult]): detection results of records
        with truth labels.

  Returns:
    ConfusionCounts: pooled confusion counts.

  Raises:
    ValueError: if a record has no truth labels.
  """
  confusion_counts = evaluation.ConfusionCounts()
  for detection_result in detection_results:
    truth_labels = detection_result.record.truth_labels
    if truth_labels is None:
      raise ValueError((
          f'Record: {detection_result.record.record_identifier:s} has no '
          f'truth labels.'))

    confusion_counts += evaluation.Confusion(
        detection_result.fused_mask, truth_labels)

  return confusion_counts


def _GetJobDirectory(output_directory, job):
  """Retrieves the directory of a sweep job.

  Args:
    output_directory (str): path of the output directory.
    job (SweepJob): job.

  Returns:
    str: path of the job directory.
  """
  return os.path.join(output_directory, 'jobs', job.identifier)


def _GetDeltaTracePath(job_directory, split, record_identifier):
  """Retrieves the path of a persisted delta trace.

  Args:
    job_directory (str): path of the job directory.
    split (str): split of the record.
    record_identifier (str): identifier of the record.

  Returns:
    str: path of the delta trace CSV file.
  """
  return os.path.join(
      job_directory, split, f'{record_identifier:s}.delta.csv')


def _GetJobDigest(configuration, data_splits, job):
  """Computes the digest of the inputs of a sweep job.

  Args:
    configuration (ExperimentConfiguration): configuration.
    data_splits (DataSplits): data splits.
    job (SweepJob): job.

  Returns:
    str: hexadecimal SHA-256 digest of the configuration values that affect
        the delta traces of the job, the job identifier and the records.
  """
  hash_context = hashlib.sha256()
  hash_context.update(job.identifier.encode('utf-8'))

  configuration_values = configuration.CopyToDict()
  for key, value in sorted(configuration_values.items()):
    if key not in _JOB_INDEPENDENT_KEYS:
      hash_context.update(f'\n{key:s}={value!r}'.encode('utf-8'))

  for split, records_list in (
      (definitions.SPLIT_TRAIN, data_splits.training_records),
      (definitions.SPLIT_VALIDATION, data_splits.validation_records),
      (definitions.SPLIT_TEST, data_splits.test_records)):
    for record in records_list:
      hash_context.update(
          f'\n{split:s}:{record.record_identifier:s}'.encode('utf-8'))
      hash_context.update(
          np.asarray(record.minute_indices, dtype=np.int64).tobytes())
      hash_context.update(
          np.asarray(record.values, dtype=np.float64).tobytes())

  return hash_context.hexdigest()


def _IsJobComplete(job_directory, job_digest):
  """Determines if a job completed before with the same inputs.

  Args:
    job_directory (str): path of the job directory.
    job_digest (str): digest of the inputs of the job.

  Returns:
    bool: True if the job completed with the same inputs.
  """
  path = os.path.join(job_directory, _JOB_COMPLETE_MARKER)
  if not os.path.exists(path):
    return False

  return _ReadFile(path).decode('ascii', errors='replace').strip() == (
      job_digest)


def _ReadJobResult(job_directory, job, data_splits):
  """Reads the delta traces persisted by a completed job.

  Args:
    job_directory (str): path of the job directory.
    job (SweepJob): job.
    data_splits (DataSplits): data splits.

  Returns:
    SweepJobResult: job result.

  Raises:
    OSError: if a delta trace file cannot be read.
    ParseError: if a delta trace file cannot be parsed.
  """
  delta_traces_per_split = {}
  for split, records_list in (
      (definitions.SPLIT_VALIDATION, data_splits.validation_records),
      (definitions.SPLIT_TEST, data_splits.test_records)):
    delta_traces = []
    for record in records_list:
      path = _GetDeltaTracePath(
          job_directory, split, record.record_identifier)
      delta_trace = csv_files.ParseDeltaTraceCSV(
          _ReadFile(path), record_identifier=record.record_identifier)
      if len(delta_trace) != len(record):
        raise errors.ParseError(
            f'Delta trace: {path:s} does not match its record.')

      delta_traces.append(delta_trace)

    delta_traces_per_split[split] = delta_traces

  return SweepJobResult(
      job, delta_traces_per_split[definitions.SPLIT_VALIDATION],
      delta_traces_per_split[definitions.SPLIT_TEST])


def _WriteJobResult(
    job_directory, job_result, data_splits, training_result, job_digest):
  """Persists the outputs of a job and marks it complete.

  Args:
    job_directory (str): path of the job directory.
    job_result (SweepJobResult): job result.
    data_splits (DataSplits): data splits.
    training_result (TrainingResult): training result or None for the ARIMA
        job.
    job_digest (str): digest of the inputs of the job, stored in the
        completion marker.

  Raises:
    OSError: if a file cannot be written.
  """
  if training_result:
    _WriteFile(
        os.path.join(job_directory, 'model.bin'),
        model_file.SaveModel(training_result.model_parameters))
    _WriteFile(
        os.path.join(job_directory, 'loss_trace.csv'),
        csv_files.WriteLossTraceCSV(training_result.loss_trace))

  for split, records_list, delta_traces in (
      (definitions.SPLIT_VALIDATION, data_splits.validation_records,
       job_result.validation_delta_traces),
      (definitions.SPLIT_TEST, data_splits.test_records,
       job_result.test_delta_traces)):
    for record, delta_trace in zip(records_list, delta_traces):
      path = _GetDeltaTracePath(
          job_directory, split, record.record_identifier)
      _WriteFile(path, csv_files.WriteDeltaTraceCSV(record, delta_trace))

  # Written last so that an interrupted job is recomputed.
  _WriteFile(
      os.path.join(job_directory, _JOB_COMPLETE_MARKER),
      job_digest.encode('ascii'))


def RunJob(configuration, data_splits, job, output_directory=None):
  """Runs a sweep job.

  When an output directory is given, a job that completed before with the
  same configuration and records is read back instead of being recomputed.

  Args:
    configuration (ExperimentConfiguration): configuration.
    data_splits (DataSplits): data splits.
    job (SweepJob): job.
    output_directory (Optional[str]): path of the output directory.

  Returns:
    SweepJobResult: validation and test delta traces.

  Raises:
    NumericError: if training diverges, with the job identifier.
    OSError: if a job file cannot be read or written.
  """
  job_directory = None
  job_digest = None
  if output_directory:
    job_directory = _GetJobDirectory(output_directory, job)
    job_digest = _GetJobDigest(configuration, data_splits, job)
    if _IsJobComplete(job_directory, job_digest):
      logger.info(f'Skipping completed job: {job.identifier:s}')
      return _ReadJobResult(job_directory, job, data_splits)

    marker_path = os.path.join(job_directory, _JOB_COMPLETE_MARKER)
    if os.path.exists(marker_path):
      logger.info((
          f'Recomputing job: {job.identifier:s} completed with different '
          f'inputs'))
      os.remove(marker_path)

  training_result = None
  if job.kind == definitions.DETECTOR_KIND_ARIMA:
    generator = CreateDeltaTraceGenerator(configuration, job.kind)

  else:
    try:
      training_result = TrainDetector(
          configuration, data_splits.training_records, job.kind,
          job.beta or 0.0, job.seed)
    except errors.NumericError as exception:
      raise errors.NumericError(
          f'Job: {job.identifier:s} failed with error: {exception!s}')

    generator = CreateDeltaTraceGenerator(
        configuration, job.kind,
        model_parameters=training_result.model_parameters, seed=job.seed)

  job_result = SweepJobResult(
      job,
      list(generator.GenerateDeltaTraces(
          ScaleRecords(data_splits.validation_records))),
      list(generator.GenerateDeltaTraces(
          ScaleRecords(data_splits.test_records))))

  if job_directory:
    _WriteJobResult(
        job_directory, job_result, data_splits, training_result, job_digest)

  logger.info(f'Completed job: {job.identifier:s}')
  return job_result


def _RunJobInProcess(arguments):
  """Runs a sweep job in a worker process.

  Args:
    arguments (tuple[ExperimentConfiguration, DataSplits, SweepJob, str]):
        configuration, data splits, job and output directory.

  Returns:
    SweepJobResult: job result.
  """
  configuration, data_splits, job, output_directory = arguments
  return RunJob(
      configuration, data_splits, job, output_directory=output_directory)


def RunJobs(configuration, data_splits, jobs, output_directory=None):
  """Runs sweep jobs, concurrently when configured with multiple jobs.

  Every job is seeded independently so the results do not depend on the
  order of execution.

  Args:
    configuration (ExperimentConfiguration): configuration, where jobs is
        the maximum number of worker processes.
    data_splits (DataSplits): data splits.
    jobs (list[SweepJob]): jobs.
    output_directory (Optional[str]): path of the output directory.

  Returns:
    dict[str, SweepJobResult]: job result per job identifier.
  """
  if configuration.jobs > 1 and len(jobs) > 1:
    arguments = [
        (configuration, data_splits, job, output_directory) for job in jobs]
    with futures.ProcessPoolExecutor(
        max_workers=configuration.jobs) as executor:
      job_results = list(executor.map(_RunJobInProcess, arguments))

  else:
    job_results = [
        RunJob(
            configuration, data_splits, job,
            output_directory=output_directory)
        for job in jobs]

  return {
      job_result.job.identifier: job_result for job_result in job_results}


def CreateJobs(kind, beta, seeds):
  """Creates the jobs of one detector setup.

  Args:
    kind (str): detector kind.
    beta (float): KL divergence weight of a VAE setup.
    seeds (list[int]): seeds, ignored by the deterministic ARIMA setup.

  Returns:
    list[SweepJob]: one job per seed or a single ARIMA job.

  Raises:
    ValueError: if there are no seeds for an AE or VAE setup.
  """
  if kind == definitions.DETECTOR_KIND_ARIMA:
    return [SweepJob(kind)]

  if not seeds:
    raise ValueError('Missing seeds.')

  return [SweepJob(kind, beta=beta, seed=seed) for seed in seeds]


def _EvaluateJobResult(
    job_result, data_splits, validation_flatline_masks, test_flatline_masks,
    q):
  """Calibrates and evaluates the delta traces of a job at a percentile.

  Args:
    job_result (SweepJobResult): job result.
    data_splits (DataSplits): data splits.
    validation_flatline_masks (list[LabelMask]): validation flatline labels.
    test_flatline_masks (list[LabelMask]): test flatline labels.
    q (float): threshold percentile.

  Returns:
    ConfusionCounts: pooled test confusion counts.

  Raises:
    CalibrationError: if no validation deltas remain after filtering.
  """
  threshold = fusion.CalibrateThreshold(
      job_result.validation_delta_traces, validation_flatline_masks, q,
      model_identifier=job_result.job.identifier,
      validation_identifier=_VALIDATION_IDENTIFIER)

  detection_results = DetectArtifacts(
      data_splits.test_records, job_result.test_delta_traces,
      test_flatline_masks, threshold)

  return EvaluateDetection(detection_results)


def _ComputeSplitFlatlineMasks(configuration, data_splits):
  """Runs the flatline detector over the validation and test records.

  Args:
    configuration (ExperimentConfiguration): configuration.
    data_splits (DataSplits): data splits.

  Returns:
    tuple[list[LabelMask], list[LabelMask]]: validation and test flatline
        labels.
  """
  window_size, _ = SelectFlatlineWindow(
      configuration, data_splits.validation_records)

  validation_masks = ComputeFlatlineMasks(
      configuration, data_splits.validation_records,
      ScaleRecords(data_splits.validation_records), window_size=window_size)
  test_masks = ComputeFlatlineMasks(
      configuration, data_splits.test_records,
      ScaleRecords(data_splits.test_records), window_size=window_size)

  return validation_masks, test_masks


def _CreateSetupStats(
    kind, beta, q, jobs, job_results, data_splits, validation_flatline_masks,
    test_flatline_masks):
  """Creates the statistics of a detector setup at a percentile.

  Args:
    kind (str): detector kind.
    beta (float): KL divergence weight or None.
    q (float): threshold percentile.
    jobs (list[SweepJob]): jobs of the setup.
    job_results (dict[str, SweepJobResult]): job result per job identifier.
    data_splits (DataSplits): data splits.
    validation_flatline_masks (list[LabelMask]): validation flatline labels.
    test_flatline_masks (list[LabelMask]): test flatline labels.

  Returns:
    ExperimentStats: statistics over the jobs of the setup.
  """
  confusion_counts_per_iteration = []
  for job in jobs:
    try:
      confusion_counts = _EvaluateJobResult(
          job_results[job.identifier], data_splits,
          validation_flatline_masks, test_flatline_masks, q)
    except errors.CalibrationError as exception:
      raise errors.CalibrationError(
          f'Job: {job.identifier:s} at Q: {q!r} failed with error: '
          f'{exception!s}')

    confusion_counts_per_iteration.append(confusion_counts)

  experiment_stats = evaluation.CreateExperimentStats(
      kind, beta, q, confusion_counts_per_iteration)

  logger.info((
      f'Setup: {experiment_stats.setup_identifier:s} sensitivity: '
      f'{experiment_stats.sensitivity_mean!r} specificity: '
      f'{experiment_stats.specificity_mean!r}'))

  return experiment_stats


def RunExperiment(
    configuration, data_splits, kind, beta, q, seeds, output_directory=None):
  """Runs an experiment of one detector setup over seeds.

  For every seed the detector is trained on the training records, the
  threshold is calibrated on the validation records and the fused labels are
  evaluated on the pooled test records. The ARIMA setup runs once.

  Args:
    configuration (ExperimentConfiguration): configuration.
    data_splits (DataSplits): data splits.
    kind (str): detector kind.
    beta (float): KL divergence weight of a VAE setup.
    q (float): threshold percentile.
    seeds (list[int]): seeds.
    output_directory (Optional[str]): path of the output directory to
        persist and resume jobs in.

  Returns:
    ExperimentStats: mean and standard deviation over the iterations.

  Raises:
    CalibrationError: if no validation deltas remain after filtering.
    NumericError: if training diverges.
  """
  if kind != definitions.DETECTOR_KIND_VAE:
    beta = None

  jobs = CreateJobs(kind, beta, seeds)
  job_results = RunJobs(
      configuration, data_splits, jobs, output_directory=output_directory)

  validation_masks, test_masks = _ComputeSplitFlatlineMasks(
      configuration, data_splits)

  return _CreateSetupStats(
      kind, beta, q, jobs, job_results, data_splits, validation_masks,
      test_masks)


def Sweep(configuration, data_splits, output_directory=None):
  """Runs the experiment of every detector setup and percentile.

  The setups are the VAE for every beta of beta_grid, the AE and the ARIMA
  baseline, each evaluated at every percentile of q_grid. Detectors are
  trained once per (kind, beta, seed) and reused across percentiles.

  Args:
    configuration (ExperimentConfiguration): configuration.
    data_splits (DataSplits): data splits.
    output_directory (Optional[str]): path of the output directory to
        persist and resume jobs in.

  Returns:
    list[ExperimentStats]: one row per setup and percentile, the VAE rows
        by beta first, then the AE and ARIMA rows.

  Raises:
    CalibrationError: if no validation deltas remain after filtering.
    NumericError: if training diverges.
    ValueError: if a grid is empty.
  """
  if not configuration.beta_grid or not configuration.q_grid:
    raise ValueError('Missing beta or Q grid.')

  setups = [
      (definitions.DETECTOR_KIND_VAE, beta)
      for beta in configuration.beta_grid]
  setups.append((definitions.DETECTOR_KIND_AE, None))
  setups.append((definitions.DETECTOR_KIND_ARIMA, None))

  jobs_per_setup = [
      CreateJobs(kind, beta, configuration.seeds) for kind, beta in setups]
  jobs = [job for setup_jobs in jobs_per_setup for job in setup_jobs]

  logger.info((
      f'Sweeping: {len(setups) * len(configuration.q_grid):d} setups with: '
      f'{len(jobs):d} jobs'))

  job_results = RunJobs(
      configuration, data_splits, jobs, output_directory=output_directory)

  validation_masks, test_masks = _ComputeSplitFlatlineMasks(
      configuration, data_splits)

  statistics = []
  for (kind, beta), setup_jobs in zip(setups, jobs_per_setup):
    for q in configuration.q_grid:
      statistics.append(_CreateSetupStats(
          kind, beta, q, setup_jobs, job_results, data_splits,
          validation_masks, test_masks))

  return statistics


def WriteSweepOutputs(output_directory, statistics, configuration):
  """Writes the sweep table, comparison table and plot data.

  Args:
    output_directory (str): path of the output directory.
    statistics (list[ExperimentStats]): sweep rows.
    configuration (ExperimentConfiguration): configuration, where the first
        beta of beta_grid selects the VAE column of the comparison table.

  Raises:
    OSError: if a file cannot be written.
  """
  _WriteFile(
      os.path.join(output_directory, 'sweep.csv'),
      csv_files.WriteSweepCSV(statistics))

  if configuration.beta_grid:
    _WriteFile(
        os.path.join(output_directory, 'comparison.csv'),
        csv_files.WriteComparisonCSV(statistics, configuration.beta_grid[0]))

  for metric in ('sensitivity', 'specificity'):
    _WriteFile(
        os.path.join(output_directory, f'plot_{metric:s}.csv'),
        csv_files.WritePlotDataCSV(statistics, metric))


def _CreateConfusionReport(confusion_counts):
  """Creates the report values of confusion counts.

  Args:
    confusion_counts (ConfusionCounts): confusion counts.

  Returns:
    dict[str, object]: counts, sensitivity and specificity, where an
        UNDEFINED metric is None.
  """
  return {
      'confusion': confusion_counts.CopyToDict(),
      'sensitivity': evaluation.Sensitivity(confusion_counts),
      'specificity': evaluation.Specificity(confusion_counts)}


def CreateDetectionReport(detection_results, threshold):
  """Creates the summary report of a detection run.

  Args:
    detection_results (list[DetectionResult]): detection results.
    threshold (Threshold): threshold the spikes were labelled with.

  Returns:
    dict[str, object]: report with per-record and pooled counts.
  """
  record_reports = {}
  totals = {
      'arima_fallbacks': 0,
      'flatline_artifacts': 0,
      'fused_artifacts': 0,
      'samples': 0,
      'spike_artifacts': 0}

  confusion_counts_total = None
  for detection_result in detection_results:
    record = detection_result.record
    number_of_samples = len(record)
    number_of_defined_deltas = int(
        detection_result.delta_trace.is_defined.sum())

    record_report = {
        'arima_fallbacks': detection_result.delta_trace.number_of_fallbacks,
        'delta_coverage': (
            number_of_defined_deltas / number_of_samples
            if number_of_samples else 0.0),
        'flatline_artifacts': detection_result.flatline_mask.artifact_count,
        'fused_artifacts': detection_result.fused_mask.artifact_count,
        'samples': number_of_samples,
        'spike_artifacts': detection_result.spike_mask.artifact_count}

    for key in totals:
      totals[key] += record_report[key]

    if record.truth_labels is not None:
      confusion_counts = evaluation.Confusion(
          detection_result.fused_mask, record.truth_labels)
      record_report.update(_CreateConfusionReport(confusion_counts))

      if confusion_counts_total is None:
        confusion_counts_total = confusion_counts
      else:
        confusion_counts_total += confusion_counts

    record_reports[record.record_identifier] = record_report

  if confusion_counts_total is not None:
    totals.update(_CreateConfusionReport(confusion_counts_total))

  return {
      'records': record_reports,
      'threshold': {
          'model_id': threshold.model_identifier,
          'q': float(threshold.q),
          'validation_id': threshold.validation_identifier,
          'value': float(threshold.value)},
      'totals': totals}


def WriteReport(report):
  """Writes a report as YAML.

  Args:
    report (dict[str, object]): report.

  Returns:
    bytes: UTF-8 encoded YAML with sorted keys.
  """
  text = yaml.safe_dump(report, default_flow_style=False, sort_keys=True)
  return text.encode('utf-8')
