#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Tests for the experiment orchestration."""

import os
import tempfile
import unittest

import numpy as np
import yaml

from bpmartifacts import configuration
from bpmartifacts import csv_files
from bpmartifacts import definitions
from bpmartifacts import errors
from bpmartifacts import evaluation
from bpmartifacts import experiment
from bpmartifacts import fusion
from bpmartifacts import model_file
from bpmartifacts import records
from bpmartifacts import synthetic

from tests import test_lib


_A = definitions.LABEL_ARTIFACT
_U = definitions.LABEL_UNKNOWN
_V = definitions.LABEL_VALID

# Small experiment that runs in seconds.
_OVERRIDES = [
    'arima_p=2', 'arima_window=20', 'batch_size=64', 'beta_grid=0.1,0.2',
    'epochs=1', 'flatline_duration_max=20', 'flatline_rate=10',
    'flatline_window=5', 'hidden_dim=4', 'latent_dim=2', 'n_records=10',
    'num_layers=1', 'q_grid=90,98', 'record_len=120', 'seeds=1',
    'spike_rate=30', 'window_len=12']


def _CreateConfiguration():
  """Creates the configuration of a small experiment.

  Returns:
    ExperimentConfiguration: configuration.
  """
  experiment_configuration = configuration.ExperimentConfiguration()
  configuration.ApplyOverrides(experiment_configuration, _OVERRIDES)
  experiment_configuration.Validate()
  return experiment_configuration


def _WriteDataset(data_directory, experiment_configuration):
  """Generates and writes a synthetic dataset.

  Args:
    data_directory (str): path of the dataset directory.
    experiment_configuration (ExperimentConfiguration): configuration.

  Returns:
    SyntheticDataset: dataset.
  """
  dataset = synthetic.GenerateDataset(
      experiment_configuration.GetSynthConfig(),
      ratios=experiment_configuration.split_ratios)
  experiment.WriteDataset(data_directory, dataset)
  return dataset


class DatasetTest(test_lib.BaseTestCase):
  """Tests for reading and writing datasets."""

  def testWriteDatasetAndLoadDataSplits(self):
    """Tests the WriteDataset and LoadDataSplits functions."""
    experiment_configuration = _CreateConfiguration()

    with tempfile.TemporaryDirectory() as temporary_directory:
      dataset = _WriteDataset(temporary_directory, experiment_configuration)

      for filename in ('generation_log.csv', 'manifest.csv'):
        path = os.path.join(temporary_directory, filename)
        self.assertTrue(os.path.isfile(path))

      data_splits = experiment.LoadDataSplits(temporary_directory)

    self.assertEqual(len(data_splits.training_records), 6)
    self.assertEqual(len(data_splits.validation_records), 2)
    self.assertEqual(len(data_splits.test_records), 2)

    records_per_identifier = {
        record.record_identifier: record for record in dataset.records}
    for record in data_splits.training_records:
      generated_record = records_per_identifier[record.record_identifier]
      self.assertTrue(np.array_equal(
          record.values, generated_record.values, equal_nan=True))
      self.assertEqual(record.truth_labels, generated_record.truth_labels)

  def testLoadDataSplitsWithRejectedRecord(self):
    """Tests that LoadDataSplits skips records that fail validation."""
    experiment_configuration = _CreateConfiguration()

    with tempfile.TemporaryDirectory() as temporary_directory:
      dataset = _WriteDataset(temporary_directory, experiment_configuration)

      rejected_record = test_lib.CreateRecord(
          [80.0] * 5 + [np.nan] * 5, labels=[_V] * 5 + [_U] * 5,
          record_identifier='rejected')
      path = os.path.join(temporary_directory, 'records', 'rejected.csv')
      with open(path, 'wb') as file_object:
        file_object.write(csv_files.WriteRecordCSV(rejected_record))

      manifest_entries = list(dataset.manifest_entries)
      manifest_entries.append(csv_files.ManifestEntry(
          'rejected', definitions.SPLIT_TRAIN, 0, 10))
      path = os.path.join(temporary_directory, 'manifest.csv')
      with open(path, 'wb') as file_object:
        file_object.write(csv_files.WriteManifestCSV(manifest_entries))

      with self.assertLogs('bpmartifacts.experiment', level='WARNING'):
        data_splits = experiment.LoadDataSplits(temporary_directory)

    record_identifiers = [
        record.record_identifier
        for record in data_splits.training_records]
    self.assertEqual(len(record_identifiers), 6)
    self.assertNotIn('rejected', record_identifiers)

  def testReadRecordFile(self):
    """Tests the ReadRecordFile function."""
    record = test_lib.CreateRecord([80.0, 81.0, 82.0])

    with tempfile.TemporaryDirectory() as temporary_directory:
      path = os.path.join(temporary_directory, 'patient7.csv')
      with open(path, 'wb') as file_object:
        file_object.write(csv_files.WriteRecordCSV(record))

      read_record = experiment.ReadRecordFile(path)
      self.assertEqual(read_record.record_identifier, 'patient7')
      self.assertEqual(read_record.values.tolist(), [80.0, 81.0, 82.0])

      read_record = experiment.ReadRecordFile(path, record_identifier='other')
      self.assertEqual(read_record.record_identifier, 'other')

      with self.assertRaises(OSError):
        experiment.ReadRecordFile(
            os.path.join(temporary_directory, 'bogus.csv'))


class SweepJobTest(test_lib.BaseTestCase):
  """Tests for the sweep jobs."""

  def testIdentifier(self):
    """Tests the identifier property."""
    self.assertEqual(
        experiment.SweepJob(definitions.DETECTOR_KIND_ARIMA).identifier,
        'arima')
    self.assertEqual(experiment.SweepJob(
        definitions.DETECTOR_KIND_AE, seed=1).identifier, 'ae-seed1')
    self.assertEqual(experiment.SweepJob(
        definitions.DETECTOR_KIND_VAE, beta=0.1, seed=2).identifier,
        'vae-beta0.1-seed2')

    with self.assertRaises(ValueError):
      experiment.SweepJob('lstm')

  def testCreateJobs(self):
    """Tests the CreateJobs function."""
    jobs = experiment.CreateJobs(definitions.DETECTOR_KIND_ARIMA, None, [1, 2])
    self.assertEqual([job.identifier for job in jobs], ['arima'])

    jobs = experiment.CreateJobs(definitions.DETECTOR_KIND_VAE, 0.3, [1, 2])
    self.assertEqual(
        [job.identifier for job in jobs],
        ['vae-beta0.3-seed1', 'vae-beta0.3-seed2'])

    with self.assertRaises(ValueError):
      experiment.CreateJobs(definitions.DETECTOR_KIND_AE, None, [])


class DetectionTest(test_lib.BaseTestCase):
  """Tests for the detection and report functions."""

  def _CreateDetectionResults(self):
    """Creates the detection results of a single record.

    Returns:
      tuple[list[DetectionResult], Threshold]: detection results and the
          threshold the spikes were labelled with.
    """
    record = test_lib.CreateRecord(
        [80.0, 81.0, 150.0, 82.0], labels=[_V, _V, _A, _V])
    delta_trace = records.DeltaTrace(
        'test', [np.nan, 0.5, 5.0, 0.4], number_of_fallbacks=2)
    flatline_mask = records.LabelMask(
        [_V, _V, _V, _V], definitions.SOURCE_FLATLINE)
    threshold = fusion.Threshold(
        98.0, 1.0, model_identifier='arima',
        validation_identifier='validation')

    return experiment.DetectArtifacts(
        [record], [delta_trace], [flatline_mask], threshold), threshold

  def testDetectArtifacts(self):
    """Tests the DetectArtifacts and EvaluateDetection functions."""
    detection_results, _ = self._CreateDetectionResults()

    self.assertEqual(len(detection_results), 1)
    self.assertEqual(
        detection_results[0].spike_mask.labels.tolist(), [_U, _V, _A, _V])
    self.assertEqual(
        detection_results[0].fused_mask.labels.tolist(), [_V, _V, _A, _V])

    self.assertEqual(
        experiment.EvaluateDetection(detection_results),
        evaluation.ConfusionCounts(true_positives=1, true_negatives=3))

    with self.assertRaises(ValueError):
      experiment.DetectArtifacts(
          [detection_results[0].record], [], [], fusion.Threshold(90.0, 1.0))

  def testCreateDetectionReport(self):
    """Tests the CreateDetectionReport and WriteReport functions."""
    detection_results, threshold = self._CreateDetectionResults()

    report = experiment.CreateDetectionReport(detection_results, threshold)
    self.assertEqual(report['threshold'], {
        'model_id': 'arima', 'q': 98.0, 'validation_id': 'validation',
        'value': 1.0})

    record_report = report['records']['test']
    self.assertEqual(record_report['delta_coverage'], 0.75)
    self.assertEqual(record_report['confusion'], {
        'fn': 0, 'fp': 0, 'tn': 3, 'tp': 1})

    totals = report['totals']
    self.assertEqual(totals['samples'], 4)
    self.assertEqual(totals['arima_fallbacks'], 2)
    self.assertEqual(totals['flatline_artifacts'], 0)
    self.assertEqual(totals['spike_artifacts'], 1)
    self.assertEqual(totals['fused_artifacts'], 1)
    self.assertEqual(totals['sensitivity'], 1.0)
    self.assertEqual(totals['specificity'], 1.0)

    byte_stream = experiment.WriteReport(report)
    self.assertEqual(yaml.safe_load(byte_stream.decode('utf-8')), report)

  def testCreateDeltaTraceGenerator(self):
    """Tests the CreateDeltaTraceGenerator function."""
    experiment_configuration = _CreateConfiguration()

    generator = experiment.CreateDeltaTraceGenerator(
        experiment_configuration, definitions.DETECTOR_KIND_ARIMA)
    self.assertEqual(generator.kind, definitions.DETECTOR_KIND_ARIMA)

    with self.assertRaises(errors.ProtocolError):
      experiment.CreateDeltaTraceGenerator(
          experiment_configuration, definitions.DETECTOR_KIND_VAE)

  def testBuildTrainingPool(self):
    """Tests the BuildTrainingPool function."""
    values = np.sin(np.arange(30) * 0.3)
    labels = [_V] * 30
    labels[10] = _A
    record = test_lib.CreateRecord(values, labels=labels)

    pool = experiment.BuildTrainingPool([record], 5, 1)
    # Windows overlapping sample 10 are not clean.
    self.assertEqual(len(pool), 26 - 5)

    with self.assertRaises(ValueError):
      experiment.BuildTrainingPool([test_lib.CreateRecord(values)], 5, 1)

  def testSelectFlatlineWindow(self):
    """Tests the SelectFlatlineWindow function."""
    experiment_configuration = _CreateConfiguration()
    window_size, scores = experiment.SelectFlatlineWindow(
        experiment_configuration, [])
    self.assertEqual(window_size, 5)
    self.assertIsNone(scores)

    values = np.random.default_rng(3).normal(80.0, 0.01, size=100)
    values[20:27] = 80.0
    # Ramp below the slope threshold in mmHg but not after scaling.
    values[60:80] = 80.0 + 5e-10 * np.arange(20)
    labels = [_V] * 100
    labels[20:27] = [_A] * 7
    record = test_lib.CreateRecord(values, labels=labels)

    experiment_configuration.Set('tune_flatline', 'true')
    experiment_configuration.Set('flatline_window_grid', '5,10')

    window_size, scores = experiment.SelectFlatlineWindow(
        experiment_configuration, [record])
    self.assertEqual(window_size, 5)
    self.assertAlmostEqual(scores[5], 73.0 / 93.0)

    experiment_configuration.Set('flatline_on_scaled', 'true')

    window_size, scores = experiment.SelectFlatlineWindow(
        experiment_configuration, [record])
    self.assertEqual(window_size, 5)
    self.assertAlmostEqual(scores[5], 1.0)
    self.assertAlmostEqual(scores[10], 0.0)

    flatline_masks = experiment.ComputeFlatlineMasks(
        experiment_configuration, [record], experiment.ScaleRecords([record]),
        window_size=window_size)
    self.assertEqual(
        flatline_masks[0].labels.tolist(), record.truth_labels.labels.tolist())


class RunJobTest(test_lib.BaseTestCase):
  """Tests for the RunJob function."""

  def testRunARIMAJob(self):
    """Tests running and resuming an ARIMA job."""
    experiment_configuration = _CreateConfiguration()
    job = experiment.SweepJob(definitions.DETECTOR_KIND_ARIMA)

    with tempfile.TemporaryDirectory() as temporary_directory:
      data_directory = os.path.join(temporary_directory, 'data')
      _WriteDataset(data_directory, experiment_configuration)
      data_splits = experiment.LoadDataSplits(data_directory)

      job_result = experiment.RunJob(
          experiment_configuration, data_splits, job,
          output_directory=temporary_directory)

      job_directory = os.path.join(temporary_directory, 'jobs', 'arima')
      self.assertTrue(
          os.path.isfile(os.path.join(job_directory, 'complete')))
      self.assertFalse(
          os.path.exists(os.path.join(job_directory, 'model.bin')))

      record_identifier = data_splits.test_records[0].record_identifier
      self.assertTrue(os.path.isfile(os.path.join(
          job_directory, 'test', f'{record_identifier:s}.delta.csv')))

      with self.assertLogs('bpmartifacts.experiment', level='INFO') as logs:
        resumed_job_result = experiment.RunJob(
            experiment_configuration, data_splits, job,
            output_directory=temporary_directory)

    self.assertIn('Skipping completed job: arima', logs.output[0])

    self.assertEqual(len(job_result.validation_delta_traces), 2)
    self.assertEqual(len(job_result.test_delta_traces), 2)
    for delta_trace, resumed_delta_trace in zip(
        job_result.test_delta_traces, resumed_job_result.test_delta_traces):
      self.assertTrue(np.array_equal(
          delta_trace.deltas, resumed_delta_trace.deltas, equal_nan=True))

    # The first arima_window deltas of a record are UNDEFINED.
    delta_trace = job_result.validation_delta_traces[0]
    self.assertFalse(np.any(delta_trace.is_defined[:20]))

  def testRunVAEJob(self):
    """Tests running a VAE job."""
    experiment_configuration = _CreateConfiguration()
    job = experiment.SweepJob(definitions.DETECTOR_KIND_VAE, beta=0.1, seed=1)

    with tempfile.TemporaryDirectory() as temporary_directory:
      data_directory = os.path.join(temporary_directory, 'data')
      _WriteDataset(data_directory, experiment_configuration)
      data_splits = experiment.LoadDataSplits(data_directory)

      job_result = experiment.RunJob(
          experiment_configuration, data_splits, job,
          output_directory=temporary_directory)

      job_directory = os.path.join(
          temporary_directory, 'jobs', 'vae-beta0.1-seed1')
      with open(os.path.join(job_directory, 'model.bin'), 'rb') as file_object:
        model_parameters = model_file.LoadModel(file_object.read())

      self.assertTrue(
          os.path.isfile(os.path.join(job_directory, 'loss_trace.csv')))

    self.assertEqual(model_parameters.window_length, 12)
    self.assertEqual(model_parameters.mode, definitions.MODE_VAE)
    self.assertEqual(model_parameters.beta, 0.1)
    self.assertEqual(model_parameters.seed, 1)

    for record, delta_trace in zip(
        data_splits.test_records, job_result.test_delta_traces):
      self.assertEqual(len(delta_trace), len(record))
      defined_deltas = delta_trace.deltas[delta_trace.is_defined]
      self.assertTrue(np.all(defined_deltas >= 0.0))

  def testRunJobAfterConfigurationChange(self):
    """Tests that a completed job is recomputed when its inputs change."""
    experiment_configuration = _CreateConfiguration()
    job = experiment.SweepJob(definitions.DETECTOR_KIND_AE, seed=1)

    with tempfile.TemporaryDirectory() as temporary_directory:
      data_directory = os.path.join(temporary_directory, 'data')
      _WriteDataset(data_directory, experiment_configuration)
      data_splits = experiment.LoadDataSplits(data_directory)

      experiment.RunJob(
          experiment_configuration, data_splits, job,
          output_directory=temporary_directory)

      # The percentile does not affect the delta traces of a job.
      experiment_configuration.Set('q', '90')
      with self.assertLogs('bpmartifacts.experiment', level='INFO') as logs:
        experiment.RunJob(
            experiment_configuration, data_splits, job,
            output_directory=temporary_directory)

      self.assertIn('Skipping completed job: ae-seed1', logs.output[0])

      experiment_configuration.Set('epochs', '2')
      with self.assertLogs('bpmartifacts.experiment', level='INFO') as logs:
        experiment.RunJob(
            experiment_configuration, data_splits, job,
            output_directory=temporary_directory)

      self.assertIn('Recomputing job: ae-seed1', logs.output[0])

      job_directory = os.path.join(temporary_directory, 'jobs', 'ae-seed1')
      with open(os.path.join(job_directory, 'loss_trace.csv'), 'rb') as (
          file_object):
        loss_trace_lines = file_object.read().splitlines()

      with self.assertLogs('bpmartifacts.experiment', level='INFO') as logs:
        experiment.RunJob(
            experiment_configuration, data_splits, job,
            output_directory=temporary_directory)

    self.assertIn('Skipping completed job: ae-seed1', logs.output[0])

    # A header and one row per epoch of the retrained model.
    self.assertEqual(len(loss_trace_lines), 3)


class SweepTest(test_lib.BaseTestCase):
  """Tests for the RunExperiment and Sweep functions."""

  def testRunExperiment(self):
    """Tests the RunExperiment function with the ARIMA baseline."""
    experiment_configuration = _CreateConfiguration()

    with tempfile.TemporaryDirectory() as temporary_directory:
      _WriteDataset(temporary_directory, experiment_configuration)
      data_splits = experiment.LoadDataSplits(temporary_directory)

    experiment_stats = experiment.RunExperiment(
        experiment_configuration, data_splits,
        definitions.DETECTOR_KIND_ARIMA, 0.3, 95.0, [1, 2])

    self.assertEqual(experiment_stats.kind, definitions.DETECTOR_KIND_ARIMA)
    self.assertIsNone(experiment_stats.beta)
    self.assertEqual(experiment_stats.number_of_iterations, 1)
    self.assertEqual(experiment_stats.setup_identifier, 'arima-q95.0')
    if experiment_stats.specificity_mean is not None:
      self.assertGreaterEqual(experiment_stats.specificity_mean, 0.0)
      self.assertLessEqual(experiment_stats.specificity_mean, 1.0)

  def testSweep(self):
    """Tests the Sweep and WriteSweepOutputs functions."""
    experiment_configuration = _CreateConfiguration()

    with tempfile.TemporaryDirectory() as temporary_directory:
      data_directory = os.path.join(temporary_directory, 'data')
      _WriteDataset(data_directory, experiment_configuration)
      data_splits = experiment.LoadDataSplits(data_directory)

      statistics = experiment.Sweep(
          experiment_configuration, data_splits,
          output_directory=temporary_directory)

      experiment.WriteSweepOutputs(
          temporary_directory, statistics, experiment_configuration)

      for filename in (
          'comparison.csv', 'plot_sensitivity.csv', 'plot_specificity.csv',
          'sweep.csv'):
        self.assertTrue(
            os.path.isfile(os.path.join(temporary_directory, filename)))

      with open(os.path.join(temporary_directory, 'sweep.csv'), 'rb') as (
          file_object):
        sweep_lines = file_object.read().splitlines()

      job_identifiers = sorted(os.listdir(
          os.path.join(temporary_directory, 'jobs')))

    self.assertEqual(job_identifiers, [
        'ae-seed1', 'arima', 'vae-beta0.1-seed1', 'vae-beta0.2-seed1'])

    self.assertEqual(len(statistics), 8)
    self.assertEqual(len(sweep_lines), 1 + 8)
    self.assertEqual(
        [experiment_stats.setup_identifier for experiment_stats in statistics],
        ['vae-beta0.1-q90.0', 'vae-beta0.1-q98.0', 'vae-beta0.2-q90.0',
         'vae-beta0.2-q98.0', 'ae-q90.0', 'ae-q98.0', 'arima-q90.0',
         'arima-q98.0'])

    with self.assertRaises(ValueError):
      experiment_configuration.q_grid = []
      experiment.Sweep(experiment_configuration, data_splits)


if __name__ == '__main__':
  unittest.main()
