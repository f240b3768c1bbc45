#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Acceptance tests on the full size synthetic benchmark.

These tests take up to half an hour and only run when the
BPMARTIFACTS_ACCEPTANCE environment variable is set.
"""

import unittest

import numpy as np

from bpmartifacts import autoencoder
from bpmartifacts import configuration
from bpmartifacts import definitions
from bpmartifacts import evaluation
from bpmartifacts import experiment
from bpmartifacts import flatline
from bpmartifacts import preprocess
from bpmartifacts import synthetic

from tests import test_lib


def _CreateDataSplits(experiment_configuration):
  """Generates the synthetic benchmark and splits it.

  Args:
    experiment_configuration (ExperimentConfiguration): configuration.

  Returns:
    DataSplits: records per split.
  """
  dataset = synthetic.GenerateDataset(
      experiment_configuration.GetSynthConfig(),
      ratios=experiment_configuration.split_ratios)

  records_per_split = {split: [] for split in definitions.SPLITS}
  for record, manifest_entry in zip(
      dataset.records, dataset.manifest_entries):
    records_per_split[manifest_entry.split].append(record)

  return experiment.DataSplits(
      records_per_split[definitions.SPLIT_TRAIN],
      records_per_split[definitions.SPLIT_VALIDATION],
      records_per_split[definitions.SPLIT_TEST])


class FlatlineAcceptanceTest(test_lib.BaseTestCase):
  """Acceptance tests of the flatline detector."""

  def testFlatlineExactness(self):
    """Tests the flatline detector on records with long flatlines."""
    self._SkipUnlessAcceptance()

    synth_config = synthetic.SynthConfig(
        number_of_records=50, flatline_duration_range=(10, 120),
        spike_rate=0.0, missing_rate=0.0, seed=11)
    flatline_config = flatline.FlatlineConfig(window_size=10)

    number_of_flatline_samples = 0
    number_of_detected_samples = 0
    number_of_clean_samples = 0
    number_of_false_positives = 0
    for record_index in range(synth_config.number_of_records):
      record, _ = synthetic.GenerateRecord(synth_config, record_index)
      flatline_mask = flatline.DetectFlatline(record, flatline_config)

      is_flatline = record.truth_labels.is_artifact
      is_clean = record.truth_labels.labels == definitions.LABEL_VALID

      number_of_flatline_samples += int(np.count_nonzero(is_flatline))
      number_of_detected_samples += int(np.count_nonzero(
          is_flatline & flatline_mask.is_artifact))
      number_of_clean_samples += int(np.count_nonzero(is_clean))
      number_of_false_positives += int(np.count_nonzero(
          is_clean & flatline_mask.is_artifact))

    self.assertGreater(number_of_flatline_samples, 0)
    self.assertEqual(number_of_detected_samples, number_of_flatline_samples)
    self.assertLess(number_of_false_positives, 0.01 * number_of_clean_samples)


class BenchmarkAcceptanceTest(test_lib.BaseTestCase):
  """Acceptance tests of the synthetic benchmark sweep."""

  def testSweep(self):
    """Tests the detection performance over the sweep."""
    self._SkipUnlessAcceptance()

    experiment_configuration = configuration.ExperimentConfiguration()
    experiment_configuration.Set('beta_grid', '0.1')
    experiment_configuration.Validate()

    data_splits = _CreateDataSplits(experiment_configuration)
    statistics = experiment.Sweep(experiment_configuration, data_splits)

    statistics_per_setup = {}
    for experiment_stats in statistics:
      statistics_per_setup.setdefault(
          (experiment_stats.kind, experiment_stats.beta), []).append(
              experiment_stats)

    self.assertEqual(len(statistics_per_setup), 3)

    vae_statistics = {
        experiment_stats.q: experiment_stats
        for experiment_stats in statistics_per_setup[
            (definitions.DETECTOR_KIND_VAE, 0.1)]}
    self.assertGreaterEqual(vae_statistics[90.0].sensitivity_mean, 0.90)
    self.assertGreaterEqual(vae_statistics[90.0].specificity_mean, 0.80)
    self.assertGreaterEqual(vae_statistics[98.0].specificity_mean, 0.90)

    for experiment_stats in vae_statistics.values():
      self.assertEqual(experiment_stats.number_of_iterations, 5)
      self.assertLessEqual(experiment_stats.sensitivity_std, 0.05)
      self.assertLessEqual(experiment_stats.specificity_std, 0.05)

    arima_statistics = statistics_per_setup[
        (definitions.DETECTOR_KIND_ARIMA, None)]
    self.assertEqual(len(arima_statistics), 5)

    # Raising Q trades sensitivity for specificity in every setup.
    for setup_statistics in statistics_per_setup.values():
      setup_statistics = sorted(
          setup_statistics, key=lambda experiment_stats: experiment_stats.q)
      sensitivities = [
          experiment_stats.sensitivity_mean
          for experiment_stats in setup_statistics]
      specificities = [
          experiment_stats.specificity_mean
          for experiment_stats in setup_statistics]
      self.assertEqual(sensitivities, sorted(sensitivities, reverse=True))
      self.assertEqual(specificities, sorted(specificities))


class BetaAcceptanceTest(test_lib.BaseTestCase):
  """Acceptance tests of the KL divergence weight."""

  def testHighFrequencyPower(self):
    """Tests that a larger beta smooths the reconstructions."""
    self._SkipUnlessAcceptance()

    experiment_configuration = configuration.ExperimentConfiguration()
    data_splits = _CreateDataSplits(experiment_configuration)

    windows = []
    for record in experiment.ScaleRecords(data_splits.test_records):
      window_batch = preprocess.MakeWindows(
          record, experiment_configuration.window_len,
          step=experiment_configuration.window_len)
      windows.append(window_batch.windows)

    windows = np.concatenate(windows)

    powers = {}
    for beta in (0.1, 0.6):
      training_result = experiment.TrainDetector(
          experiment_configuration, data_splits.training_records,
          definitions.DETECTOR_KIND_VAE, beta, 1)
      reconstructions = autoencoder.ReconstructWindows(
          windows, training_result.model_parameters)
      powers[beta] = evaluation.HighFrequencyPower(reconstructions)

    self.assertLess(powers[0.6], powers[0.1])


if __name__ == '__main__':
  unittest.main()
