#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Tests for the experiment configuration."""

import unittest

from bpmartifacts import configuration
from bpmartifacts import definitions
from bpmartifacts import errors

from tests import test_lib


class ExperimentConfigurationTest(test_lib.BaseTestCase):
  """Tests for the experiment configuration."""

  def testInitialize(self):
    """Tests the __init__ function."""
    experiment_configuration = configuration.ExperimentConfiguration()
    self.assertEqual(experiment_configuration.window_len, 60)
    self.assertEqual(
        experiment_configuration.beta_grid, [0.1, 0.2, 0.3, 0.4, 0.5, 0.6])
    self.assertEqual(
        experiment_configuration.q_grid, [90.0, 92.0, 94.0, 96.0, 98.0])
    self.assertEqual(experiment_configuration.seeds, [1, 2, 3, 4, 5])
    self.assertEqual(experiment_configuration.split_ratios, [53, 15, 17])
    self.assertEqual(experiment_configuration.flatline_window, 10)
    self.assertEqual(
        experiment_configuration.kind, definitions.DETECTOR_KIND_VAE)

    experiment_configuration.Validate()

  def testCopy(self):
    """Tests the Copy function."""
    experiment_configuration = configuration.ExperimentConfiguration()
    copied_configuration = experiment_configuration.Copy()
    copied_configuration.seeds.append(6)
    copied_configuration.epochs = 1

    self.assertEqual(experiment_configuration.seeds, [1, 2, 3, 4, 5])
    self.assertEqual(experiment_configuration.epochs, 50)

  def testCopyToDict(self):
    """Tests the CopyToDict function."""
    experiment_configuration = configuration.ExperimentConfiguration()
    configuration_values = experiment_configuration.CopyToDict()
    configuration_values['seeds'].append(6)

    self.assertEqual(configuration_values['epochs'], 50)
    self.assertEqual(
        configuration_values['kind'], definitions.DETECTOR_KIND_VAE)
    self.assertEqual(experiment_configuration.seeds, [1, 2, 3, 4, 5])

  def testSet(self):
    """Tests the Set function."""
    experiment_configuration = configuration.ExperimentConfiguration()
    experiment_configuration.Set('epochs', ' 3 ')
    experiment_configuration.Set('sample_latent', 'yes')
    experiment_configuration.Set('q_grid', '90,95')

    self.assertEqual(experiment_configuration.epochs, 3)
    self.assertTrue(experiment_configuration.sample_latent)
    self.assertEqual(experiment_configuration.q_grid, [90.0, 95.0])

    with self.assertRaises(errors.ConfigurationError):
      experiment_configuration.Set('bogus', '1')

    with self.assertRaises(errors.ConfigurationError):
      experiment_configuration.Set('epochs', 'many')

    with self.assertRaises(errors.ConfigurationError):
      experiment_configuration.Set('epochs', '1.5')

    with self.assertRaises(errors.ConfigurationError):
      experiment_configuration.Set('tune_flatline', 'maybe')

    with self.assertRaises(errors.ConfigurationError):
      experiment_configuration.Set('seeds', '')

  def testValidate(self):
    """Tests the Validate function."""
    for key, value in (
        ('kind', 'lstm'), ('q', '101'), ('q_grid', '90,-1'),
        ('beta_grid', '0.1,-0.1'), ('window_len', '0'), ('jobs', '0'),
        ('split_ratios', '1,1'), ('arima_window', '5'),
        ('flatline_window_grid', '5,1'), ('learning_rate', '0'),
        ('n_records', '2')):
      experiment_configuration = configuration.ExperimentConfiguration()
      experiment_configuration.Set(key, value)

      with self.assertRaises(errors.ConfigurationError):
        experiment_configuration.Validate()

  def testGetTrainConfig(self):
    """Tests the GetTrainConfig function."""
    experiment_configuration = configuration.ExperimentConfiguration()
    experiment_configuration.Set('hidden_dim', '8')

    train_config = experiment_configuration.GetTrainConfig(
        definitions.DETECTOR_KIND_VAE, 0.3, 2)
    self.assertEqual(train_config.beta, 0.3)
    self.assertEqual(train_config.seed, 2)
    self.assertEqual(train_config.hidden_dim, 8)

    train_config = experiment_configuration.GetTrainConfig(
        definitions.DETECTOR_KIND_AE, 0.3, 2)
    self.assertEqual(train_config.beta, 0.0)
    self.assertEqual(train_config.mode, definitions.MODE_AE)

  def testGetFlatlineConfig(self):
    """Tests the GetFlatlineConfig function."""
    experiment_configuration = configuration.ExperimentConfiguration()
    self.assertEqual(
        experiment_configuration.GetFlatlineConfig().window_size, 10)
    self.assertEqual(experiment_configuration.GetFlatlineConfig(
        window_size=15).window_size, 15)


class ParseConfigurationTest(test_lib.BaseTestCase):
  """Tests for the configuration parsing and writing functions."""

  def testParseConfiguration(self):
    """Tests the ParseConfiguration function."""
    experiment_configuration = configuration.ParseConfiguration((
        '# Reduced experiment\n'
        'window_len = 30\n'
        'beta_grid=0.1,0.2\n'
        'kind=arima\n'))

    self.assertEqual(experiment_configuration.window_len, 30)
    self.assertEqual(experiment_configuration.beta_grid, [0.1, 0.2])
    self.assertEqual(
        experiment_configuration.kind, definitions.DETECTOR_KIND_ARIMA)
    self.assertEqual(experiment_configuration.epochs, 50)

    with self.assertRaises(errors.ConfigurationError):
      configuration.ParseConfiguration('window_length=30\n')

    with self.assertRaises(errors.ConfigurationError):
      configuration.ParseConfiguration('window_len\n')

    with self.assertRaises(errors.ConfigurationError):
      configuration.ParseConfiguration('epochs=1\nepochs=2\n')

    # Section headers would move the keys that follow out of validation.
    with self.assertRaises(errors.ConfigurationError):
      configuration.ParseConfiguration('epochs=2\n[other]\nbogus=1\n')

    with self.assertRaises(errors.ConfigurationError):
      configuration.ParseConfiguration('[configuration]\nepochs=2\n')

    experiment_configuration = configuration.ParseConfiguration(
        '# [comment]\nepochs=2\n')
    self.assertEqual(experiment_configuration.epochs, 2)

  def testApplyOverrides(self):
    """Tests the ApplyOverrides function."""
    experiment_configuration = configuration.ExperimentConfiguration()
    configuration.ApplyOverrides(
        experiment_configuration, ['q=95', 'seeds=7,8'])
    self.assertEqual(experiment_configuration.q, 95.0)
    self.assertEqual(experiment_configuration.seeds, [7, 8])

    configuration.ApplyOverrides(experiment_configuration, None)

    with self.assertRaises(errors.ConfigurationError):
      configuration.ApplyOverrides(experiment_configuration, ['q'])

  def testWriteConfiguration(self):
    """Tests the WriteConfiguration function."""
    experiment_configuration = configuration.ExperimentConfiguration()
    experiment_configuration.Set('beta', '0.30000000000000004')

    text = configuration.WriteConfiguration(experiment_configuration)
    lines = text.splitlines()
    self.assertEqual(lines, sorted(lines))
    self.assertIn('beta=0.30000000000000004', lines)
    self.assertIn('flatline_on_scaled=false', lines)
    self.assertIn('seeds=1,2,3,4,5', lines)

    parsed_configuration = configuration.ParseConfiguration(text)
    self.assertEqual(
        configuration.WriteConfiguration(parsed_configuration), text)


if __name__ == '__main__':
  unittest.main()
