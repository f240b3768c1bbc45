#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Tests for the LSTM autoencoder and beta-VAE."""

import unittest

import numpy as np

from bpmartifacts import autoencoder
from bpmartifacts import definitions
from bpmartifacts import preprocess
from bpmartifacts import prng

from tests import test_lib


def _CreateModelParams(mode=definitions.MODE_VAE, beta=0.5, seed=1):
  """Creates the reduced model used for gradient checks.

  Args:
    mode (Optional[str]): training mode.
    beta (Optional[float]): KL divergence weight.
    seed (Optional[int]): seed.

  Returns:
    ModelParams: model parameters.
  """
  return autoencoder.InitializeModelParams(
      12, hidden_dim=8, latent_dim=4, number_of_layers=2, mode=mode,
      beta=beta, seed=seed)


def _CreatePool(number_of_windows, window_length):
  """Creates a pool of smooth windows.

  Args:
    number_of_windows (int): number of windows.
    window_length (int): window length.

  Returns:
    WindowBatch: windows.
  """
  values = np.sin(np.arange(number_of_windows + window_length - 1) * 0.3)
  record = test_lib.CreateRecord(values)
  return preprocess.MakeWindows(record, window_length)


class ModelParamsTest(test_lib.BaseTestCase):
  """Tests for the model parameters."""

  def testInitializeModelParams(self):
    """Tests the InitializeModelParams function."""
    model_parameters = _CreateModelParams()
    shapes = model_parameters.GetTensorShapes()
    self.assertEqual(len(shapes), 18)
    self.assertEqual(shapes['encoder.lstm0.input_weights'], (1, 32))
    self.assertEqual(shapes['decoder.lstm0.input_weights'], (4, 32))
    self.assertEqual(shapes['encoder.log_variance.weights'], (8, 4))
    self.assertEqual(shapes['decoder.output.weights'], (8, 1))

    self.assertEqual(model_parameters, _CreateModelParams())
    self.assertNotEqual(model_parameters, _CreateModelParams(seed=2))

    ae_parameters = _CreateModelParams(mode=definitions.MODE_AE)
    self.assertNotIn(
        'encoder.log_variance.weights', ae_parameters.GetTensorShapes())

  def testInitializeErrors(self):
    """Tests the __init__ function with unsupported values."""
    with self.assertRaises(ValueError):
      autoencoder.ModelParams(12, mode='bogus')

    with self.assertRaises(ValueError):
      autoencoder.ModelParams(0)

    with self.assertRaises(ValueError):
      autoencoder.ModelParams(12, beta=-0.1)

    tensors = dict(_CreateModelParams().tensors)
    del tensors['decoder.output.biases']
    with self.assertRaises(ValueError):
      autoencoder.ModelParams(12, hidden_dim=8, latent_dim=4, tensors=tensors)


class LatentTest(test_lib.BaseTestCase):
  """Tests for the encoder, reparameterization and decoder."""

  def testEncodeAndDecode(self):
    """Tests the Encode and Decode functions."""
    model_parameters = _CreateModelParams()
    windows = prng.Rng(5).Gaussians((3, 12))

    latent_sample = autoencoder.Encode(windows, model_parameters)
    self.assertEqual(latent_sample.mean.shape, (3, 4))
    self.assertEqual(latent_sample.log_variance.shape, (3, 4))
    self.assertIs(latent_sample.latent, latent_sample.mean)

    reconstructions = autoencoder.Decode(latent_sample.mean, model_parameters)
    self.assertEqual(reconstructions.shape, (3, 12))

    single_reconstruction = autoencoder.Decode(
        latent_sample.mean[0], model_parameters)
    self.assertEqual(single_reconstruction.shape, (1, 12))

    with self.assertRaises(ValueError):
      autoencoder.Encode(np.zeros((3, 11)), model_parameters)

    with self.assertRaises(ValueError):
      autoencoder.Decode(np.zeros((3, 5)), model_parameters)

    ae_parameters = _CreateModelParams(mode=definitions.MODE_AE)
    latent_sample = autoencoder.Encode(windows, ae_parameters)
    self.assertIsNone(latent_sample.log_variance)

  def testReparameterize(self):
    """Tests the Reparameterize function."""
    latent_sample = autoencoder.LatentSample(
        np.array([[1.0, -1.0]]), log_variance=np.array([[0.0, np.log(4.0)]]))
    latents = autoencoder.Reparameterize(latent_sample, np.array([[0.5, 0.5]]))
    self.assertTrue(np.allclose(latents, [[1.5, 0.0]], rtol=0.0, atol=1e-15))

    latents = autoencoder.Reparameterize(latent_sample, np.zeros((1, 2)))
    self.assertTrue(np.array_equal(latents, latent_sample.mean))

    latent_sample = autoencoder.LatentSample(
        np.array([[2.0]]), log_variance=np.zeros((1, 1)))
    latents = autoencoder.Reparameterize(latent_sample, np.ones((1, 1)))
    self.assertEqual(latents.tolist(), [[3.0]])

    with self.assertRaises(ValueError):
      autoencoder.Reparameterize(
          autoencoder.LatentSample(np.zeros((1, 2))), np.zeros((1, 2)))

  def testReparameterizeMoments(self):
    """Tests the moments of latents drawn from the noise stream."""
    number_of_latents = 100000
    means = np.tile([1.0, -2.0], (number_of_latents, 1))
    variances = np.array([1.0, 4.0])
    latent_sample = autoencoder.LatentSample(
        means, log_variance=np.tile(np.log(variances), (number_of_latents, 1)))

    noise = prng.Rng(13).Derive(definitions.STREAM_NOISE).Gaussians(
        (number_of_latents, 2))
    latents = autoencoder.Reparameterize(latent_sample, noise)

    tolerances = 5.0 * np.sqrt(variances / number_of_latents)
    self.assertTrue(np.all(
        np.abs(np.mean(latents, axis=0) - [1.0, -2.0]) < tolerances))
    self.assertTrue(np.allclose(
        np.var(latents, axis=0), variances, rtol=0.03, atol=0.0))

  def testDecodeWithZeroParameters(self):
    """Tests that all-zero parameters decode to all-zero windows."""
    model_parameters = _CreateModelParams()
    zero_tensors = {
        name: np.zeros_like(values)
        for name, values in model_parameters.tensors.items()}
    zero_parameters = model_parameters.CopyWithTensors(zero_tensors)

    reconstructions = autoencoder.Decode(
        prng.Rng(14).Gaussians((3, 4)), zero_parameters)
    self.assertTrue(np.array_equal(reconstructions, np.zeros((3, 12))))

  def testDecodeConstantWindows(self):
    """Tests that an AE trained on constant windows reconstructs them."""
    levels = np.linspace(-1.0, 1.0, 9)
    windows = np.repeat(levels[:, np.newaxis], 8, axis=1)
    pool = preprocess.WindowBatch(
        windows, ['test'] * len(levels), np.arange(len(levels)), 8)

    train_config = autoencoder.TrainConfig(
        epochs=200, batch_size=4, learning_rate=1e-2, seed=2, beta=0.0,
        mode=definitions.MODE_AE, hidden_dim=8, latent_dim=2,
        number_of_layers=1)
    model_parameters = autoencoder.Train(pool, train_config).model_parameters

    latent_sample = autoencoder.Encode(windows, model_parameters)
    reconstructions = autoencoder.Decode(latent_sample.mean, model_parameters)
    mean_absolute_errors = np.mean(np.abs(reconstructions - windows), axis=1)
    self.assertTrue(np.all(mean_absolute_errors < 0.1))

    repeated_reconstructions = autoencoder.Decode(
        latent_sample.mean, model_parameters)
    self.assertTrue(np.array_equal(repeated_reconstructions, reconstructions))


class LossTest(test_lib.BaseTestCase):
  """Tests for the training loss functions."""

  def testKLDivergence(self):
    """Tests the KLDivergence function."""
    kl_divergences = autoencoder.KLDivergence(
        np.zeros((1, 3)), np.zeros((1, 3)))
    self.assertEqual(kl_divergences.tolist(), [0.0])

    kl_divergences = autoencoder.KLDivergence(
        np.array([[1.0, 0.0]]), np.zeros((1, 2)))
    self.assertEqual(kl_divergences.tolist(), [0.5])

    rng = prng.Rng(6)
    kl_divergences = autoencoder.KLDivergence(
        rng.Gaussians((10000, 4)), 2.0 * rng.Gaussians((10000, 4)))
    self.assertEqual(kl_divergences.shape, (10000,))
    self.assertTrue(np.all(kl_divergences >= 0.0))

  def testComputeELBOLoss(self):
    """Tests the ComputeELBOLoss function."""
    windows = np.array([[1.0, 2.0], [0.0, 0.0]])
    reconstructions = np.array([[1.0, 0.0], [1.0, 1.0]])
    latent_sample = autoencoder.LatentSample(
        np.array([[1.0], [0.0]]), log_variance=np.zeros((2, 1)))

    total, loss_parts = autoencoder.ComputeELBOLoss(
        windows, reconstructions, latent_sample, 0.5)
    self.assertEqual(loss_parts.reconstruction, 1.5)
    self.assertEqual(loss_parts.kl_divergence, 0.25)
    self.assertEqual(total, 1.625)
    self.assertEqual(loss_parts.total, total)

    total, loss_parts = autoencoder.ComputeELBOLoss(
        windows, reconstructions,
        autoencoder.LatentSample(np.zeros((2, 1))), 0.5)
    self.assertEqual(loss_parts.kl_divergence, 0.0)
    self.assertEqual(total, 1.5)

    with self.assertRaises(ValueError):
      autoencoder.ComputeELBOLoss(
          windows, reconstructions[:1], latent_sample, 0.5)


class GradientTest(test_lib.BaseTestCase):
  """Tests the analytic gradients against central finite differences."""

  _STEP_SIZE = 1e-5

  def _ComputeLoss(self, windows, model_parameters, noise):
    """Computes the total training loss.

    Args:
      windows (numpy.ndarray): windows.
      model_parameters (ModelParams): parameters.
      noise (numpy.ndarray): frozen reparameterization noise.

    Returns:
      float: total loss.
    """
    loss_parts, _ = autoencoder.ComputeLossAndGradients(
        windows, model_parameters, noise=noise)
    return loss_parts.total

  def _CheckGradients(self, model_parameters, noise):
    """Checks every gradient entry against finite differences.

    Args:
      model_parameters (ModelParams): parameters.
      noise (numpy.ndarray): frozen reparameterization noise.
    """
    windows = prng.Rng(8).Gaussians((3, 12))

    _, gradients = autoencoder.ComputeLossAndGradients(
        windows, model_parameters, noise=noise)
    self.assertEqual(
        sorted(gradients.keys()), sorted(model_parameters.tensors.keys()))

    maximum_relative_error = 0.0
    for name, values in sorted(model_parameters.tensors.items()):
      self.assertEqual(gradients[name].shape, values.shape)

      for index in np.ndindex(*values.shape):
        original_value = values[index]

        values[index] = original_value + self._STEP_SIZE
        upper_loss = self._ComputeLoss(windows, model_parameters, noise)
        values[index] = original_value - self._STEP_SIZE
        lower_loss = self._ComputeLoss(windows, model_parameters, noise)
        values[index] = original_value

        numeric_gradient = (upper_loss - lower_loss) / (2.0 * self._STEP_SIZE)
        analytic_gradient = gradients[name][index]

        relative_error = abs(analytic_gradient - numeric_gradient) / max(
            abs(analytic_gradient), abs(numeric_gradient), 1e-4)
        maximum_relative_error = max(maximum_relative_error, relative_error)

    self.assertLess(maximum_relative_error, 1e-4)

  def testVAEGradients(self):
    """Tests the VAE loss gradients with frozen noise."""
    noise = prng.Rng(9).Gaussians((3, 4))
    self._CheckGradients(_CreateModelParams(), noise)

  def testAEGradients(self):
    """Tests the AE loss gradients."""
    self._CheckGradients(_CreateModelParams(mode=definitions.MODE_AE), None)

  def testMissingNoise(self):
    """Tests that a VAE requires reparameterization noise."""
    with self.assertRaises(ValueError):
      autoencoder.ComputeLossAndGradients(
          np.zeros((1, 12)), _CreateModelParams())

  def testBatchDuplication(self):
    """Tests that duplicating a batch leaves the loss unchanged."""
    model_parameters = _CreateModelParams()
    rng = prng.Rng(10)
    windows = rng.Gaussians((2, 12))
    noise = rng.Gaussians((2, 4))

    loss_parts, gradients = autoencoder.ComputeLossAndGradients(
        windows, model_parameters, noise=noise)
    duplicated_loss_parts, duplicated_gradients = (
        autoencoder.ComputeLossAndGradients(
            np.concatenate([windows, windows]), model_parameters,
            noise=np.concatenate([noise, noise])))

    self.assertAlmostEqual(
        duplicated_loss_parts.total, loss_parts.total, delta=1e-12)
    self.assertAlmostEqual(
        duplicated_loss_parts.kl_divergence, loss_parts.kl_divergence,
        delta=1e-12)
    for name, values in gradients.items():
      self.assertTrue(np.allclose(
          duplicated_gradients[name], values, rtol=1e-9, atol=1e-12))


class TrainTest(test_lib.BaseTestCase):
  """Tests for the Train function."""

  def _CreateTrainConfig(self, mode=definitions.MODE_VAE, epochs=2):
    """Creates a training configuration of a tiny model.

    Args:
      mode (Optional[str]): training mode.
      epochs (Optional[int]): number of epochs.

    Returns:
      TrainConfig: training configuration.
    """
    return autoencoder.TrainConfig(
        epochs=epochs, batch_size=4, learning_rate=1e-2, seed=3, beta=0.1,
        mode=mode, hidden_dim=4, latent_dim=2, number_of_layers=1)

  def testTrainDeterminism(self):
    """Tests that training is bit-identical for identical inputs."""
    pool = _CreatePool(10, 8)
    train_config = self._CreateTrainConfig()

    training_result = autoencoder.Train(pool, train_config)
    repeated_result = autoencoder.Train(pool, train_config)

    self.assertEqual(
        training_result.model_parameters, repeated_result.model_parameters)
    self.assertEqual(len(training_result.loss_trace), 2)
    self.assertEqual(
        [epoch_loss.total for epoch_loss in training_result.loss_trace],
        [epoch_loss.total for epoch_loss in repeated_result.loss_trace])

    self.assertEqual(training_result.model_parameters.window_length, 8)
    self.assertEqual(training_result.model_parameters.beta, 0.1)
    self.assertEqual(training_result.model_parameters.seed, 3)

  def testTrainReducesLoss(self):
    """Tests that training an AE reduces the reconstruction loss."""
    pool = _CreatePool(16, 8)
    train_config = self._CreateTrainConfig(
        mode=definitions.MODE_AE, epochs=30)

    training_result = autoencoder.Train(pool, train_config)
    loss_trace = training_result.loss_trace
    self.assertEqual(loss_trace[0].kl_divergence, 0.0)
    self.assertEqual(training_result.model_parameters.beta, 0.0)
    self.assertLess(loss_trace[-1].total, loss_trace[0].total)

  def testTrainEmptyPool(self):
    """Tests the Train function with an empty pool."""
    pool = preprocess.WindowBatch(np.empty((0, 8)), [], [], 8)
    with self.assertRaises(ValueError):
      autoencoder.Train(pool, self._CreateTrainConfig())

  def testTrainConfigErrors(self):
    """Tests the TrainConfig initialization with unsupported values."""
    with self.assertRaises(ValueError):
      autoencoder.TrainConfig(batch_size=0)

    with self.assertRaises(ValueError):
      autoencoder.TrainConfig(mode='bogus')

    with self.assertRaises(ValueError):
      autoencoder.TrainConfig(beta=-1.0)


class ReconstructionTest(test_lib.BaseTestCase):
  """Tests for the reconstruction error functions."""

  def _BruteForceAggregate(self, number_of_samples, start_indices, errors):
    """Aggregates window errors by enumerating the covering windows.

    Args:
      number_of_samples (int): number of samples.
      start_indices (list[int]): start index of every window.
      errors (numpy.ndarray): errors of shape [N, W].

    Returns:
      list[float]: mean error per sample, NaN where uncovered.
    """
    deltas = []
    for sample_index in range(number_of_samples):
      covering_errors = [
          errors[window_index][sample_index - start_index]
          for window_index, start_index in enumerate(start_indices)
          if 0 <= sample_index - start_index < errors.shape[1]]
      if covering_errors:
        deltas.append(float(np.mean(covering_errors)))
      else:
        deltas.append(float('nan'))
    return deltas

  def testAggregateWindowErrors(self):
    """Tests the AggregateWindowErrors function."""
    deltas = autoencoder.AggregateWindowErrors(
        5, [0, 1], np.array([[1.0, 2.0, 3.0], [5.0, 6.0, 7.0]]))
    self.assertTrue(np.array_equal(
        deltas, [1.0, 3.5, 4.5, 7.0, np.nan], equal_nan=True))

    deltas = autoencoder.AggregateWindowErrors(3, [], np.empty((0, 2)))
    self.assertTrue(np.all(np.isnan(deltas)))

  def testAggregateWindowErrorsAgainstBruteForce(self):
    """Tests the AggregateWindowErrors function against enumeration."""
    rng = np.random.default_rng(11)
    for _ in range(50):
      window_length = int(rng.integers(1, 6))
      number_of_samples = int(rng.integers(window_length, 30))
      start_indices = sorted(rng.choice(
          number_of_samples - window_length + 1,
          size=int(rng.integers(0, number_of_samples - window_length + 2)),
          replace=False).tolist())
      window_errors = rng.random((len(start_indices), window_length))

      deltas = autoencoder.AggregateWindowErrors(
          number_of_samples, np.array(start_indices, dtype=np.int64),
          window_errors)
      expected_deltas = self._BruteForceAggregate(
          number_of_samples, start_indices, window_errors)
      self.assertTrue(np.allclose(
          deltas, expected_deltas, rtol=0.0, atol=1e-12, equal_nan=True))

  def testReconstructRecord(self):
    """Tests the ReconstructRecord function."""
    model_parameters = _CreateModelParams()
    values = prng.Rng(12).Gaussians(20)
    values[0] = np.nan
    record = test_lib.CreateRecord(values)

    delta_trace = autoencoder.ReconstructRecord(record, model_parameters)
    self.assertEqual(delta_trace.record_identifier, 'test')
    self.assertEqual(len(delta_trace), 20)
    self.assertFalse(delta_trace.is_defined[0])
    self.assertTrue(np.all(delta_trace.is_defined[1:]))
    self.assertTrue(np.all(delta_trace.deltas[1:] >= 0.0))

    repeated_trace = autoencoder.ReconstructRecord(record, model_parameters)
    self.assertTrue(np.array_equal(
        repeated_trace.deltas, delta_trace.deltas, equal_nan=True))

    sampled_trace = autoencoder.ReconstructRecord(
        record, model_parameters, sample_latent=True, seed=4)
    repeated_trace = autoencoder.ReconstructRecord(
        record, model_parameters, sample_latent=True, seed=4)
    self.assertTrue(np.array_equal(
        repeated_trace.deltas, sampled_trace.deltas, equal_nan=True))

  def testAutoencoderDeltaTraceGenerator(self):
    """Tests the autoencoder delta trace generator."""
    model_parameters = _CreateModelParams(mode=definitions.MODE_AE)
    generator = autoencoder.AutoencoderDeltaTraceGenerator(model_parameters)
    self.assertEqual(generator.kind, definitions.DETECTOR_KIND_AE)

    record = test_lib.CreateRecord(np.zeros(11))
    delta_trace = generator.GenerateDeltaTrace(record)
    self.assertFalse(np.any(delta_trace.is_defined))


if __name__ == '__main__':
  unittest.main()
