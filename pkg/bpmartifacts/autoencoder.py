# -*- coding: utf-8 -*-
"""LSTM autoencoder and beta variational autoencoder (beta-VAE).

The encoder is a stack of LSTM layers over a window of W scaled samples, of
which the final hidden state is mapped onto the latent mean and, for a VAE,
the latent log-variance. The decoder consumes the latent repeated at each of
the W time steps through a stack of LSTM layers of the same dimensions and
maps every hidden state onto a reconstructed sample.

Tensors are named:

  encoder.lstm{k}.{input_weights,recurrent_weights,biases}
  encoder.mean.{weights,biases}
  encoder.log_variance.{weights,biases}  (VAE only)
  decoder.lstm{k}.{input_weights,recurrent_weights,biases}
  decoder.output.{weights,biases}
"""

import logging

import numpy as np

from bpmartifacts import definitions
from bpmartifacts import errors
from bpmartifacts import interface
from bpmartifacts import lstm
from bpmartifacts import optimizer
from bpmartifacts import preprocess
from bpmartifacts import prng
from bpmartifacts import records


logger = logging.getLogger(__name__)

# The largest beta of the swept range, above which the reconstruction
# bandwidth becomes too limited.
MAXIMUM_SWEPT_BETA = 0.6

_INFERENCE_BATCH_SIZE = 512

_LAYER_TENSOR_NAMES = ('biases', 'input_weights', 'recurrent_weights')


class ModelParams(object):
  """Weights and architecture of a (V)AE.

  Attributes:
    beta (float): weight of the KL divergence term of the training loss.
    hidden_dim (int): hidden dimension of every LSTM layer.
    input_dim (int): number of input features per time step.
    latent_dim (int): latent (bottleneck) dimension.
    mode (str): training mode, either MODE_AE or MODE_VAE.
    number_of_layers (int): number of LSTM layers of the encoder and of the
        decoder.
    seed (int): seed the weights were initialized and trained with.
    tensors (dict[str, numpy.ndarray]): two-dimensional weight tensors per
        name.
    window_length (int): window length W.
  """

  def __init__(
      self, window_length, hidden_dim=64, latent_dim=12, number_of_layers=2,
      mode=definitions.MODE_VAE, beta=0.0, seed=0, tensors=None,
      input_dim=1):
    """Initializes model parameters.

    Args:
      window_length (int): window length W.
      hidden_dim (Optional[int]): hidden dimension.
      latent_dim (Optional[int]): latent dimension.
      number_of_layers (Optional[int]): number of LSTM layers per side.
      mode (Optional[str]): training mode.
      beta (Optional[float]): KL divergence weight.
      seed (Optional[int]): seed.
      tensors (Optional[dict[str, numpy.ndarray]]): weight tensors per name.
      input_dim (Optional[int]): number of input features per time step.

    Raises:
      ValueError: if the architecture is not supported or the tensors do not
          match it.
    """
    if mode not in definitions.MODES:
      raise ValueError(f'Unsupported mode: {mode!s}')

    if min(window_length, hidden_dim, latent_dim, number_of_layers,
           input_dim) < 1:
      raise ValueError('Unsupported model dimensions.')

    if beta < 0.0:
      raise ValueError(f'Unsupported beta: {beta!r}')

    super(ModelParams, self).__init__()
    self.beta = beta
    self.hidden_dim = hidden_dim
    self.input_dim = input_dim
    self.latent_dim = latent_dim
    self.mode = mode
    self.number_of_layers = number_of_layers
    self.seed = seed
    self.tensors = tensors or {}
    self.window_length = window_length

    expected_shapes = self.GetTensorShapes()
    if self.tensors:
      if sorted(self.tensors.keys()) != sorted(expected_shapes.keys()):
        raise ValueError('Tensor names do not match the architecture.')

      for name, shape in expected_shapes.items():
        if self.tensors[name].shape != shape:
          raise ValueError((
              f'Tensor: {name:s} shape: {self.tensors[name].shape!s} does not '
              f'match expected shape: {shape!s}'))

  def __eq__(self, other):
    """Determines if the parameters are bit-identical to other parameters.

    Args:
      other (object): other object.

    Returns:
      bool: True if the architecture and every tensor bit are identical.
    """
    if not isinstance(other, ModelParams):
      return NotImplemented

    if self.GetMetadata() != other.GetMetadata():
      return False

    if sorted(self.tensors.keys()) != sorted(other.tensors.keys()):
      return False

    for name, values in self.tensors.items():
      other_values = other.tensors[name]
      if (values.shape != other_values.shape or
          values.astype('<f8').tobytes() !=
          other_values.astype('<f8').tobytes()):
        return False

    return True

  def _GetLayer(self, prefix):
    """Retrieves LSTM layer parameters.

    Args:
      prefix (str): tensor name prefix, such as "encoder.lstm0".

    Returns:
      LSTMLayerParameters: layer parameters.
    """
    return lstm.LSTMLayerParameters(
        self.tensors[f'{prefix:s}.input_weights'],
        self.tensors[f'{prefix:s}.recurrent_weights'],
        self.tensors[f'{prefix:s}.biases'])

  def CopyWithTensors(self, tensors):
    """Creates a copy of the parameters with other tensors.

    Args:
      tensors (dict[str, numpy.ndarray]): weight tensors per name.

    Returns:
      ModelParams: parameters with the same architecture.
    """
    return ModelParams(
        self.window_length, hidden_dim=self.hidden_dim,
        latent_dim=self.latent_dim, number_of_layers=self.number_of_layers,
        mode=self.mode, beta=self.beta, seed=self.seed, tensors=tensors,
        input_dim=self.input_dim)

  def GetDecoderLayer(self, layer_index):
    """Retrieves a decoder LSTM layer.

    Args:
      layer_index (int): index of the layer, 0 for the layer fed by the
          latent.

    Returns:
      LSTMLayerParameters: layer parameters.
    """
    return self._GetLayer(f'decoder.lstm{layer_index:d}')

  def GetEncoderLayer(self, layer_index):
    """Retrieves an encoder LSTM layer.

    Args:
      layer_index (int): index of the layer, 0 for the layer fed by the
          window.

    Returns:
      LSTMLayerParameters: layer parameters.
    """
    return self._GetLayer(f'encoder.lstm{layer_index:d}')

  def GetMetadata(self):
    """Retrieves the architecture metadata.

    Returns:
      dict[str, object]: metadata values per key.
    """
    return {
        'W': self.window_length,
        'beta': self.beta,
        'hidden_dim': self.hidden_dim,
        'input_dim': self.input_dim,
        'latent_dim': self.latent_dim,
        'mode': self.mode,
        'num_layers': self.number_of_layers,
        'seed': self.seed}

  def GetTensorShapes(self):
    """Retrieves the tensor shapes implied by the architecture.

    Returns:
      dict[str, tuple[int, int]]: tensor shapes per name.
    """
    gates_dim = 4 * self.hidden_dim

    shapes = {}
    for side, first_input_dim in (
        ('encoder', self.input_dim), ('decoder', self.latent_dim)):
      for layer_index in range(self.number_of_layers):
        input_dim = first_input_dim if layer_index == 0 else self.hidden_dim
        prefix = f'{side:s}.lstm{layer_index:d}'
        shapes[f'{prefix:s}.biases'] = (1, gates_dim)
        shapes[f'{prefix:s}.input_weights'] = (input_dim, gates_dim)
        shapes[f'{prefix:s}.recurrent_weights'] = (self.hidden_dim, gates_dim)

    shapes['encoder.mean.biases'] = (1, self.latent_dim)
    shapes['encoder.mean.weights'] = (self.hidden_dim, self.latent_dim)

    if self.mode == definitions.MODE_VAE:
      shapes['encoder.log_variance.biases'] = (1, self.latent_dim)
      shapes['encoder.log_variance.weights'] = (
          self.hidden_dim, self.latent_dim)

    shapes['decoder.output.biases'] = (1, self.input_dim)
    shapes['decoder.output.weights'] = (self.hidden_dim, self.input_dim)

    return shapes


class LatentSample(object):
  """Latent representation of a batch of windows.

  Attributes:
    latent (numpy.ndarray): latent z, of shape [batch size, latent_dim].
    log_variance (numpy.ndarray): latent log-variance or None for an AE.
    mean (numpy.ndarray): latent mean.
    noise (numpy.ndarray): standard normal noise the latent was drawn with
        or None if the latent is the mean.
  """

  def __init__(self, mean, log_variance=None, latent=None, noise=None):
    """Initializes a latent sample.

    Args:
      mean (numpy.ndarray): latent mean.
      log_variance (Optional[numpy.ndarray]): latent log-variance.
      latent (Optional[numpy.ndarray]): latent, the mean if None.
      noise (Optional[numpy.ndarray]): noise the latent was drawn with.
    """
    super(LatentSample, self).__init__()
    self.latent = mean if latent is None else latent
    self.log_variance = log_variance
    self.mean = mean
    self.noise = noise


class LossParts(object):
  """Parts of the (V)AE training loss, averaged over a batch.

  Attributes:
    kl_divergence (float): KL divergence of the latent posterior from the
        standard normal prior, 0.0 for an AE.
    reconstruction (float): mean squared reconstruction error.
    total (float): minimized loss, reconstruction + beta * KL divergence.
  """

  def __init__(self, reconstruction, kl_divergence, total):
    """Initializes loss parts.

    Args:
      reconstruction (float): reconstruction term.
      kl_divergence (float): KL divergence term.
      total (float): total loss.
    """
    super(LossParts, self).__init__()
    self.kl_divergence = kl_divergence
    self.reconstruction = reconstruction
    self.total = total


class EpochLoss(LossParts):
  """Training loss of an epoch.

  Attributes:
    epoch (int): epoch number, starting at 0.
  """

  def __init__(self, epoch, reconstruction, kl_divergence, total):
    """Initializes an epoch loss.

    Args:
      epoch (int): epoch number.
      reconstruction (float): reconstruction term.
      kl_divergence (float): KL divergence term.
      total (float): total loss.
    """
    super(EpochLoss, self).__init__(reconstruction, kl_divergence, total)
    self.epoch = epoch


class TrainConfig(object):
  """(V)AE training configuration.

  Attributes:
    batch_size (int): number of windows per minibatch.
    beta (float): KL divergence weight, ignored for an AE.
    epochs (int): number of epochs.
    hidden_dim (int): hidden dimension.
    latent_dim (int): latent dimension.
    learning_rate (float): Adam learning rate.
    mode (str): training mode, either MODE_AE or MODE_VAE.
    number_of_layers (int): number of LSTM layers per side.
    seed (int): seed of the run.
  """

  def __init__(
      self, epochs=50, batch_size=128, learning_rate=1e-3, seed=0, beta=0.0,
      mode=definitions.MODE_VAE, hidden_dim=64, latent_dim=12,
      number_of_layers=2):
    """Initializes a training configuration.

    Args:
      epochs (Optional[int]): number of epochs.
      batch_size (Optional[int]): minibatch size.
      learning_rate (Optional[float]): learning rate.
      seed (Optional[int]): seed.
      beta (Optional[float]): KL divergence weight.
      mode (Optional[str]): training mode.
      hidden_dim (Optional[int]): hidden dimension.
      latent_dim (Optional[int]): latent dimension.
      number_of_layers (Optional[int]): number of LSTM layers per side.

    Raises:
      ValueError: if a value is not supported.
    """
    if epochs < 0 or batch_size < 1 or learning_rate <= 0.0:
      raise ValueError('Unsupported epochs, batch size or learning rate.')

    if mode not in definitions.MODES:
      raise ValueError(f'Unsupported mode: {mode!s}')

    if beta < 0.0:
      raise ValueError(f'Unsupported beta: {beta!r}')

    super(TrainConfig, self).__init__()
    self.batch_size = batch_size
    self.beta = beta if mode == definitions.MODE_VAE else 0.0
    self.epochs = epochs
    self.hidden_dim = hidden_dim
    self.latent_dim = latent_dim
    self.learning_rate = learning_rate
    self.mode = mode
    self.number_of_layers = number_of_layers
    self.seed = seed


class TrainingResult(object):
  """Result of training a (V)AE.

  Attributes:
    loss_trace (list[EpochLoss]): per-epoch losses.
    model_parameters (ModelParams): final parameters.
  """

  def __init__(self, model_parameters, loss_trace):
    """Initializes a training result.

    Args:
      model_parameters (ModelParams): final parameters.
      loss_trace (list[EpochLoss]): per-epoch losses.
    """
    super(TrainingResult, self).__init__()
    self.loss_trace = loss_trace
    self.model_parameters = model_parameters


class _ForwardCache(object):
  """Values of a batch forward pass retained for backpropagation."""

  def __init__(self):
    """Initializes a forward cache."""
    super(_ForwardCache, self).__init__()
    self.decoder_caches = []
    self.decoder_states = None
    self.encoder_caches = []
    self.final_hidden = None


def _SetLayerTensors(tensors, prefix, layer):
  """Stores the tensors of a LSTM layer.

  Args:
    tensors (dict[str, numpy.ndarray]): tensors per name.
    prefix (str): tensor name prefix.
    layer (LSTMLayerParameters): layer parameters or gradients.
  """
  for name in _LAYER_TENSOR_NAMES:
    tensors[f'{prefix:s}.{name:s}'] = getattr(layer, name)


def InitializeModelParams(
    window_length, hidden_dim=64, latent_dim=12, number_of_layers=2,
    mode=definitions.MODE_VAE, beta=0.0, seed=0):
  """Initializes (V)AE parameters from the initialization stream of a seed.

  Args:
    window_length (int): window length W.
    hidden_dim (Optional[int]): hidden dimension.
    latent_dim (Optional[int]): latent dimension.
    number_of_layers (Optional[int]): number of LSTM layers per side.
    mode (Optional[str]): training mode.
    beta (Optional[float]): KL divergence weight.
    seed (Optional[int]): seed.

  Returns:
    ModelParams: initialized parameters.
  """
  rng = prng.Rng(seed).Derive(definitions.STREAM_INITIALIZATION)

  tensors = {}
  input_dim = 1
  for layer_index in range(number_of_layers):
    layer = lstm.InitializeLayer(input_dim, hidden_dim, rng)
    _SetLayerTensors(tensors, f'encoder.lstm{layer_index:d}', layer)
    input_dim = hidden_dim

  tensors['encoder.mean.weights'] = lstm.InitializeWeights(
      hidden_dim, latent_dim, rng)
  tensors['encoder.mean.biases'] = np.zeros((1, latent_dim), np.float64)

  if mode == definitions.MODE_VAE:
    tensors['encoder.log_variance.weights'] = lstm.InitializeWeights(
        hidden_dim, latent_dim, rng)
    tensors['encoder.log_variance.biases'] = np.zeros(
        (1, latent_dim), np.float64)

  input_dim = latent_dim
  for layer_index in range(number_of_layers):
    layer = lstm.InitializeLayer(input_dim, hidden_dim, rng)
    _SetLayerTensors(tensors, f'decoder.lstm{layer_index:d}', layer)
    input_dim = hidden_dim

  tensors['decoder.output.weights'] = lstm.InitializeWeights(
      hidden_dim, 1, rng)
  tensors['decoder.output.biases'] = np.zeros((1, 1), np.float64)

  return ModelParams(
      window_length, hidden_dim=hidden_dim, latent_dim=latent_dim,
      number_of_layers=number_of_layers, mode=mode, beta=beta, seed=seed,
      tensors=tensors)


def _GetWindowsMatrix(windows, model_parameters):
  """Retrieves windows as a [batch size, W] matrix.

  Args:
    windows (numpy.ndarray): window of shape [W] or windows of shape
        [batch size, W].
    model_parameters (ModelParams): parameters.

  Returns:
    numpy.ndarray: windows of shape [batch size, W].

  Raises:
    ValueError: if the window length does not match the model.
  """
  windows = np.atleast_2d(np.asarray(windows, dtype=np.float64))
  if windows.ndim != 2 or windows.shape[1] != model_parameters.window_length:
    raise ValueError((
        f'Window shape: {windows.shape!s} does not match window length: '
        f'{model_parameters.window_length:d}'))

  return windows


def _EncodeForward(windows, model_parameters, cache=None):
  """Runs the encoder forward pass.

  Args:
    windows (numpy.ndarray): windows of shape [batch size, W].
    model_parameters (ModelParams): parameters.
    cache (Optional[_ForwardCache]): cache to retain the forward values in.

  Returns:
    tuple[numpy.ndarray, numpy.ndarray]: latent mean and log-variance, where
        the log-variance is None for an AE.
  """
  sequence = np.ascontiguousarray(windows.T)[:, :, np.newaxis]

  for layer_index in range(model_parameters.number_of_layers):
    layer = model_parameters.GetEncoderLayer(layer_index)
    sequence, caches = lstm.ForwardLayer(sequence, layer)
    if cache is not None:
      cache.encoder_caches.append(caches)

  final_hidden = sequence[-1]
  if cache is not None:
    cache.final_hidden = final_hidden

  tensors = model_parameters.tensors
  mean = (
      final_hidden @ tensors['encoder.mean.weights'] +
      tensors['encoder.mean.biases'])

  log_variance = None
  if model_parameters.mode == definitions.MODE_VAE:
    log_variance = (
        final_hidden @ tensors['encoder.log_variance.weights'] +
        tensors['encoder.log_variance.biases'])

  return mean, log_variance


def _DecodeForward(latents, model_parameters, cache=None):
  """Runs the decoder forward pass.

  Args:
    latents (numpy.ndarray): latents of shape [batch size, latent_dim].
    model_parameters (ModelParams): parameters.
    cache (Optional[_ForwardCache]): cache to retain the forward values in.

  Returns:
    numpy.ndarray: reconstructions of shape [batch size, W].
  """
  sequence = np.repeat(
      latents[np.newaxis, :, :], model_parameters.window_length, axis=0)

  for layer_index in range(model_parameters.number_of_layers):
    layer = model_parameters.GetDecoderLayer(layer_index)
    sequence, caches = lstm.ForwardLayer(sequence, layer)
    if cache is not None:
      cache.decoder_caches.append(caches)

  if cache is not None:
    cache.decoder_states = sequence

  tensors = model_parameters.tensors
  outputs = (
      sequence @ tensors['decoder.output.weights'] +
      tensors['decoder.output.biases'])

  return np.ascontiguousarray(outputs[:, :, 0].T)


def Encode(windows, model_parameters):
  """Encodes windows.

  Args:
    windows (numpy.ndarray): window of shape [W] or windows of shape
        [batch size, W], without MISSING samples.
    model_parameters (ModelParams): parameters.

  Returns:
    LatentSample: latent means and, for a VAE, log-variances, where the
        latent is the mean.

  Raises:
    ValueError: if the window length does not match the model.
  """
  windows = _GetWindowsMatrix(windows, model_parameters)
  mean, log_variance = _EncodeForward(windows, model_parameters)
  return LatentSample(mean, log_variance=log_variance)


def Reparameterize(latent_sample, noise):
  """Draws latents as z = mean + exp(log_variance / 2) * noise.

  Args:
    latent_sample (LatentSample): latent means and log-variances.
    noise (numpy.ndarray): standard normal noise of the shape of the means.

  Returns:
    numpy.ndarray: latents.

  Raises:
    ValueError: if the latent sample has no log-variance or the noise shape
        does not match.
  """
  if latent_sample.log_variance is None:
    raise ValueError('Reparameterization requires a log-variance.')

  noise = np.asarray(noise, dtype=np.float64).reshape(latent_sample.mean.shape)
  return latent_sample.mean + np.exp(0.5 * latent_sample.log_variance) * noise


def Decode(latents, model_parameters):
  """Decodes latents into reconstructed windows.

  Args:
    latents (numpy.ndarray): latent of shape [latent_dim] or latents of shape
        [batch size, latent_dim].
    model_parameters (ModelParams): parameters.

  Returns:
    numpy.ndarray: reconstructions of shape [batch size, W].

  Raises:
    ValueError: if the latent dimension does not match the model.
  """
  latents = np.atleast_2d(np.asarray(latents, dtype=np.float64))
  if latents.ndim != 2 or latents.shape[1] != model_parameters.latent_dim:
    raise ValueError((
        f'Latent shape: {latents.shape!s} does not match latent dimension: '
        f'{model_parameters.latent_dim:d}'))

  return _DecodeForward(latents, model_parameters)


def KLDivergence(mean, log_variance):
  """Computes the KL divergence of diagonal Gaussians from the standard normal.

  Args:
    mean (numpy.ndarray): means of shape [batch size, latent_dim].
    log_variance (numpy.ndarray): log-variances of the same shape.

  Returns:
    numpy.ndarray: KL divergence per batch entry.
  """
  mean = np.atleast_2d(mean)
  log_variance = np.atleast_2d(log_variance)
  return 0.5 * np.sum(
      mean ** 2 + np.exp(log_variance) - 1.0 - log_variance, axis=1)


def ComputeELBOLoss(windows, reconstructions, latent_sample, beta):
  """Computes the negative ELBO training loss averaged over a batch.

  Args:
    windows (numpy.ndarray): windows of shape [batch size, W].
    reconstructions (numpy.ndarray): reconstructions of the same shape.
    latent_sample (LatentSample): latent sample, without log-variance for an
        AE.
    beta (float): KL divergence weight.

  Returns:
    tuple[float, LossParts]: total loss and its parts.

  Raises:
    NumericError: if the loss is not finite.
    ValueError: if the windows and reconstructions do not align.
  """
  windows = np.atleast_2d(windows)
  reconstructions = np.atleast_2d(reconstructions)
  if windows.shape != reconstructions.shape:
    raise ValueError('Windows and reconstructions do not align.')

  reconstruction = float(np.mean(np.mean(
      (windows - reconstructions) ** 2, axis=1)))

  if latent_sample.log_variance is None:
    kl_divergence = 0.0
    total = reconstruction
  else:
    kl_divergence = float(np.mean(KLDivergence(
        latent_sample.mean, latent_sample.log_variance)))
    total = reconstruction + beta * kl_divergence

  if not np.isfinite(total):
    raise errors.NumericError('Non-finite training loss.')

  return total, LossParts(reconstruction, kl_divergence, total)


def ComputeLossAndGradients(windows, model_parameters, noise=None):
  """Computes the training loss and its gradients by backpropagation.

  Args:
    windows (numpy.ndarray): windows of shape [batch size, W].
    model_parameters (ModelParams): parameters.
    noise (Optional[numpy.ndarray]): standard normal noise of shape
        [batch size, latent_dim], required for a VAE.

  Returns:
    tuple: containing:

      LossParts: loss parts.
      dict[str, numpy.ndarray]: gradients per tensor name.

  Raises:
    NumericError: if the loss or a gradient is not finite.
    ValueError: if the noise is missing for a VAE.
  """
  windows = _GetWindowsMatrix(windows, model_parameters)
  batch_size, window_length = windows.shape
  tensors = model_parameters.tensors
  is_vae = model_parameters.mode == definitions.MODE_VAE

  if is_vae and noise is None:
    raise ValueError('Missing reparameterization noise.')

  cache = _ForwardCache()
  mean, log_variance = _EncodeForward(windows, model_parameters, cache=cache)
  latent_sample = LatentSample(mean, log_variance=log_variance)
  if is_vae:
    latent_sample = LatentSample(
        mean, log_variance=log_variance,
        latent=Reparameterize(latent_sample, noise), noise=noise)

  reconstructions = _DecodeForward(
      latent_sample.latent, model_parameters, cache=cache)

  _, loss_parts = ComputeELBOLoss(
      windows, reconstructions, latent_sample, model_parameters.beta)

  gradients = {}

  # Output head.
  output_gradients = np.ascontiguousarray((
      2.0 * (reconstructions - windows) / (window_length * batch_size)).T)
  gradients['decoder.output.weights'] = np.einsum(
      'tbh,tb->h', cache.decoder_states, output_gradients)[:, np.newaxis]
  gradients['decoder.output.biases'] = np.array(
      [[output_gradients.sum()]], dtype=np.float64)

  state_gradients = (
      output_gradients[:, :, np.newaxis] *
      tensors['decoder.output.weights'][:, 0])

  for layer_index in range(model_parameters.number_of_layers - 1, -1, -1):
    layer = model_parameters.GetDecoderLayer(layer_index)
    state_gradients, layer_gradients = lstm.BackwardLayer(
        state_gradients, layer, cache.decoder_caches[layer_index])
    _SetLayerTensors(
        gradients, f'decoder.lstm{layer_index:d}', layer_gradients)

  latent_gradients = state_gradients.sum(axis=0)

  # Bottleneck.
  if is_vae:
    beta = model_parameters.beta
    standard_deviation = np.exp(0.5 * log_variance)
    mean_gradients = latent_gradients + beta * mean / batch_size
    log_variance_gradients = (
        latent_gradients * noise * 0.5 * standard_deviation +
        beta * 0.5 * (np.exp(log_variance) - 1.0) / batch_size)
  else:
    mean_gradients = latent_gradients
    log_variance_gradients = None

  final_hidden = cache.final_hidden
  gradients['encoder.mean.weights'] = final_hidden.T @ mean_gradients
  gradients['encoder.mean.biases'] = mean_gradients.sum(axis=0, keepdims=True)
  hidden_gradients = mean_gradients @ tensors['encoder.mean.weights'].T

  if is_vae:
    gradients['encoder.log_variance.weights'] = (
        final_hidden.T @ log_variance_gradients)
    gradients['encoder.log_variance.biases'] = log_variance_gradients.sum(
        axis=0, keepdims=True)
    hidden_gradients += (
        log_variance_gradients @ tensors['encoder.log_variance.weights'].T)

  # Only the final encoder state feeds the bottleneck.
  state_gradients = np.zeros(
      (window_length, batch_size, model_parameters.hidden_dim), np.float64)
  state_gradients[-1] = hidden_gradients

  for layer_index in range(model_parameters.number_of_layers - 1, -1, -1):
    layer = model_parameters.GetEncoderLayer(layer_index)
    state_gradients, layer_gradients = lstm.BackwardLayer(
        state_gradients, layer, cache.encoder_caches[layer_index])
    _SetLayerTensors(
        gradients, f'encoder.lstm{layer_index:d}', layer_gradients)

  for name, values in gradients.items():
    lstm.CheckFinite(values, f'gradient of: {name:s}')

  return loss_parts, gradients


def Train(pool, train_config):
  """Trains a (V)AE on a pool of clean windows with minibatch Adam.

  The windows are reshuffled every epoch from the epoch stream of the run
  seed and the reparameterization noise is drawn from its noise stream, so
  that training is fully deterministic given the pool and configuration.

  Args:
    pool (WindowBatch): pooled training windows.
    train_config (TrainConfig): training configuration.

  Returns:
    TrainingResult: final parameters and per-epoch loss trace.

  Raises:
    NumericError: if the loss or a gradient is not finite, with the epoch
        and batch it occurred in.
    ValueError: if the pool is empty.
  """
  number_of_windows = len(pool)
  if not number_of_windows:
    raise ValueError('Unable to train on an empty pool.')

  if train_config.beta > MAXIMUM_SWEPT_BETA:
    logger.warning((
        f'Beta: {train_config.beta!r} exceeds the swept range, the '
        f'reconstruction bandwidth is likely to be limited.'))

  model_parameters = InitializeModelParams(
      pool.window_length, hidden_dim=train_config.hidden_dim,
      latent_dim=train_config.latent_dim,
      number_of_layers=train_config.number_of_layers, mode=train_config.mode,
      beta=train_config.beta, seed=train_config.seed)

  rng = prng.Rng(train_config.seed)
  epoch_rng = rng.Derive(definitions.STREAM_EPOCH)
  noise_rng = rng.Derive(definitions.STREAM_NOISE)
  is_vae = train_config.mode == definitions.MODE_VAE

  tensors = model_parameters.tensors
  adam_state = optimizer.AdamState(
      tensors, learning_rate=train_config.learning_rate)

  loss_trace = []
  for epoch in range(train_config.epochs):
    permutation = epoch_rng.Derive(epoch).Permutation(number_of_windows)

    reconstruction_sum = 0.0
    kl_divergence_sum = 0.0
    total_sum = 0.0

    for batch_index, batch_start in enumerate(range(
        0, number_of_windows, train_config.batch_size)):
      batch_indices = permutation[
          batch_start:batch_start + train_config.batch_size]
      windows = pool.windows[batch_indices]

      noise = None
      if is_vae:
        noise = noise_rng.Gaussians((windows.shape[0], train_config.latent_dim))

      try:
        loss_parts, gradients = ComputeLossAndGradients(
            windows, model_parameters, noise=noise)
      except errors.NumericError as exception:
        raise errors.NumericError((
            f'Training aborted in epoch: {epoch:d}, batch: {batch_index:d} '
            f'with error: {exception!s}'))

      tensors, adam_state = optimizer.AdamStep(tensors, gradients, adam_state)
      model_parameters = model_parameters.CopyWithTensors(tensors)

      reconstruction_sum += loss_parts.reconstruction * windows.shape[0]
      kl_divergence_sum += loss_parts.kl_divergence * windows.shape[0]
      total_sum += loss_parts.total * windows.shape[0]

    epoch_loss = EpochLoss(
        epoch, reconstruction_sum / number_of_windows,
        kl_divergence_sum / number_of_windows, total_sum / number_of_windows)
    loss_trace.append(epoch_loss)

    logger.info((
        f'Epoch: {epoch:d} loss: {epoch_loss.total:.6f} (reconstruction: '
        f'{epoch_loss.reconstruction:.6f}, KL: '
        f'{epoch_loss.kl_divergence:.6f})'))

  return TrainingResult(model_parameters, loss_trace)


def ReconstructWindows(windows, model_parameters, noise_rng=None):
  """Reconstructs windows.

  Args:
    windows (numpy.ndarray): windows of shape [N, W].
    model_parameters (ModelParams): parameters.
    noise_rng (Optional[Rng]): generator to sample the latent of a VAE with,
        where None decodes the latent mean.

  Returns:
    numpy.ndarray: reconstructions of shape [N, W].
  """
  windows = np.asarray(windows, dtype=np.float64).reshape(
      -1, model_parameters.window_length)

  reconstructions = np.empty_like(windows)
  for batch_start in range(0, windows.shape[0], _INFERENCE_BATCH_SIZE):
    batch = windows[batch_start:batch_start + _INFERENCE_BATCH_SIZE]
    latent_sample = Encode(batch, model_parameters)

    latents = latent_sample.mean
    if noise_rng and model_parameters.mode == definitions.MODE_VAE:
      noise = noise_rng.Gaussians(latents.shape)
      latents = Reparameterize(latent_sample, noise)

    reconstructions[batch_start:batch_start + batch.shape[0]] = (
        _DecodeForward(latents, model_parameters))

  return reconstructions


def AggregateWindowErrors(number_of_samples, start_indices, window_errors):
  """Aggregates per-window errors into per-sample errors.

  Args:
    number_of_samples (int): number of samples of the record.
    start_indices (numpy.ndarray): start index of every window.
    window_errors (numpy.ndarray): errors of shape [N, W].

  Returns:
    numpy.ndarray: mean error over the windows covering every sample, NaN
        for samples no window covers.
  """
  sums = np.zeros(number_of_samples, dtype=np.float64)
  counts = np.zeros(number_of_samples, dtype=np.int64)

  window_errors = np.asarray(window_errors, dtype=np.float64)
  if window_errors.size:
    positions = (
        np.asarray(start_indices)[:, np.newaxis] +
        np.arange(window_errors.shape[1]))
    np.add.at(sums, positions, window_errors)
    np.add.at(counts, positions, 1)

  deltas = np.full(number_of_samples, np.nan, dtype=np.float64)
  is_covered = counts > 0
  deltas[is_covered] = sums[is_covered] / counts[is_covered]
  return deltas


def ReconstructRecord(record, model_parameters, sample_latent=False, seed=0):
  """Computes the reconstruction error (delta) trace of a record.

  Args:
    record (Record): scaled record.
    model_parameters (ModelParams): trained parameters.
    sample_latent (Optional[bool]): True to sample the latent of a VAE
        instead of decoding its mean.
    seed (Optional[int]): seed of the latent sampling.

  Returns:
    DeltaTrace: per-sample mean absolute reconstruction error over the unit
        step windows covering the sample, UNDEFINED where no window covers it.
  """
  window_batch = preprocess.MakeWindows(
      record, model_parameters.window_length, step=1)

  noise_rng = None
  if sample_latent:
    noise_rng = prng.Rng(seed).Derive(definitions.STREAM_INFERENCE)

  reconstructions = ReconstructWindows(
      window_batch.windows, model_parameters, noise_rng=noise_rng)
  window_errors = np.abs(window_batch.windows - reconstructions)

  deltas = AggregateWindowErrors(
      len(record), window_batch.start_indices, window_errors)
  return records.DeltaTrace(record.record_identifier, deltas)


class AutoencoderDeltaTraceGenerator(interface.DeltaTraceGenerator):
  """Delta trace generator backed by a trained (V)AE."""

  def __init__(self, model_parameters, sample_latent=False, seed=0):
    """Initializes an autoencoder delta trace generator.

    Args:
      model_parameters (ModelParams): trained parameters.
      sample_latent (Optional[bool]): True to sample the latent of a VAE.
      seed (Optional[int]): seed of the latent sampling.
    """
    super(AutoencoderDeltaTraceGenerator, self).__init__(
        model_parameters.mode)
    self._model_parameters = model_parameters
    self._sample_latent = sample_latent
    self._seed = seed

  def GenerateDeltaTrace(self, record):
    """Generates the delta trace of a record.

    Args:
      record (Record): scaled record.

    Returns:
      DeltaTrace: per-sample reconstruction errors.
    """
    return ReconstructRecord(
        record, self._model_parameters, sample_latent=self._sample_latent,
        seed=self._seed)
