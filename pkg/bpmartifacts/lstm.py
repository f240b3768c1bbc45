# -*- coding: utf-8 -*-
"""Long short-term memory (LSTM) layer with analytic gradients.

Sequences are arrays of shape [time steps, batch size, features]. The gate
pre-activations of the 4 gates are concatenated in the order input (i),
forget (f), candidate (g) and output (o):

  i, f, o = sigmoid(x W + h_prev U + b), g = tanh(x W + h_prev U + b)
  c = f * c_prev + i * g
  h = o * tanh(c)

There are no peephole connections.
"""

import numpy as np

from scipy import special as scipy_special

from bpmartifacts import errors


def CheckFinite(array, description):
  """Checks that an array contains only finite values.

  Args:
    array (numpy.ndarray): array.
    description (str): description of the array used in the error message.

  Raises:
    NumericError: if the array contains NaN or infinite values.
  """
  if not np.all(np.isfinite(array)):
    raise errors.NumericError(f'Non-finite values in: {description:s}')


class LSTMLayerParameters(object):
  """LSTM layer parameters or gradients thereof.

  Attributes:
    biases (numpy.ndarray): biases b, of shape [1, 4 * hidden_dim].
    input_weights (numpy.ndarray): input-to-hidden weights W, of shape
        [input_dim, 4 * hidden_dim].
    recurrent_weights (numpy.ndarray): hidden-to-hidden weights U, of shape
        [hidden_dim, 4 * hidden_dim].
  """

  def __init__(self, input_weights, recurrent_weights, biases):
    """Initializes LSTM layer parameters.

    Args:
      input_weights (numpy.ndarray): input-to-hidden weights.
      recurrent_weights (numpy.ndarray): hidden-to-hidden weights.
      biases (numpy.ndarray): biases.

    Raises:
      ValueError: if the shapes are inconsistent.
    """
    hidden_dim = recurrent_weights.shape[0]
    if (recurrent_weights.shape != (hidden_dim, 4 * hidden_dim) or
        input_weights.ndim != 2 or
        input_weights.shape[1] != 4 * hidden_dim or
        biases.shape != (1, 4 * hidden_dim)):
      raise ValueError((
          f'Inconsistent LSTM layer shapes: {input_weights.shape!s}, '
          f'{recurrent_weights.shape!s}, {biases.shape!s}'))

    super(LSTMLayerParameters, self).__init__()
    self.biases = biases
    self.input_weights = input_weights
    self.recurrent_weights = recurrent_weights

  @property
  def hidden_dim(self):
    """int: hidden dimension."""
    return self.recurrent_weights.shape[0]

  @property
  def input_dim(self):
    """int: input dimension."""
    return self.input_weights.shape[0]


class LSTMCellCache(object):
  """Values of a cell forward pass retained for backpropagation.

  Attributes:
    candidate (numpy.ndarray): candidate activations g.
    cell (numpy.ndarray): cell state c.
    cell_activation (numpy.ndarray): tanh(c).
    forget_gate (numpy.ndarray): forget gate activations f.
    input_gate (numpy.ndarray): input gate activations i.
    inputs (numpy.ndarray): inputs x.
    output_gate (numpy.ndarray): output gate activations o.
    pre_activations (numpy.ndarray): concatenated gate pre-activations.
    previous_cell (numpy.ndarray): previous cell state.
    previous_hidden (numpy.ndarray): previous hidden state.
  """

  def __init__(self):
    """Initializes a cell cache."""
    super(LSTMCellCache, self).__init__()
    self.candidate = None
    self.cell = None
    self.cell_activation = None
    self.forget_gate = None
    self.input_gate = None
    self.inputs = None
    self.output_gate = None
    self.pre_activations = None
    self.previous_cell = None
    self.previous_hidden = None


def ForwardCell(inputs, previous_hidden, previous_cell, parameters):
  """Applies a LSTM cell to one time step.

  Args:
    inputs (numpy.ndarray): inputs, of shape [batch size, input_dim].
    previous_hidden (numpy.ndarray): previous hidden state, of shape
        [batch size, hidden_dim].
    previous_cell (numpy.ndarray): previous cell state, of shape
        [batch size, hidden_dim].
    parameters (LSTMLayerParameters): layer parameters.

  Returns:
    tuple: containing:

      numpy.ndarray: hidden state.
      numpy.ndarray: cell state.
      LSTMCellCache: cache for backpropagation.

  Raises:
    NumericError: if the hidden state is not finite.
    ValueError: if the dimensions do not agree.
  """
  hidden_dim = parameters.hidden_dim
  if (inputs.shape[-1] != parameters.input_dim or
      previous_hidden.shape[-1] != hidden_dim or
      previous_cell.shape[-1] != hidden_dim):
    raise ValueError((
        f'Dimension mismatch: inputs {inputs.shape!s}, hidden '
        f'{previous_hidden.shape!s}, cell {previous_cell.shape!s}'))

  pre_activations = (
      inputs @ parameters.input_weights +
      previous_hidden @ parameters.recurrent_weights + parameters.biases)

  cache = LSTMCellCache()
  cache.inputs = inputs
  cache.previous_hidden = previous_hidden
  cache.previous_cell = previous_cell
  cache.pre_activations = pre_activations

  cache.input_gate = scipy_special.expit(pre_activations[:, :hidden_dim])
  cache.forget_gate = scipy_special.expit(
      pre_activations[:, hidden_dim:2 * hidden_dim])
  cache.candidate = np.tanh(pre_activations[:, 2 * hidden_dim:3 * hidden_dim])
  cache.output_gate = scipy_special.expit(pre_activations[:, 3 * hidden_dim:])

  cache.cell = (
      cache.forget_gate * previous_cell + cache.input_gate * cache.candidate)
  cache.cell_activation = np.tanh(cache.cell)
  hidden = cache.output_gate * cache.cell_activation

  CheckFinite(hidden, 'LSTM hidden state')

  return hidden, cache.cell, cache


def ForwardLayer(
    sequence, parameters, initial_hidden=None, initial_cell=None):
  """Applies a LSTM layer to a sequence, unrolled left to right.

  Args:
    sequence (numpy.ndarray): inputs, of shape [time steps, batch size,
        input_dim].
    parameters (LSTMLayerParameters): layer parameters.
    initial_hidden (Optional[numpy.ndarray]): initial hidden state, zeros if
        None.
    initial_cell (Optional[numpy.ndarray]): initial cell state, zeros if None.

  Returns:
    tuple: containing:

      numpy.ndarray: hidden states, of shape [time steps, batch size,
          hidden_dim].
      list[LSTMCellCache]: per time step caches.

  Raises:
    ValueError: if the sequence is empty.
  """
  number_of_steps, batch_size, _ = sequence.shape
  if number_of_steps < 1:
    raise ValueError('Unsupported empty sequence.')

  hidden_dim = parameters.hidden_dim
  if initial_hidden is None:
    initial_hidden = np.zeros((batch_size, hidden_dim), dtype=np.float64)
  if initial_cell is None:
    initial_cell = np.zeros((batch_size, hidden_dim), dtype=np.float64)

  caches = []
  states = np.empty((number_of_steps, batch_size, hidden_dim), np.float64)

  hidden = initial_hidden
  cell = initial_cell
  for time_step in range(number_of_steps):
    hidden, cell, cache = ForwardCell(
        sequence[time_step], hidden, cell, parameters)
    states[time_step] = hidden
    caches.append(cache)

  return states, caches


def BackwardLayer(state_gradients, parameters, caches):
  """Backpropagates through time through a LSTM layer.

  Args:
    state_gradients (numpy.ndarray): gradients of the loss with respect to
        the hidden states, of shape [time steps, batch size, hidden_dim].
    parameters (LSTMLayerParameters): layer parameters.
    caches (list[LSTMCellCache]): per time step caches of the forward pass.

  Returns:
    tuple: containing:

      numpy.ndarray: gradients with respect to the inputs, of shape
          [time steps, batch size, input_dim].
      LSTMLayerParameters: gradients with respect to the parameters.

  Raises:
    ValueError: if the caches do not match the state gradients.
  """
  number_of_steps, batch_size, hidden_dim = state_gradients.shape
  if not caches or len(caches) != number_of_steps:
    raise ValueError('Missing forward caches.')

  input_weights_gradient = np.zeros_like(parameters.input_weights)
  recurrent_weights_gradient = np.zeros_like(parameters.recurrent_weights)
  biases_gradient = np.zeros_like(parameters.biases)

  input_gradients = np.empty(
      (number_of_steps, batch_size, parameters.input_dim), np.float64)

  next_hidden_gradient = np.zeros((batch_size, hidden_dim), np.float64)
  next_cell_gradient = np.zeros((batch_size, hidden_dim), np.float64)

  for time_step in range(number_of_steps - 1, -1, -1):
    cache = caches[time_step]

    hidden_gradient = state_gradients[time_step] + next_hidden_gradient
    output_gate_gradient = hidden_gradient * cache.cell_activation
    cell_gradient = next_cell_gradient + hidden_gradient * cache.output_gate * (
        1.0 - cache.cell_activation ** 2)

    input_gate_gradient = cell_gradient * cache.candidate
    candidate_gradient = cell_gradient * cache.input_gate
    forget_gate_gradient = cell_gradient * cache.previous_cell
    next_cell_gradient = cell_gradient * cache.forget_gate

    pre_activations_gradient = np.concatenate([
        input_gate_gradient * cache.input_gate * (1.0 - cache.input_gate),
        forget_gate_gradient * cache.forget_gate * (1.0 - cache.forget_gate),
        candidate_gradient * (1.0 - cache.candidate ** 2),
        output_gate_gradient * cache.output_gate * (1.0 - cache.output_gate)],
        axis=1)

    input_weights_gradient += cache.inputs.T @ pre_activations_gradient
    recurrent_weights_gradient += (
        cache.previous_hidden.T @ pre_activations_gradient)
    biases_gradient += pre_activations_gradient.sum(axis=0, keepdims=True)

    input_gradients[time_step] = (
        pre_activations_gradient @ parameters.input_weights.T)
    next_hidden_gradient = (
        pre_activations_gradient @ parameters.recurrent_weights.T)

  gradients = LSTMLayerParameters(
      input_weights_gradient, recurrent_weights_gradient, biases_gradient)

  return input_gradients, gradients


def InitializeLayer(input_dim, hidden_dim, rng):
  """Initializes LSTM layer parameters.

  Weights are drawn from Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)), the
  forget gate biases are 1.0 and all other biases 0.0.

  Args:
    input_dim (int): input dimension.
    hidden_dim (int): hidden dimension.
    rng (Rng): pseudo random number generator.

  Returns:
    LSTMLayerParameters: layer parameters.
  """
  input_weights = InitializeWeights(input_dim, 4 * hidden_dim, rng)
  recurrent_weights = InitializeWeights(hidden_dim, 4 * hidden_dim, rng)

  biases = np.zeros((1, 4 * hidden_dim), dtype=np.float64)
  biases[0, hidden_dim:2 * hidden_dim] = 1.0

  return LSTMLayerParameters(input_weights, recurrent_weights, biases)


def InitializeWeights(fan_in, fan_out, rng):
  """Initializes a weight matrix.

  Args:
    fan_in (int): number of rows.
    fan_out (int): number of columns.
    rng (Rng): pseudo random number generator.

  Returns:
    numpy.ndarray: weights drawn from Uniform(-1/sqrt(fan_in),
        +1/sqrt(fan_in)).
  """
  bound = 1.0 / np.sqrt(fan_in)
  uniforms = rng.Uniforms((fan_in, fan_out))
  return (2.0 * uniforms - 1.0) * bound
