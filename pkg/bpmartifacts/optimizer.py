# -*- coding: utf-8 -*-
"""Adam optimizer."""

import numpy as np


class AdamState(object):
  """Adam optimizer state.

  Attributes:
    beta1 (float): exponential decay rate of the first moment estimates.
    beta2 (float): exponential decay rate of the second moment estimates.
    epsilon (float): denominator stabilization term.
    first_moments (dict[str, numpy.ndarray]): first moment accumulators per
        parameter name.
    learning_rate (float): learning rate.
    second_moments (dict[str, numpy.ndarray]): second moment accumulators per
        parameter name.
    step (int): number of updates applied.
  """

  def __init__(
      self, parameters, learning_rate=1e-3, beta1=0.9, beta2=0.999,
      epsilon=1e-8):
    """Initializes an Adam optimizer state with zero moments.

    Args:
      parameters (dict[str, numpy.ndarray]): parameters per name, used to
          shape the accumulators.
      learning_rate (Optional[float]): learning rate.
      beta1 (Optional[float]): exponential decay rate of the first moments.
      beta2 (Optional[float]): exponential decay rate of the second moments.
      epsilon (Optional[float]): denominator stabilization term.
    """
    super(AdamState, self).__init__()
    self.beta1 = beta1
    self.beta2 = beta2
    self.epsilon = epsilon
    self.first_moments = {
        name: np.zeros_like(values) for name, values in parameters.items()}
    self.learning_rate = learning_rate
    self.second_moments = {
        name: np.zeros_like(values) for name, values in parameters.items()}
    self.step = 0

  def Copy(self):
    """Copies the state.

    Returns:
      AdamState: copy with its own accumulators.
    """
    state = AdamState(
        self.first_moments, learning_rate=self.learning_rate,
        beta1=self.beta1, beta2=self.beta2, epsilon=self.epsilon)
    state.first_moments = {
        name: values.copy() for name, values in self.first_moments.items()}
    state.second_moments = {
        name: values.copy() for name, values in self.second_moments.items()}
    state.step = self.step
    return state


def AdamStep(parameters, gradients, state):
  """Applies one bias-corrected Adam update.

  The inputs are not modified.

  Args:
    parameters (dict[str, numpy.ndarray]): parameters per name.
    gradients (dict[str, numpy.ndarray]): gradients per parameter name.
    state (AdamState): optimizer state.

  Returns:
    tuple: containing:

      dict[str, numpy.ndarray]: updated parameters.
      AdamState: updated optimizer state.

  Raises:
    ValueError: if the gradient and parameter shapes do not agree.
  """
  new_state = state.Copy()
  new_state.step += 1

  first_correction = 1.0 - new_state.beta1 ** new_state.step
  second_correction = 1.0 - new_state.beta2 ** new_state.step

  new_parameters = {}
  for name, values in parameters.items():
    gradient = gradients[name]
    if gradient.shape != values.shape:
      raise ValueError((
          f'Gradient shape: {gradient.shape!s} of: {name:s} does not match '
          f'parameter shape: {values.shape!s}'))

    first_moment = (
        new_state.beta1 * new_state.first_moments[name] +
        (1.0 - new_state.beta1) * gradient)
    second_moment = (
        new_state.beta2 * new_state.second_moments[name] +
        (1.0 - new_state.beta2) * gradient ** 2)

    new_state.first_moments[name] = first_moment
    new_state.second_moments[name] = second_moment

    corrected_first_moment = first_moment / first_correction
    corrected_second_moment = second_moment / second_correction

    new_parameters[name] = values - new_state.learning_rate * (
        corrected_first_moment / (
            np.sqrt(corrected_second_moment) + new_state.epsilon))

  return new_parameters, new_state
