# -*- coding: utf-8 -*-
"""Deterministic pseudo random number generator.

Every stochastic step (record splits, window shuffles, weight initialization,
reparameterization noise and synthetic data) draws from this generator so
that results are bit-reproducible across platforms.

The generator is xoshiro256** with its 256-bit state seeded from 4 successive
outputs of splitmix64:

  splitmix64: state += 0x9e3779b97f4a7c15
              z = (state ^ (state >> 30)) * 0xbf58476d1ce4e5b9
              z = (z ^ (z >> 27)) * 0x94d049bb133111eb
              output = z ^ (z >> 31)

  xoshiro256**: output = rotl(s1 * 5, 7) * 9
                t = s1 << 17
                s2 ^= s0, s3 ^= s1, s1 ^= s2, s0 ^= s3, s2 ^= t
                s3 = rotl(s3, 45)

Uniform reals are the upper 53 bits of an output scaled by 2**-53. Gaussian
reals use the Box-Muller cosine branch and consume 2 uniform draws per value.
"""

import math

import numpy as np


_MASK64 = 0xffffffffffffffff

_GOLDEN_GAMMA = 0x9e3779b97f4a7c15


def _RotateLeft(value, shift):
  """Rotates a 64-bit value to the left.

  Args:
    value (int): 64-bit value.
    shift (int): number of bits to rotate.

  Returns:
    int: rotated 64-bit value.
  """
  return ((value << shift) | (value >> (64 - shift))) & _MASK64


def SplitMix64(state):
  """Advances a splitmix64 state.

  Args:
    state (int): 64-bit splitmix64 state.

  Returns:
    tuple[int, int]: next state and 64-bit output.
  """
  state = (state + _GOLDEN_GAMMA) & _MASK64
  value = state
  value = ((value ^ (value >> 30)) * 0xbf58476d1ce4e5b9) & _MASK64
  value = ((value ^ (value >> 27)) * 0x94d049bb133111eb) & _MASK64
  return state, value ^ (value >> 31)


class Rng(object):
  """Seeded xoshiro256** pseudo random number generator.

  Attributes:
    seed (int): 64-bit seed.
    stream_identifier (int): identifier of the stream the generator was
        derived for, 0 for a root generator.
  """

  def __init__(self, seed, stream_identifier=0):
    """Initializes a pseudo random number generator.

    Args:
      seed (int): seed, reduced modulo 2**64.
      stream_identifier (Optional[int]): identifier of the derived stream.
    """
    super(Rng, self).__init__()
    self._state = []
    self.seed = seed & _MASK64
    self.stream_identifier = stream_identifier

    splitmix_state = self.seed
    for _ in range(4):
      splitmix_state, value = SplitMix64(splitmix_state)
      self._state.append(value)

  def Derive(self, stream_identifier):
    """Derives an independent generator for a stream.

    The derived seed is the splitmix64 output of the parent seed XOR the
    stream identifier times the golden gamma. Derivation does not advance
    the parent generator.

    Args:
      stream_identifier (int): identifier of the stream.

    Returns:
      Rng: derived generator.
    """
    mixed_seed = self.seed ^ ((stream_identifier * _GOLDEN_GAMMA) & _MASK64)
    _, derived_seed = SplitMix64(mixed_seed)
    return Rng(derived_seed, stream_identifier=stream_identifier)

  def NextUInt64(self):
    """Retrieves the next 64-bit output.

    Returns:
      int: unsigned 64-bit integer.
    """
    state_0, state_1, state_2, state_3 = self._state

    result = (_RotateLeft((state_1 * 5) & _MASK64, 7) * 9) & _MASK64
    shifted = (state_1 << 17) & _MASK64

    state_2 ^= state_0
    state_3 ^= state_1
    state_1 ^= state_2
    state_0 ^= state_3
    state_2 ^= shifted
    state_3 = _RotateLeft(state_3, 45)

    self._state = [state_0, state_1, state_2, state_3]
    return result

  def NextUniform(self):
    """Retrieves the next uniform real.

    Returns:
      float: uniform real in [0, 1).
    """
    return (self.NextUInt64() >> 11) * (1.0 / 9007199254740992.0)

  def NextGaussian(self):
    """Retrieves the next standard normal real.

    Returns:
      float: standard normal real.
    """
    uniform_1 = self.NextUniform()
    uniform_2 = self.NextUniform()
    radius = math.sqrt(-2.0 * math.log(1.0 - uniform_1))
    return radius * math.cos(2.0 * math.pi * uniform_2)

  def NextInteger(self, upper_bound):
    """Retrieves the next integer below an upper bound.

    Args:
      upper_bound (int): exclusive upper bound, must be positive.

    Returns:
      int: integer in [0, upper_bound).

    Raises:
      ValueError: if the upper bound is not positive.
    """
    if upper_bound <= 0:
      raise ValueError(f'Unsupported upper bound: {upper_bound:d}')

    return (self.NextUInt64() * upper_bound) >> 64

  def Uniforms(self, shape):
    """Retrieves an array of uniform reals.

    Args:
      shape (int|tuple[int]): shape of the array.

    Returns:
      numpy.ndarray: uniform reals in [0, 1) filled in row-major order.
    """
    size = int(np.prod(shape))
    values = [self.NextUniform() for _ in range(size)]
    return np.array(values, dtype=np.float64).reshape(shape)

  def Gaussians(self, shape):
    """Retrieves an array of standard normal reals.

    Args:
      shape (int|tuple[int]): shape of the array.

    Returns:
      numpy.ndarray: standard normal reals filled in row-major order.
    """
    size = int(np.prod(shape))
    values = [self.NextGaussian() for _ in range(size)]
    return np.array(values, dtype=np.float64).reshape(shape)

  def Permutation(self, size):
    """Retrieves a uniform permutation using a Fisher-Yates shuffle.

    Args:
      size (int): number of elements.

    Returns:
      numpy.ndarray: permutation of range(size).
    """
    permutation = list(range(size))
    for index in range(size - 1, 0, -1):
      swap_index = self.NextInteger(index + 1)
      permutation[index], permutation[swap_index] = (
          permutation[swap_index], permutation[index])

    return np.array(permutation, dtype=np.int64)
