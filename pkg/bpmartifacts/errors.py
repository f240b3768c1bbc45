# -*- coding: utf-8 -*-
"""This file contains the error classes."""


class Error(Exception):
  """Base error class."""


class ParseError(Error):
  """Raised when a CSV file cannot be parsed."""


class RecordValidationError(Error):
  """Raised when a record read from storage violates its index invariant."""


class ModelFileError(Error):
  """Raised when a model file cannot be read."""


class ConfigurationError(Error):
  """Raised when an experiment configuration is invalid."""


class NumericError(Error):
  """Raised when a computation produces NaN or infinite values."""


class ProtocolError(Error):
  """Raised when the experimental protocol is used incorrectly."""


class CalibrationError(ProtocolError):
  """Raised when a spike threshold cannot be calibrated."""
