# -*- coding: utf-8 -*-
"""Experiment configuration.

The configuration is read from "key=value" lines, where lines starting with
"#" are comments. Unknown keys and unparsable values are rejected.
"""

import configparser

from bpmartifacts import arima
from bpmartifacts import autoencoder
from bpmartifacts import definitions
from bpmartifacts import errors
from bpmartifacts import flatline
from bpmartifacts import synthetic


_SECTION_NAME = 'configuration'


def _FormatBoolean(value):
  """Formats a boolean value."""
  return 'true' if value else 'false'


def _FormatFloat(value):
  """Formats a real value."""
  return repr(float(value))


def _FormatFloatList(values):
  """Formats a list of real values."""
  return ','.join(repr(float(value)) for value in values)


def _FormatInteger(value):
  """Formats an integer value."""
  return f'{value:d}'


def _FormatIntegerList(values):
  """Formats a list of integer values."""
  return ','.join(f'{value:d}' for value in values)


def _FormatString(value):
  """Formats a string value."""
  return value


def _ParseBoolean(string):
  """Parses a boolean value.

  Args:
    string (str): string.

  Returns:
    bool: value.

  Raises:
    ValueError: if the string is not a boolean.
  """
  lower_string = string.lower()
  if lower_string in ('1', 'true', 'yes'):
    return True
  if lower_string in ('0', 'false', 'no'):
    return False

  raise ValueError(f'Unsupported boolean: {string:s}')


def _ParseFloatList(string):
  """Parses a comma separated list of real values."""
  values = [float(value) for value in string.split(',') if value.strip()]
  if not values:
    raise ValueError('Unsupported empty list.')
  return values


def _ParseIntegerList(string):
  """Parses a comma separated list of integer values."""
  values = [int(value, 10) for value in string.split(',') if value.strip()]
  if not values:
    raise ValueError('Unsupported empty list.')
  return values


def _ParseInteger(string):
  """Parses an integer value."""
  return int(string, 10)


def _ParseString(string):
  """Parses a string value."""
  return string


_BOOLEAN = (_ParseBoolean, _FormatBoolean)
_FLOAT = (float, _FormatFloat)
_FLOAT_LIST = (_ParseFloatList, _FormatFloatList)
_INTEGER = (_ParseInteger, _FormatInteger)
_INTEGER_LIST = (_ParseIntegerList, _FormatIntegerList)
_STRING = (_ParseString, _FormatString)

# The configuration keys with their value type and default.
_KEY_DEFINITIONS = {
    'arima_d': (_INTEGER, 1),
    'arima_p': (_INTEGER, 3),
    'arima_window': (_INTEGER, 60),
    'ar_coefficient': (_FLOAT, 0.9),
    'baseline_max': (_FLOAT, 100.0),
    'baseline_min': (_FLOAT, 60.0),
    'batch_size': (_INTEGER, 128),
    'beta': (_FLOAT, 0.1),
    'beta_grid': (_FLOAT_LIST, [0.1, 0.2, 0.3, 0.4, 0.5, 0.6]),
    'data_dir': (_STRING, 'data'),
    'drift_amplitude': (_FLOAT, 10.0),
    'drift_period_max': (_FLOAT, 360.0),
    'drift_period_min': (_FLOAT, 120.0),
    'epochs': (_INTEGER, 50),
    'flatline_duration_max': (_INTEGER, 120),
    'flatline_duration_min': (_INTEGER, 5),
    'flatline_eps': (_FLOAT, 1e-9),
    'flatline_on_scaled': (_BOOLEAN, False),
    'flatline_rate': (_FLOAT, 1.0),
    'flatline_window': (_INTEGER, 10),
    'flatline_window_grid': (_INTEGER_LIST, [5, 10, 15]),
    'hidden_dim': (_INTEGER, 64),
    'innovation_scale': (_FLOAT, 3.0),
    'jobs': (_INTEGER, 1),
    'kind': (_STRING, definitions.DETECTOR_KIND_VAE),
    'latent_dim': (_INTEGER, 12),
    'learning_rate': (_FLOAT, 1e-3),
    'missing_duration_max': (_INTEGER, 20),
    'missing_duration_min': (_INTEGER, 1),
    'missing_rate': (_FLOAT, 0.5),
    'n_records': (_INTEGER, 85),
    'num_layers': (_INTEGER, 2),
    'q': (_FLOAT, 98.0),
    'q_grid': (_FLOAT_LIST, [90.0, 92.0, 94.0, 96.0, 98.0]),
    'quantization_step': (_FLOAT, 1.0),
    'record_len': (_INTEGER, 720),
    'sample_latent': (_BOOLEAN, False),
    'seed': (_INTEGER, 0),
    'seeds': (_INTEGER_LIST, [1, 2, 3, 4, 5]),
    'spike_amplitude_max': (_FLOAT, 60.0),
    'spike_amplitude_min': (_FLOAT, 15.0),
    'spike_duration_max': (_INTEGER, 3),
    'spike_duration_min': (_INTEGER, 1),
    'spike_rate': (_FLOAT, 3.0),
    'split_ratios': (_INTEGER_LIST, [53, 15, 17]),
    'tune_flatline': (_BOOLEAN, False),
    'window_len': (_INTEGER, 60)}


class ExperimentConfiguration(object):
  """Experiment configuration.

  Every configuration key is an attribute of the same name, such as
  window_len, beta_grid and q_grid.
  """

  def __init__(self):
    """Initializes an experiment configuration with the defaults."""
    super(ExperimentConfiguration, self).__init__()
    for key, (_, default_value) in _KEY_DEFINITIONS.items():
      if isinstance(default_value, list):
        default_value = list(default_value)
      setattr(self, key, default_value)

  def Copy(self):
    """Copies the configuration.

    Returns:
      ExperimentConfiguration: copy of the configuration.
    """
    configuration = ExperimentConfiguration()
    for key in _KEY_DEFINITIONS:
      value = getattr(self, key)
      if isinstance(value, list):
        value = list(value)
      setattr(configuration, key, value)

    return configuration

  def CopyToDict(self):
    """Copies the configuration to a dictionary.

    Returns:
      dict[str, object]: configuration values per key.
    """
    return {
        key: list(value) if isinstance(value, list) else value
        for key, value in (
            (key, getattr(self, key)) for key in _KEY_DEFINITIONS)}

  def GetARIMAConfig(self):
    """Retrieves the ARIMA baseline configuration.

    Returns:
      ARIMAConfig: ARIMA baseline configuration.
    """
    return arima.ARIMAConfig(
        p=self.arima_p, d=self.arima_d, window_length=self.arima_window)

  def GetFlatlineConfig(self, window_size=None):
    """Retrieves the flatline detector configuration.

    Args:
      window_size (Optional[int]): window size that overrides flatline_window.

    Returns:
      FlatlineConfig: flatline detector configuration.
    """
    if window_size is None:
      window_size = self.flatline_window

    return flatline.FlatlineConfig(
        window_size=window_size, eps=self.flatline_eps)

  def GetSynthConfig(self):
    """Retrieves the synthetic data configuration.

    Returns:
      SynthConfig: synthetic data configuration.
    """
    return synthetic.SynthConfig(
        number_of_records=self.n_records, record_length=self.record_len,
        baseline_range=(self.baseline_min, self.baseline_max),
        drift_amplitude=self.drift_amplitude,
        drift_period_range=(self.drift_period_min, self.drift_period_max),
        ar_coefficient=self.ar_coefficient,
        innovation_scale=self.innovation_scale,
        quantization_step=self.quantization_step,
        flatline_rate=self.flatline_rate,
        flatline_duration_range=(
            self.flatline_duration_min, self.flatline_duration_max),
        spike_rate=self.spike_rate,
        spike_amplitude_range=(
            self.spike_amplitude_min, self.spike_amplitude_max),
        spike_duration_range=(
            self.spike_duration_min, self.spike_duration_max),
        missing_rate=self.missing_rate,
        missing_duration_range=(
            self.missing_duration_min, self.missing_duration_max),
        seed=self.seed, audit_window_size=self.flatline_window)

  def GetTrainConfig(self, kind, beta, seed):
    """Retrieves the (V)AE training configuration.

    Args:
      kind (str): detector kind, either DETECTOR_KIND_AE or DETECTOR_KIND_VAE.
      beta (float): KL divergence weight.
      seed (int): seed of the run.

    Returns:
      TrainConfig: training configuration.
    """
    return autoencoder.TrainConfig(
        epochs=self.epochs, batch_size=self.batch_size,
        learning_rate=self.learning_rate, seed=seed, beta=beta, mode=kind,
        hidden_dim=self.hidden_dim, latent_dim=self.latent_dim,
        number_of_layers=self.num_layers)

  def Set(self, key, string):
    """Sets a configuration value from its string representation.

    Args:
      key (str): configuration key.
      string (str): value string.

    Raises:
      ConfigurationError: if the key is not supported or the value cannot be
          parsed.
    """
    key = key.strip()
    key_definition = _KEY_DEFINITIONS.get(key, None)
    if not key_definition:
      raise errors.ConfigurationError(f'Unsupported key: {key:s}')

    (parse_function, _), _ = key_definition
    try:
      value = parse_function(string.strip())
    except ValueError:
      raise errors.ConfigurationError(
          f'Unsupported value: {string:s} of key: {key:s}')

    setattr(self, key, value)

  def Validate(self):
    """Validates the configuration.

    Raises:
      ConfigurationError: if a value is out of its supported range.
    """
    if self.kind not in definitions.DETECTOR_KINDS:
      raise errors.ConfigurationError(f'Unsupported kind: {self.kind:s}')

    if len(self.split_ratios) != 3 or min(self.split_ratios) < 0 or (
        sum(self.split_ratios) <= 0):
      raise errors.ConfigurationError('Unsupported split_ratios.')

    for name in ('q', 'q_grid'):
      values = getattr(self, name)
      if not isinstance(values, list):
        values = [values]
      if any(not 0.0 <= value <= 100.0 for value in values):
        raise errors.ConfigurationError(f'Unsupported {name:s}.')

    for name in ('beta', 'beta_grid'):
      values = getattr(self, name)
      if not isinstance(values, list):
        values = [values]
      if any(value < 0.0 for value in values):
        raise errors.ConfigurationError(f'Unsupported {name:s}.')

    for name in (
        'batch_size', 'hidden_dim', 'jobs', 'latent_dim', 'num_layers',
        'record_len', 'window_len'):
      if getattr(self, name) < 1:
        raise errors.ConfigurationError(f'Unsupported {name:s}.')

    if self.epochs < 0 or self.learning_rate <= 0.0:
      raise errors.ConfigurationError('Unsupported epochs or learning_rate.')

    if self.n_records < 3:
      raise errors.ConfigurationError('Unsupported n_records.')

    try:
      self.GetARIMAConfig()
      for window_size in [self.flatline_window] + self.flatline_window_grid:
        self.GetFlatlineConfig(window_size=window_size)
      self.GetSynthConfig()

    except ValueError as exception:
      raise errors.ConfigurationError(
          f'Unsupported configuration with error: {exception!s}')


def ApplyOverrides(configuration, overrides):
  """Applies "key=value" overrides to a configuration.

  Args:
    configuration (ExperimentConfiguration): configuration.
    overrides (list[str]): "key=value" overrides.

  Raises:
    ConfigurationError: if an override is malformed or not supported.
  """
  for override in overrides or []:
    key, separator, value = override.partition('=')
    if not separator:
      raise errors.ConfigurationError(f'Malformed override: {override:s}')

    configuration.Set(key, value)


def ParseConfiguration(text, configuration=None):
  """Parses "key=value" configuration text.

  Args:
    text (str): configuration text.
    configuration (Optional[ExperimentConfiguration]): configuration to apply
        the values to, where None applies them to the defaults.

  Returns:
    ExperimentConfiguration: configuration.

  Raises:
    ConfigurationError: if the text cannot be parsed or contains an
        unsupported key or value.
  """
  if configuration is None:
    configuration = ExperimentConfiguration()

  config_parser = configparser.ConfigParser(
      comment_prefixes=('#',), delimiters=('=',), interpolation=None)

  for line_number, line in enumerate(text.splitlines(), start=1):
    if config_parser.SECTCRE.match(line.strip()):
      raise errors.ConfigurationError(
          f'Unsupported section header in line: {line_number:d}')

  try:
    config_parser.read_string(f'[{_SECTION_NAME:s}]\n{text:s}')
  except configparser.Error as exception:
    raise errors.ConfigurationError(
        f'Unable to parse configuration with error: {exception!s}')

  for key, value in config_parser.items(_SECTION_NAME):
    configuration.Set(key, value)

  return configuration


def WriteConfiguration(configuration):
  """Writes a configuration as "key=value" text.

  Args:
    configuration (ExperimentConfiguration): configuration.

  Returns:
    str: configuration text with sorted keys.
  """
  lines = []
  for key in sorted(_KEY_DEFINITIONS.keys()):
    (_, format_function), _ = _KEY_DEFINITIONS[key]
    value_string = format_function(getattr(configuration, key))
    lines.append(f'{key:s}={value_string:s}\n')

  return ''.join(lines)
