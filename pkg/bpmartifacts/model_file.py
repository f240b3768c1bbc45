# -*- coding: utf-8 -*-
"""Reading and writing of (V)AE model files.

A model file consists of:

  signature:        8 bytes "BPMVAE01"
  metadata size:    uint64 little-endian
  metadata:         UTF-8 "key=value" lines
  tensors, ordered lexicographically by name, each:
    name size:      uint64 little-endian
    name:           UTF-8
    number of rows: uint64 little-endian
    number of cols: uint64 little-endian
    values:         row-major IEEE-754 binary64 little-endian
"""

import os

import numpy as np

from dtfabric import errors as dtfabric_errors
from dtfabric.runtime import fabric as dtfabric_fabric

from bpmartifacts import autoencoder
from bpmartifacts import definitions
from bpmartifacts import errors


class ModelFile(object):
  """(V)AE model file."""

  _DATA_TYPE_FABRIC_DEFINITION_FILE = os.path.join(
      os.path.dirname(__file__), 'dtfabric.yaml')

  with open(_DATA_TYPE_FABRIC_DEFINITION_FILE, 'rb') as file_object:
    _DATA_TYPE_FABRIC_DEFINITION = file_object.read()

  _DATA_TYPE_FABRIC = dtfabric_fabric.DataTypeFabric(
      yaml_definition=_DATA_TYPE_FABRIC_DEFINITION)

  _UINT64_LITTLE_ENDIAN = _DATA_TYPE_FABRIC.CreateDataTypeMap('uint64le')

  FORMAT_VERSION = 1

  SIGNATURE = b'BPMVAE01'

  _INTEGER_METADATA_KEYS = frozenset([
      'W', 'hidden_dim', 'input_dim', 'latent_dim', 'num_layers', 'seed',
      'version'])

  _METADATA_KEYS = (
      'version', 'W', 'input_dim', 'hidden_dim', 'latent_dim', 'num_layers',
      'mode', 'beta', 'seed')

  def _ReadUInt64(self, byte_stream, offset, description):
    """Reads an unsigned 64-bit little-endian integer.

    Args:
      byte_stream (bytes): byte stream.
      offset (int): offset of the integer.
      description (str): description of the integer used in error messages.

    Returns:
      int: integer value.

    Raises:
      ModelFileError: if the byte stream is too small.
    """
    if offset + 8 > len(byte_stream):
      raise errors.ModelFileError(
          f'Truncated {description:s} at offset: {offset:d}')

    try:
      return self._UINT64_LITTLE_ENDIAN.MapByteStream(
          byte_stream[offset:offset + 8])
    except dtfabric_errors.MappingError as exception:
      raise errors.ModelFileError((
          f'Unable to read {description:s} at offset: {offset:d} with '
          f'error: {exception!s}'))

  def _WriteUInt64(self, value):
    """Writes an unsigned 64-bit little-endian integer.

    Args:
      value (int): integer value.

    Returns:
      bytes: byte stream.
    """
    return self._UINT64_LITTLE_ENDIAN.FoldByteStream(value)

  def _ParseMetadata(self, metadata_data):
    """Parses the metadata block.

    Args:
      metadata_data (bytes): metadata block.

    Returns:
      dict[str, object]: metadata values per key.

    Raises:
      ModelFileError: if the metadata cannot be parsed or the format version
          is not supported.
    """
    try:
      text = metadata_data.decode('utf-8')
    except UnicodeDecodeError as exception:
      raise errors.ModelFileError(
          f'Unable to decode metadata with error: {exception!s}')

    metadata = {}
    for line in text.splitlines():
      if not line:
        continue

      key, separator, value = line.partition('=')
      if not separator or key not in self._METADATA_KEYS:
        raise errors.ModelFileError(f'Unsupported metadata line: {line:s}')

      try:
        if key in self._INTEGER_METADATA_KEYS:
          metadata[key] = int(value, 10)
        elif key == 'beta':
          metadata[key] = float(value)
        else:
          metadata[key] = value

      except ValueError:
        raise errors.ModelFileError(
            f'Unsupported value: {value:s} of metadata key: {key:s}')

    missing_keys = set(self._METADATA_KEYS).difference(metadata.keys())
    if missing_keys:
      missing_keys = ', '.join(sorted(missing_keys))
      raise errors.ModelFileError(f'Missing metadata keys: {missing_keys:s}')

    if metadata['version'] != self.FORMAT_VERSION:
      raise errors.ModelFileError(
          f'Unsupported format version: {metadata["version"]:d}')

    if metadata['mode'] not in definitions.MODES:
      raise errors.ModelFileError(
          f'Unsupported mode: {metadata["mode"]:s}')

    return metadata

  def _ReadHeader(self, byte_stream):
    """Reads the signature and metadata.

    Args:
      byte_stream (bytes): model file data.

    Returns:
      tuple[dict[str, object], int]: metadata and offset of the first tensor.

    Raises:
      ModelFileError: if the signature or metadata is not supported.
    """
    signature_size = len(self.SIGNATURE)
    if byte_stream[:signature_size] != self.SIGNATURE:
      raise errors.ModelFileError('Unsupported model file signature.')

    metadata_size = self._ReadUInt64(
        byte_stream, signature_size, 'metadata size')

    metadata_offset = signature_size + 8
    metadata_end_offset = metadata_offset + metadata_size
    if metadata_end_offset > len(byte_stream):
      raise errors.ModelFileError('Truncated metadata.')

    metadata = self._ParseMetadata(
        byte_stream[metadata_offset:metadata_end_offset])

    return metadata, metadata_end_offset

  def ReadMetadata(self, byte_stream):
    """Reads the metadata without reading the tensors.

    Args:
      byte_stream (bytes): model file data, at least up to the end of the
          metadata.

    Returns:
      dict[str, object]: metadata values per key.

    Raises:
      ModelFileError: if the signature or metadata is not supported.
    """
    metadata, _ = self._ReadHeader(byte_stream)
    return metadata

  def Read(self, byte_stream):
    """Reads model parameters.

    Args:
      byte_stream (bytes): model file data.

    Returns:
      ModelParams: model parameters.

    Raises:
      ModelFileError: if the model file is not supported or truncated.
    """
    metadata, offset = self._ReadHeader(byte_stream)
    byte_stream_size = len(byte_stream)

    tensors = {}
    while offset < byte_stream_size:
      name_size = self._ReadUInt64(byte_stream, offset, 'tensor name size')
      offset += 8

      if offset + name_size > byte_stream_size:
        raise errors.ModelFileError('Truncated tensor name.')

      try:
        name = byte_stream[offset:offset + name_size].decode('utf-8')
      except UnicodeDecodeError as exception:
        raise errors.ModelFileError(
            f'Unable to decode tensor name with error: {exception!s}')

      offset += name_size

      number_of_rows = self._ReadUInt64(
          byte_stream, offset, f'rows of tensor: {name:s}')
      number_of_columns = self._ReadUInt64(
          byte_stream, offset + 8, f'columns of tensor: {name:s}')
      offset += 16

      data_size = number_of_rows * number_of_columns * 8
      if offset + data_size > byte_stream_size:
        raise errors.ModelFileError(f'Truncated values of tensor: {name:s}')

      values = np.frombuffer(
          byte_stream, dtype='<f8', count=number_of_rows * number_of_columns,
          offset=offset)
      tensors[name] = values.astype(np.float64).reshape(
          number_of_rows, number_of_columns)
      offset += data_size

    try:
      return autoencoder.ModelParams(
          metadata['W'], hidden_dim=metadata['hidden_dim'],
          latent_dim=metadata['latent_dim'],
          number_of_layers=metadata['num_layers'], mode=metadata['mode'],
          beta=metadata['beta'], seed=metadata['seed'], tensors=tensors,
          input_dim=metadata['input_dim'])

    except ValueError as exception:
      raise errors.ModelFileError(
          f'Unsupported model parameters with error: {exception!s}')

  def Write(self, model_parameters):
    """Writes model parameters.

    Args:
      model_parameters (ModelParams): model parameters.

    Returns:
      bytes: model file data.
    """
    metadata = model_parameters.GetMetadata()
    metadata['version'] = self.FORMAT_VERSION
    metadata['beta'] = repr(float(metadata['beta']))

    metadata_lines = [
        f'{key:s}={metadata[key]!s}\n' for key in self._METADATA_KEYS]
    metadata_data = ''.join(metadata_lines).encode('utf-8')

    data = [
        self.SIGNATURE, self._WriteUInt64(len(metadata_data)), metadata_data]

    for name in sorted(model_parameters.tensors.keys()):
      values = model_parameters.tensors[name]
      name_data = name.encode('utf-8')
      number_of_rows, number_of_columns = values.shape

      data.extend([
          self._WriteUInt64(len(name_data)), name_data,
          self._WriteUInt64(number_of_rows),
          self._WriteUInt64(number_of_columns),
          np.ascontiguousarray(values, dtype='<f8').tobytes()])

    return b''.join(data)


def LoadModel(byte_stream):
  """Loads model parameters from model file data.

  Args:
    byte_stream (bytes): model file data.

  Returns:
    ModelParams: model parameters.

  Raises:
    ModelFileError: if the model file is not supported or truncated.
  """
  return ModelFile().Read(byte_stream)


def ReadModelMetadata(byte_stream):
  """Reads the metadata of model file data.

  Args:
    byte_stream (bytes): model file data.

  Returns:
    dict[str, object]: metadata values per key.

  Raises:
    ModelFileError: if the signature or metadata is not supported.
  """
  return ModelFile().ReadMetadata(byte_stream)


def SaveModel(model_parameters):
  """Saves model parameters as model file data.

  Args:
    model_parameters (ModelParams): model parameters.

  Returns:
    bytes: model file data.
  """
  return ModelFile().Write(model_parameters)
