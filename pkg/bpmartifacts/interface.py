# -*- coding: utf-8 -*-
"""The spike detector back-end interfaces."""

import abc


class DeltaTraceGenerator(object):
  """Per-sample error (delta) trace generator interface.

  Attributes:
    kind (str): detector kind, such as DETECTOR_KIND_VAE.
  """

  def __init__(self, kind):
    """Initializes a delta trace generator.

    Args:
      kind (str): detector kind.
    """
    super(DeltaTraceGenerator, self).__init__()
    self.kind = kind

  @abc.abstractmethod
  def GenerateDeltaTrace(self, record):
    """Generates the delta trace of a record.

    Args:
      record (Record): scaled record.

    Returns:
      DeltaTrace: per-sample errors, UNDEFINED where the back-end cannot
          assess a sample.
    """

  def GenerateDeltaTraces(self, scaled_records):
    """Generates the delta traces of records.

    Args:
      scaled_records (list[Record]): scaled records.

    Yields:
      DeltaTrace: delta trace per record, in the order of the records.
    """
    for record in scaled_records:
      yield self.GenerateDeltaTrace(record)
