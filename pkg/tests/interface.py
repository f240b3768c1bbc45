#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Tests for the spike detector back-end interfaces."""

import unittest

import numpy as np

from bpmartifacts import interface
from bpmartifacts import records

from tests import test_lib


class TestDeltaTraceGenerator(interface.DeltaTraceGenerator):
  """Delta trace generator that returns the absolute sample values."""

  def __init__(self):
    """Initializes a test delta trace generator."""
    super(TestDeltaTraceGenerator, self).__init__('test')

  def GenerateDeltaTrace(self, record):
    """Generates the delta trace of a record.

    Args:
      record (Record): scaled record.

    Returns:
      DeltaTrace: absolute sample values.
    """
    return records.DeltaTrace(record.record_identifier, np.abs(record.values))


class DeltaTraceGeneratorTest(test_lib.BaseTestCase):
  """Tests for the delta trace generator interface."""

  def testGenerateDeltaTraces(self):
    """Tests the GenerateDeltaTraces function."""
    generator = TestDeltaTraceGenerator()
    self.assertEqual(generator.kind, 'test')

    scaled_records = [
        test_lib.CreateRecord([-1.0, 2.0], record_identifier='first'),
        test_lib.CreateRecord([3.0], record_identifier='second')]

    delta_traces = list(generator.GenerateDeltaTraces(scaled_records))
    self.assertEqual(
        [delta_trace.record_identifier for delta_trace in delta_traces],
        ['first', 'second'])
    self.assertEqual(delta_traces[0].deltas.tolist(), [1.0, 2.0])


if __name__ == '__main__':
  unittest.main()
