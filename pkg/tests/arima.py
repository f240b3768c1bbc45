#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Tests for the per-window ARIMA baseline."""

import unittest

import numpy as np

from bpmartifacts import arima
from bpmartifacts import definitions

from tests import test_lib


class ARIMAConfigTest(test_lib.BaseTestCase):
  """Tests for the ARIMA baseline configuration."""

  def testInitialize(self):
    """Tests the __init__ function."""
    arima_config = arima.ARIMAConfig()
    self.assertEqual(arima_config.p, 3)
    self.assertEqual(arima_config.d, 1)
    self.assertEqual(arima_config.q, 0)
    self.assertEqual(arima_config.window_length, 60)

    with self.assertRaises(ValueError):
      arima.ARIMAConfig(p=0)

    with self.assertRaises(ValueError):
      arima.ARIMAConfig(d=2)

    with self.assertRaises(ValueError):
      arima.ARIMAConfig(q=1)

    with self.assertRaises(ValueError):
      arima.ARIMAConfig(window_length=8)


class DifferenceTest(test_lib.BaseTestCase):
  """Tests for the Difference function."""

  def testDifference(self):
    """Tests the Difference function."""
    self.assertEqual(
        arima.Difference([1.0, 4.0, 9.0], 1).tolist(), [3.0, 5.0])
    self.assertEqual(
        arima.Difference([1.0, 4.0, 9.0], 0).tolist(), [1.0, 4.0, 9.0])

    with self.assertRaises(ValueError):
      arima.Difference([1.0], 1)


class FitARTest(test_lib.BaseTestCase):
  """Tests for the FitAR function."""

  def testFitAR(self):
    """Tests the FitAR function on an autoregressive process."""
    rng = np.random.default_rng(1)
    series = np.zeros(5000)
    for index in range(1, series.size):
      series[index] = 0.5 + 0.6 * series[index - 1] + rng.normal(0.0, 0.1)

    fit = arima.FitAR(series, 1)
    self.assertFalse(fit.is_fallback)
    self.assertAlmostEqual(fit.intercept, 0.5, delta=0.05)
    self.assertAlmostEqual(fit.coefficients[0], 0.6, delta=0.05)
    self.assertEqual(fit.residuals.size, series.size - 1)
    self.assertAlmostEqual(float(np.std(fit.residuals)), 0.1, delta=0.01)

    self.assertAlmostEqual(
        fit.Forecast(np.array([1.0])),
        fit.intercept + fit.coefficients[0], places=12)

  def testFitARFallback(self):
    """Tests that a constant series falls back to persistence."""
    fit = arima.FitAR(np.full(20, 3.0), 2)
    self.assertTrue(fit.is_fallback)
    self.assertEqual(fit.intercept, 0.0)
    self.assertEqual(fit.coefficients.tolist(), [1.0, 0.0])
    self.assertEqual(fit.Forecast(np.array([1.0, 2.0, 3.0])), 3.0)

    with self.assertRaises(ValueError):
      arima.FitAR(np.arange(7.0), 3)


class ARIMADeltaTraceTest(test_lib.BaseTestCase):
  """Tests for the ARIMADeltaTrace function."""

  def testLinearRecord(self):
    """Tests that a linear record is forecast without error."""
    record = test_lib.CreateRecord(np.arange(100, dtype=np.float64) * 0.5)
    delta_trace = arima.ARIMADeltaTrace(record, arima.ARIMAConfig())

    self.assertEqual(len(delta_trace), 100)
    self.assertFalse(np.any(delta_trace.is_defined[:60]))
    self.assertTrue(np.all(delta_trace.is_defined[60:]))
    self.assertTrue(np.allclose(
        delta_trace.deltas[60:], 0.0, rtol=0.0, atol=1e-9))
    self.assertEqual(delta_trace.number_of_fallbacks, 40)

  def testMissingSamples(self):
    """Tests that MISSING samples leave the deltas they affect UNDEFINED."""
    values = np.random.default_rng(2).normal(size=150)
    values[70] = np.nan
    record = test_lib.CreateRecord(values)

    delta_trace = arima.ARIMADeltaTrace(record, arima.ARIMAConfig())
    self.assertTrue(np.all(delta_trace.is_defined[60:70]))
    self.assertFalse(np.any(delta_trace.is_defined[70:131]))
    self.assertTrue(np.all(delta_trace.is_defined[131:]))
    self.assertTrue(np.all(delta_trace.deltas[60:70] >= 0.0))
    self.assertEqual(delta_trace.number_of_fallbacks, 0)

  def testSpike(self):
    """Tests that a spike stands out from the preceding forecast errors."""
    values = np.sin(np.arange(120) * 0.2) + np.random.default_rng(3).normal(
        0.0, 0.01, size=120)
    values[100] += 5.0
    record = test_lib.CreateRecord(values)

    delta_trace = arima.ARIMADeltaTrace(
        record, arima.ARIMAConfig(p=2, window_length=30))
    self.assertGreater(
        delta_trace.deltas[100], 10.0 * np.max(delta_trace.deltas[30:100]))

  def testARIMADeltaTraceGenerator(self):
    """Tests the ARIMA delta trace generator."""
    generator = arima.ARIMADeltaTraceGenerator(arima.ARIMAConfig())
    self.assertEqual(generator.kind, definitions.DETECTOR_KIND_ARIMA)

    record = test_lib.CreateRecord(np.zeros(50))
    delta_trace = generator.GenerateDeltaTrace(record)
    self.assertFalse(np.any(delta_trace.is_defined))


if __name__ == '__main__':
  unittest.main()
