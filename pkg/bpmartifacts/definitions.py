# -*- coding: utf-8 -*-
"""The BPm artifact detection definitions."""

# The per-sample labels, ordered UNKNOWN < VALID < ARTIFACT so that the
# maximum of two labels is their logical OR.
LABEL_UNKNOWN = -1
LABEL_VALID = 0
LABEL_ARTIFACT = 1

LABELS = frozenset([LABEL_UNKNOWN, LABEL_VALID, LABEL_ARTIFACT])

# The label mask sources.
SOURCE_TRUTH = 'truth'
SOURCE_FLATLINE = 'flatline'
SOURCE_SPIKE = 'spike'
SOURCE_FUSED = 'fused'

SOURCES = frozenset([
    SOURCE_TRUTH, SOURCE_FLATLINE, SOURCE_SPIKE, SOURCE_FUSED])

# The (V)AE training modes.
MODE_AE = 'ae'
MODE_VAE = 'vae'

MODES = frozenset([MODE_AE, MODE_VAE])

# The spike detector kinds.
DETECTOR_KIND_AE = MODE_AE
DETECTOR_KIND_ARIMA = 'arima'
DETECTOR_KIND_VAE = MODE_VAE

DETECTOR_KINDS = frozenset([
    DETECTOR_KIND_AE, DETECTOR_KIND_ARIMA, DETECTOR_KIND_VAE])

# The record splits.
SPLIT_TEST = 'test'
SPLIT_TRAIN = 'train'
SPLIT_VALIDATION = 'validation'

SPLITS = (SPLIT_TRAIN, SPLIT_VALIDATION, SPLIT_TEST)

# The record admission rules.
MINIMUM_NUMERIC_FRACTION = 0.90

RULE_INDEX_GAP = 'index-gap'
RULE_INSUFFICIENT_DATA = 'insufficient-data'

# The pseudo random number generator stream identifiers.
STREAM_SPLIT = 1
STREAM_POOL = 2
STREAM_INITIALIZATION = 3
STREAM_EPOCH = 4
STREAM_NOISE = 5
STREAM_SYNTHESIS = 6
STREAM_INFERENCE = 7

# The high frequency cutoff, in cycles per minute, used for the reconstruction
# bandwidth analysis.
HIGH_FREQUENCY_CUTOFF = 0.1

# The command line exit codes.
EXIT_SUCCESS = 0
EXIT_FAILURE = 1
EXIT_CONFIGURATION_ERROR = 2
EXIT_NUMERIC_ERROR = 3
EXIT_PROTOCOL_ERROR = 4
