# -*- coding: utf-8 -*-
"""Command line interface of the BPm artifact detection experiments."""

import argparse
import logging
import os
import sys

from bpmartifacts import configuration as configuration_lib
from bpmartifacts import csv_files
from bpmartifacts import definitions
from bpmartifacts import errors
from bpmartifacts import experiment
from bpmartifacts import fusion
from bpmartifacts import model_file
from bpmartifacts import synthetic


logger = logging.getLogger(__name__)

RESOLVED_CONFIGURATION_FILENAME = 'resolved_config.txt'

_THRESHOLD_FILENAME = 'threshold.txt'


def _AddCommonArguments(argument_parser):
  """Adds the arguments shared by all subcommands.

  Args:
    argument_parser (argparse.ArgumentParser): argument parser.
  """
  argument_parser.add_argument(
      '--config', dest='config', type=str, action='store', default=None,
      metavar='PATH', help='path of a key=value configuration file.')

  argument_parser.add_argument(
      '--set', dest='overrides', type=str, action='append', default=[],
      metavar='KEY=VALUE', help=(
          'configuration override, can be used multiple times.'))

  argument_parser.add_argument(
      '--out', dest='output_directory', type=str, action='store',
      default='output', metavar='DIR', help='path of the output directory.')

  argument_parser.add_argument(
      '--seed', dest='seed', type=int, action='store', default=None,
      metavar='N', help='seed, overrides the configured seed.')

  argument_parser.add_argument(
      '--debug', dest='debug', action='store_true', default=False,
      help='enable debug output.')


def _AddDetectorArguments(argument_parser):
  """Adds the arguments that select a spike detector.

  Args:
    argument_parser (argparse.ArgumentParser): argument parser.
  """
  argument_parser.add_argument(
      '--kind', dest='kind', type=str, action='store', default=None,
      choices=sorted(definitions.DETECTOR_KINDS), help='detector kind.')

  argument_parser.add_argument(
      '--beta', dest='beta', type=float, action='store', default=None,
      help='KL divergence weight of the VAE.')


def _AddThresholdArguments(argument_parser):
  """Adds the arguments that select a model and threshold percentile.

  Args:
    argument_parser (argparse.ArgumentParser): argument parser.
  """
  argument_parser.add_argument(
      '--model', dest='model', type=str, action='store', default=None,
      metavar='PATH', help='path of a trained AE or VAE model file.')

  argument_parser.add_argument(
      '--q', dest='q', type=float, action='store', default=None,
      help='threshold percentile.')


def CreateArgumentParser():
  """Creates the command line argument parser.

  Returns:
    argparse.ArgumentParser: argument parser.
  """
  argument_parser = argparse.ArgumentParser(
      prog='bpmartifacts', description=(
          'Detects flatline and spike artifacts in minute-resolution mean '
          'blood pressure records.'))

  subparsers = argument_parser.add_subparsers(
      dest='command', metavar='COMMAND')
  subparsers.required = True

  synth_parser = subparsers.add_parser(
      'synth', help='generate a synthetic dataset.')
  _AddCommonArguments(synth_parser)

  train_parser = subparsers.add_parser(
      'train', help='train an AE or VAE on the training split.')
  _AddCommonArguments(train_parser)
  _AddDetectorArguments(train_parser)

  calibrate_parser = subparsers.add_parser(
      'calibrate', help='calibrate a spike threshold on the validation split.')
  _AddCommonArguments(calibrate_parser)
  _AddDetectorArguments(calibrate_parser)
  _AddThresholdArguments(calibrate_parser)

  detect_parser = subparsers.add_parser(
      'detect', help='label the artifacts of records.')
  _AddCommonArguments(detect_parser)
  _AddDetectorArguments(detect_parser)
  _AddThresholdArguments(detect_parser)
  detect_parser.add_argument(
      '--threshold', dest='threshold', type=str, action='store',
      default=None, metavar='PATH', help='path of a threshold file.')
  detect_parser.add_argument(
      'records', nargs='+', type=str, metavar='RECORD',
      help='path of a record CSV file.')

  evaluate_parser = subparsers.add_parser(
      'evaluate', help='evaluate one detector setup over the seeds.')
  _AddCommonArguments(evaluate_parser)
  _AddDetectorArguments(evaluate_parser)
  evaluate_parser.add_argument(
      '--q', dest='q', type=float, action='store', default=None,
      help='threshold percentile.')

  sweep_parser = subparsers.add_parser(
      'sweep', help='evaluate every detector setup and percentile.')
  _AddCommonArguments(sweep_parser)

  return argument_parser


def ResolveConfiguration(options):
  """Resolves the configuration of a command.

  Values resolve in the order: defaults, configuration file, --set
  overrides and dedicated flags.

  Args:
    options (argparse.Namespace): command line options.

  Returns:
    ExperimentConfiguration: validated configuration.

  Raises:
    ConfigurationError: if the configuration cannot be read or is invalid.
  """
  configuration = configuration_lib.ExperimentConfiguration()

  if options.config:
    try:
      with open(options.config, 'r', encoding='utf-8') as file_object:
        text = file_object.read()
    except (OSError, UnicodeDecodeError) as exception:
      raise errors.ConfigurationError((
          f'Unable to read configuration file: {options.config:s} with '
          f'error: {exception!s}'))

    configuration_lib.ParseConfiguration(text, configuration=configuration)

  configuration_lib.ApplyOverrides(configuration, options.overrides)

  for name in ('beta', 'kind', 'q', 'seed'):
    value = getattr(options, name, None)
    if value is not None:
      setattr(configuration, name, value)

  configuration.Validate()
  return configuration


def _WriteFile(path, data):
  """Writes data to a file, creating its parent directory when needed.

  Args:
    path (str): path of the file.
    data (bytes): data.
  """
  directory = os.path.dirname(path)
  if directory:
    os.makedirs(directory, exist_ok=True)

  with open(path, 'wb') as file_object:
    file_object.write(data)


def _LoadModel(path):
  """Loads a model file.

  Args:
    path (str): path of the model file.

  Returns:
    ModelParams: model parameters.
  """
  with open(path, 'rb') as file_object:
    return model_file.LoadModel(file_object.read())


def _CreateDeltaTraceGenerator(configuration, options):
  """Creates the delta trace generator selected by the options.

  Args:
    configuration (ExperimentConfiguration): configuration.
    options (argparse.Namespace): command line options.

  Returns:
    tuple[DeltaTraceGenerator, str]: generator and model identifier.

  Raises:
    ProtocolError: if an AE or VAE is selected without a model file.
  """
  if options.model:
    model_parameters = _LoadModel(options.model)
    generator = experiment.CreateDeltaTraceGenerator(
        configuration, model_parameters.mode,
        model_parameters=model_parameters, seed=configuration.seed)
    return generator, os.path.basename(options.model)

  if configuration.kind != definitions.DETECTOR_KIND_ARIMA:
    raise errors.ProtocolError(
        f'Missing model file for detector kind: {configuration.kind:s}')

  generator = experiment.CreateDeltaTraceGenerator(
      configuration, definitions.DETECTOR_KIND_ARIMA)
  return generator, definitions.DETECTOR_KIND_ARIMA


def _CalibrateOnValidation(
    configuration, generator, model_identifier, validation_records):
  """Calibrates a threshold on validation records.

  Args:
    configuration (ExperimentConfiguration): configuration.
    generator (DeltaTraceGenerator): delta trace generator.
    model_identifier (str): model identifier.
    validation_records (list[Record]): validation records in mmHg.

  Returns:
    Threshold: threshold.

  Raises:
    CalibrationError: if no validation deltas remain after filtering.
  """
  scaled_records = experiment.ScaleRecords(validation_records)
  delta_traces = list(generator.GenerateDeltaTraces(scaled_records))
  flatline_masks = experiment.ComputeFlatlineMasks(
      configuration, validation_records, scaled_records)

  return fusion.CalibrateThreshold(
      delta_traces, flatline_masks, configuration.q,
      model_identifier=model_identifier,
      validation_identifier=configuration.data_dir)


def RunSynth(configuration, output_directory):
  """Generates a synthetic dataset.

  Args:
    configuration (ExperimentConfiguration): configuration.
    output_directory (str): path of the output directory.
  """
  dataset = synthetic.GenerateDataset(
      configuration.GetSynthConfig(), ratios=configuration.split_ratios)
  experiment.WriteDataset(output_directory, dataset)

  logger.info((
      f'Generated: {len(dataset.records):d} records in: '
      f'{output_directory:s}'))


def RunTrain(configuration, output_directory):
  """Trains an AE or VAE on the training split.

  Args:
    configuration (ExperimentConfiguration): configuration.
    output_directory (str): path of the output directory.

  Raises:
    ConfigurationError: if the kind is not AE or VAE.
  """
  if configuration.kind not in definitions.MODES:
    raise errors.ConfigurationError(
        f'Unsupported kind for training: {configuration.kind:s}')

  data_splits = experiment.LoadDataSplits(configuration.data_dir)
  training_result = experiment.TrainDetector(
      configuration, data_splits.training_records, configuration.kind,
      configuration.beta, configuration.seed)

  _WriteFile(
      os.path.join(output_directory, 'model.bin'),
      model_file.SaveModel(training_result.model_parameters))
  _WriteFile(
      os.path.join(output_directory, 'loss_trace.csv'),
      csv_files.WriteLossTraceCSV(training_result.loss_trace))


def RunCalibrate(configuration, options):
  """Calibrates a spike threshold on the validation split.

  Args:
    configuration (ExperimentConfiguration): configuration.
    options (argparse.Namespace): command line options.
  """
  data_splits = experiment.LoadDataSplits(configuration.data_dir)
  generator, model_identifier = _CreateDeltaTraceGenerator(
      configuration, options)

  if configuration.tune_flatline:
    window_size, scores = experiment.SelectFlatlineWindow(
        configuration, data_splits.validation_records)
    configuration.flatline_window = window_size

    report = {
        'flatline_window': window_size,
        'scores': {
            int(grid_window_size): float(score)
            for grid_window_size, score in scores.items()}}
    _WriteFile(
        os.path.join(options.output_directory, 'flatline_tuning.yaml'),
        experiment.WriteReport(report))

  threshold = _CalibrateOnValidation(
      configuration, generator, model_identifier,
      data_splits.validation_records)

  _WriteFile(
      os.path.join(options.output_directory, _THRESHOLD_FILENAME),
      fusion.WriteThresholdFile(threshold))


def RunDetect(configuration, options):
  """Labels the artifacts of records.

  The threshold is read from a threshold file or, without one, calibrated on
  the validation split of the configured dataset.

  Args:
    configuration (ExperimentConfiguration): configuration.
    options (argparse.Namespace): command line options.

  Raises:
    ProtocolError: if there is neither a threshold file nor validation data.
  """
  generator, model_identifier = _CreateDeltaTraceGenerator(
      configuration, options)

  if options.threshold:
    with open(options.threshold, 'rb') as file_object:
      threshold = fusion.ReadThresholdFile(file_object.read())

  else:
    manifest_path = os.path.join(configuration.data_dir, 'manifest.csv')
    if not os.path.exists(manifest_path):
      raise errors.ProtocolError(
          'Missing threshold file and validation data to calibrate on.')

    data_splits = experiment.LoadDataSplits(configuration.data_dir)
    threshold = _CalibrateOnValidation(
        configuration, generator, model_identifier,
        data_splits.validation_records)

  records_list = [experiment.ReadRecordFile(path) for path in options.records]
  scaled_records = experiment.ScaleRecords(records_list)
  delta_traces = list(generator.GenerateDeltaTraces(scaled_records))
  flatline_masks = experiment.ComputeFlatlineMasks(
      configuration, records_list, scaled_records)

  detection_results = experiment.DetectArtifacts(
      records_list, delta_traces, flatline_masks, threshold)

  for detection_result in detection_results:
    record = detection_result.record
    record_identifier = record.record_identifier
    _WriteFile(
        os.path.join(
            options.output_directory, 'labels', f'{record_identifier:s}.csv'),
        csv_files.WriteLabelsCSV(record, detection_result.fused_mask))
    _WriteFile(
        os.path.join(
            options.output_directory, 'deltas',
            f'{record_identifier:s}.delta.csv'),
        csv_files.WriteDeltaTraceCSV(record, detection_result.delta_trace))

  report = experiment.CreateDetectionReport(detection_results, threshold)
  _WriteFile(
      os.path.join(options.output_directory, 'report.yaml'),
      experiment.WriteReport(report))


def RunEvaluate(configuration, output_directory):
  """Evaluates the configured detector setup over the seeds.

  Args:
    configuration (ExperimentConfiguration): configuration.
    output_directory (str): path of the output directory.
  """
  data_splits = experiment.LoadDataSplits(configuration.data_dir)
  experiment_stats = experiment.RunExperiment(
      configuration, data_splits, configuration.kind, configuration.beta,
      configuration.q, configuration.seeds,
      output_directory=output_directory)

  _WriteFile(
      os.path.join(output_directory, 'evaluation.csv'),
      csv_files.WriteSweepCSV([experiment_stats]))


def RunSweep(configuration, output_directory):
  """Evaluates every detector setup and percentile.

  Args:
    configuration (ExperimentConfiguration): configuration.
    output_directory (str): path of the output directory.
  """
  data_splits = experiment.LoadDataSplits(configuration.data_dir)
  statistics = experiment.Sweep(
      configuration, data_splits, output_directory=output_directory)
  experiment.WriteSweepOutputs(output_directory, statistics, configuration)


def _RunCommand(configuration, options):
  """Runs the command selected by the options.

  Args:
    configuration (ExperimentConfiguration): configuration.
    options (argparse.Namespace): command line options.
  """
  output_directory = options.output_directory

  if options.command == 'synth':
    RunSynth(configuration, output_directory)
  elif options.command == 'train':
    RunTrain(configuration, output_directory)
  elif options.command == 'calibrate':
    RunCalibrate(configuration, options)
  elif options.command == 'detect':
    RunDetect(configuration, options)
  elif options.command == 'evaluate':
    RunEvaluate(configuration, output_directory)
  elif options.command == 'sweep':
    RunSweep(configuration, output_directory)


def Main(arguments=None):
  """The main program function.

  Args:
    arguments (Optional[list[str]]): command line arguments, where None
        uses sys.argv.

  Returns:
    int: exit code.
  """
  argument_parser = CreateArgumentParser()
  options = argument_parser.parse_args(arguments)

  logging.basicConfig(
      level=logging.DEBUG if options.debug else logging.INFO,
      format='[%(levelname)s] %(name)s: %(message)s')

  try:
    configuration = ResolveConfiguration(options)

    os.makedirs(options.output_directory, exist_ok=True)
    _WriteFile(
        os.path.join(
            options.output_directory, RESOLVED_CONFIGURATION_FILENAME),
        configuration_lib.WriteConfiguration(configuration).encode('utf-8'))

    _RunCommand(configuration, options)

  except errors.ConfigurationError as exception:
    logger.error(f'Configuration error: {exception!s}')
    return definitions.EXIT_CONFIGURATION_ERROR

  except errors.NumericError as exception:
    logger.error(f'Numeric failure: {exception!s}')
    return definitions.EXIT_NUMERIC_ERROR

  except errors.ProtocolError as exception:
    logger.error(f'Protocol error: {exception!s}')
    return definitions.EXIT_PROTOCOL_ERROR

  except (OSError, ValueError, errors.Error) as exception:
    logger.error(f'Unable to run: {options.command:s} with error: '
                 f'{exception!s}')
    return definitions.EXIT_FAILURE

  return definitions.EXIT_SUCCESS


if __name__ == '__main__':
  sys.exit(Main())
