# -*- coding: utf-8 -*-
"""Helper to check for availability and version of dependencies."""

import configparser
import importlib
import os
import re


class DependencyDefinition(object):
  """Dependency definition.

  Attributes:
    is_optional (bool): True if the dependency is optional.
    minimum_version (str): minimum supported version, a lesser version is
        not supported.
    name (str): name of the Python module that provides the dependency.
    pypi_name (str): name of the PyPI package that provides the dependency.
    version_property (str): name of the version attribute or function.
  """

  def __init__(self, name):
    """Initializes a dependency definition.

    Args:
      name (str): name of the Python module that provides the dependency.
    """
    super(DependencyDefinition, self).__init__()
    self.is_optional = False
    self.minimum_version = None
    self.name = name
    self.pypi_name = None
    self.version_property = None


class DependencyDefinitionReader(object):
  """Dependency definition reader."""

  _VALUE_NAMES = frozenset([
      'is_optional',
      'minimum_version',
      'pypi_name',
      'version_property'])

  def Read(self, file_object):
    """Reads dependency definitions.

    Args:
      file_object (file): file-like object to read from.

    Yields:
      DependencyDefinition: dependency definition.
    """
    config_parser = configparser.ConfigParser(interpolation=None)
    config_parser.read_file(file_object)

    for section_name in config_parser.sections():
      dependency_definition = DependencyDefinition(section_name)
      for value_name in self._VALUE_NAMES:
        value = config_parser.get(section_name, value_name, fallback=None)
        if value_name == 'is_optional':
          value = value in ('1', 'true', 'yes')
        setattr(dependency_definition, value_name, value)

      yield dependency_definition


class DependencyHelper(object):
  """Dependency helper.

  Attributes:
    dependencies (dict[str, DependencyDefinition]): dependencies.
  """

  _VERSION_NUMBERS_REGEX = re.compile(r'[0-9.]+')
  _VERSION_SPLIT_REGEX = re.compile(r'\.|\-')

  def __init__(
      self, dependencies_file='dependencies.ini',
      test_dependencies_file='test_dependencies.ini'):
    """Initializes a dependency helper.

    Args:
      dependencies_file (Optional[str]): path of the dependencies
          configuration file.
      test_dependencies_file (Optional[str]): path of the test dependencies
          configuration file.
    """
    super(DependencyHelper, self).__init__()
    self._test_dependencies = {}
    self.dependencies = self._ReadDependencies(dependencies_file)

    if os.path.exists(test_dependencies_file):
      self._test_dependencies = self._ReadDependencies(test_dependencies_file)

  def _ReadDependencies(self, path):
    """Reads the dependency definitions of a configuration file.

    Args:
      path (str): path of the configuration file.

    Returns:
      dict[str, DependencyDefinition]: dependencies per module name.
    """
    dependency_reader = DependencyDefinitionReader()
    with open(path, 'r', encoding='utf-8') as file_object:
      return {
          dependency.name: dependency
          for dependency in dependency_reader.Read(file_object)}

  def _ParseVersion(self, version):
    """Parses a version string.

    Semantic suffixes, such as rc1 or dev0, are ignored.

    Args:
      version (str): version string.

    Returns:
      list[int]: version numbers or None if the version cannot be parsed.
    """
    version_numbers = self._VERSION_NUMBERS_REGEX.findall(version)
    if not version_numbers:
      return None

    version = version_numbers[0].rstrip('.')
    try:
      return [int(number) for number in self._VERSION_SPLIT_REGEX.split(
          version)]
    except ValueError:
      return None

  def _CheckPythonModule(self, dependency):
    """Checks the availability and version of a Python module.

    Args:
      dependency (DependencyDefinition): dependency definition.

    Returns:
      tuple[bool, str]: True if the Python module is available and conforms
          to the minimum required version, and a status message.
    """
    try:
      module_object = importlib.import_module(dependency.name)
    except ImportError:
      return False, f'missing: {dependency.pypi_name or dependency.name:s}'

    if not dependency.version_property:
      return True, dependency.name

    if dependency.version_property.endswith('()'):
      version_function = getattr(
          module_object, dependency.version_property[:-2], None)
      module_version = version_function() if version_function else None
    else:
      module_version = getattr(
          module_object, dependency.version_property, None)

    if not module_version:
      return False, (
          f'unable to determine version information for: '
          f'{dependency.name:s}')

    module_version = f'{module_version!s}'
    module_version_map = self._ParseVersion(module_version)
    if module_version_map is None:
      return False, (
          f'unable to parse module version: {dependency.name:s} '
          f'{module_version:s}')

    if dependency.minimum_version:
      minimum_version_map = self._ParseVersion(dependency.minimum_version)
      if minimum_version_map is None:
        return False, (
            f'unable to parse minimum version: {dependency.name:s} '
            f'{dependency.minimum_version:s}')

      if module_version_map < minimum_version_map:
        return False, (
            f'{dependency.name:s} version: {module_version:s} is too old, '
            f'{dependency.minimum_version:s} or later required')

    return True, f'{dependency.name:s} version: {module_version:s}'

  def _CheckDependencies(self, dependencies, verbose_output=True):
    """Checks the availability of dependencies.

    Args:
      dependencies (dict[str, DependencyDefinition]): dependencies.
      verbose_output (Optional[bool]): True if output should be verbose.

    Returns:
      bool: True if the required dependencies are available, False otherwise.
    """
    check_result = True

    for _, dependency in sorted(dependencies.items()):
      result, status_message = self._CheckPythonModule(dependency)

      if not result and not dependency.is_optional:
        check_result = False

      if dependency.is_optional and not result:
        print(f'[OPTIONAL]\t{status_message:s}')
      elif not result:
        print(f'[FAILURE]\t{status_message:s}')
      elif verbose_output:
        print(f'[OK]\t\t{status_message:s}')

    if check_result and not verbose_output:
      print('[OK]')

    print('')
    return check_result

  def CheckDependencies(self, verbose_output=True):
    """Checks the availability of the dependencies.

    Args:
      verbose_output (Optional[bool]): True if output should be verbose.

    Returns:
      bool: True if the dependencies are available, False otherwise.
    """
    print('Checking availability and versions of dependencies.')
    return self._CheckDependencies(
        self.dependencies, verbose_output=verbose_output)

  def CheckTestDependencies(self, verbose_output=True):
    """Checks the availability of the dependencies when running tests.

    Args:
      verbose_output (Optional[bool]): True if output should be verbose.

    Returns:
      bool: True if the dependencies are available, False otherwise.
    """
    if not self.CheckDependencies(verbose_output=verbose_output):
      return False

    print('Checking availability and versions of test dependencies.')
    return self._CheckDependencies(
        self._test_dependencies, verbose_output=verbose_output)
