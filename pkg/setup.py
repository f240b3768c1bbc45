#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Installation and deployment script of bpmArtifacts."""

from setuptools import setup


setup()
