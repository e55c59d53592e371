#!/usr/bin/env python
# encoding: utf8

import ast
import os
import re

from setuptools import setup


here = os.path.dirname(os.path.abspath(__file__))

# Figure out the version
version_re = re.compile(
    r'__version__ = (\(.*?\))')
with open(os.path.join(here, 'gatebudget/__init__.py')) as fp:
    for line in fp:
        match = version_re.search(line)
        if match:
            version = '.'.join(map(str, ast.literal_eval(match.group(1))))
            break
    else:
        raise Exception("Cannot find version in gatebudget/__init__.py")

setup(name='gatebudget',
      version=version,
      description="Simulated error budgets of transmon gates, and their "
                  "reconstruction from measurement records.",
      classifiers=[
        'License :: OSI Approved :: BSD License',
        'Programming Language :: Python :: 3',
      ],
      license='BSD',
      packages=['gatebudget'],
      python_requires='>=3.8',
      install_requires=[
          'PyParsing',
          'numpy',
          'scipy',
          'tqdm',
      ],
      extras_require={'test': ['pytest']},
      entry_points={'console_scripts': ['gatebudget = gatebudget.script:run']},
      zip_safe=False,
      )
