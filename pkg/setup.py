# Copyright (c) 2026, cydistill contributors
# All rights reserved.
#
# Redistribution and use in source and binary forms, with or without
# modification, are permitted providing that the following conditions
# are met:
# 1. Redistributions of source code must retain the above copyright
#    notice, this list of conditions and the following disclaimer.
# 2. Redistributions in binary form must reproduce the above copyright
#    notice, this list of conditions and the following disclaimer in the
#    documentation and/or other materials provided with the distribution.
#
# THIS SOFTWARE IS PROVIDED BY THE AUTHOR ``AS IS'' AND ANY EXPRESS OR
# IMPLIED WARRANTIES, INCLUDING, BUT NOT LIMITED TO, THE IMPLIED
# WARRANTIES OF MERCHANTABILITY AND FITNESS FOR A PARTICULAR PURPOSE
# ARE DISCLAIMED.  IN NO EVENT SHALL THE AUTHOR BE LIABLE FOR ANY
# DIRECT, INDIRECT, INCIDENTAL, SPECIAL, EXEMPLARY, OR CONSEQUENTIAL
# DAMAGES (INCLUDING, BUT NOT LIMITED TO, PROCUREMENT OF SUBSTITUTE GOODS
# OR SERVICES; LOSS OF USE, DATA, OR PROFITS; OR BUSINESS INTERRUPTION)
# HOWEVER CAUSED AND ON ANY THEORY OF LIABILITY, WHETHER IN CONTRACT,
# STRICT LIABILITY, OR TORT (INCLUDING NEGLIGENCE OR OTHERWISE) ARISING
# IN ANY WAY OUT OF THE USE OF THIS SOFTWARE, EVEN IF ADVISED OF THE
# POSSIBILITY OF SUCH DAMAGE.
import sys

from setuptools import find_packages, setup

if sys.version_info < (3, 8):
    exit("Only Python 3.8 and higher is supported.")

setup(name='cydistill',
      version='0.1.0',
      description='Distill numerical Calabi-Yau metrics into closed-form'
                  ' formulas.',
      author='cydistill Contributors',
      packages=find_packages(),
      include_package_data=True,
      install_requires=[
          'click==8.1.7',
          'texttable==1.7.0',
          'tqdm==4.66.1',
          'coloredlogs==15.0.1',
          'verboselogs==1.7',
          'numpy==1.26.4',
          'scipy==1.11.4',
          'deap==1.4.1',
          'joblib==1.3.2',
          'sympy==1.12'
      ],
      setup_requires=['pytest-runner'],
      entry_points={
          'console_scripts': [
              'cydistill = cydistill.main:cli'
          ]
      },
      tests_require=['pytest', 'pytest-cov', 'mock']
      )
