#!/usr/bin/python
#
# Copyright (c) 2026 The depthcal authors.
#
# This file is part of the depthcal project.
#
# This file is licensed to you under your choice of the GNU Lesser
# General Public License, version 3 or any later version (LGPLv3 or
# later), or the GNU General Public License, version 2 (GPLv2), in all
# cases as published by the Free Software Foundation.

import os
import re
from setuptools import setup, find_packages


# Get version without importing.
init_file_path = os.path.join(os.path.dirname(__file__),
                              'perception/depthcal/__init__.py')
with open(init_file_path) as f:
    for line in f:
        match = re.match(r"__version__.*'([0-9.]+)'", line)
        if match:
            version = match.group(1)
            break
    else:
        raise Exception("Couldn't find version in setup.py")


def read(fname):
    return open(os.path.join(os.path.dirname(__file__), fname)).read()


setup(
    name='depthcal',
    version=version,
    description='Depth supervision and depth-denoising toolkit for '
                'multi-camera 3D detection',
    long_description=read('README.rst'),
    license='GPLv2 or LGPLv3+',
    author='The depthcal authors',
    packages=find_packages(exclude=['test*']),
    python_requires='>=3.8',
    install_requires=['numpy>=1.17'],
    entry_points={
        'console_scripts': [
            'depthcal = perception.depthcal.cli:main',
        ],
    },
    classifiers=[
        'Development Status :: 4 - Beta',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: GNU Lesser General Public License v3 or later (LGPLv3+)',  # noqa
        'License :: OSI Approved :: GNU General Public License v2 (GPLv2)',
        'Operating System :: POSIX :: Linux',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Image Recognition',
    ],
)
