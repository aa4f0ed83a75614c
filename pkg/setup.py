#!/usr/bin/env python
import os
import re

from setuptools import find_packages, setup


# Figure out the version without importing the package, which needs
# numpy and scipy to be installed already.
here = os.path.dirname(os.path.abspath(__file__))
version_re = re.compile(r'__version__ = (\(.*?\))')
fp = open(os.path.join(here, 'sexpde', '__init__.py'))
version = None
for line in fp:
    match = version_re.search(line)
    if match:
        version = eval(match.group(1))
        break
else:
    raise Exception("Cannot find version in __init__.py")
fp.close()


setup(
    name='sexpde',
    version=".".join(map(str, version)),
    description='Stochastic exponential Euler finite element solver for '
                'semi-linear parabolic SPDEs, with convergence studies.',
    license='BSD',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Environment :: Console',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: BSD License',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
    packages=find_packages(),
    python_requires='>=3.8',
    install_requires=[
        'numpy>=1.22',
        'scipy>=1.8',
    ],
    extras_require={
        'test': ['pytest'],
    },
    entry_points={
        'console_scripts': ['sexpde = sexpde.cli:main'],
    },
)
