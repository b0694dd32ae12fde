#!/usr/bin/env python3

# Prepare a release:
#
#  - git pull --rebase
#  - Remove untracked files/dirs: git clean -fdx
#  - update VERSION here and TOOL_VERSION in cryoflux/core.py
#  - run tests: tox
#  - git commit -a -m "prepare release x.y"
#  - git tag VERSION
#  - git push --tags
#  - python3 setup.py sdist bdist_wheel

from setuptools import setup, find_packages

VERSION = '0.1.0'

DESCRIPTION = 'Noise-photon transport, coax mode losses and absorptive filters for cryogenic wiring'

CLASSIFIERS = [
    'Development Status :: 4 - Beta',
    'Intended Audience :: Science/Research',
    'License :: OSI Approved :: MIT License',
    'Natural Language :: English',
    'Operating System :: OS Independent',
    'Environment :: Console',
    'Programming Language :: Python',
    'Programming Language :: Python :: 3.7',
    'Programming Language :: Python :: 3.8',
    'Programming Language :: Python :: 3.9',
    'Topic :: Scientific/Engineering :: Physics',
]

with open('README.rst', 'r') as f:
    long_description = f.read()

setup(
    name='cryoflux',
    version=VERSION,
    description=DESCRIPTION,
    long_description=long_description,
    license='MIT',
    packages=find_packages(exclude=['tests']),
    include_package_data=True,
    package_data={
        'cryoflux': ['config/cryoflux.conf.default']
    },
    classifiers=CLASSIFIERS,
    python_requires='>=3.7',
    install_requires=[
        'numpy',
        'pandas',
        'scipy>=1.6',
        'dask',
        'distributed',
        'scikit-rf',
        'setuptools',
    ],
    entry_points={
        'console_scripts': [
            'cryoflux = cryoflux:main'
        ]
    }
)
