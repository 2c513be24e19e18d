#!/usr/bin/env python
import re
from setuptools import setup
import sys


# Check Python version
if sys.version_info < (3, 10):
    sys.exit('Minimum Python version is 3.10')


# perco-micro version
vfile = open('percomicro/_version.py').read()
vsrch = re.search(r"^__version__ = ['\"]([^'\"]*)['\"]", vfile, re.M)

if vsrch:
    version = vsrch.group(1)
else:
    print('Unable to find a version string in percomicro/_version.py')

# Modules
modules = [
    'percomicro.bitstream',
    'percomicro.codec',
    'percomicro.diffusion',
    'percomicro.metrics',
    'percomicro.nn',
    'percomicro.plugins',
    'percomicro.quant'
]

# Tests
tests = [
    'percomicro.tests'
]

# Hard dependencies
install_requires = [
    'numpy >= 1.26.4',
    'platformdirs >= 2.2.0',
    'scipy >= 1.10'
]

# Soft dependencies
extras_require = {
    'test': ['pytest >= 7.0']
}

# Scripts
console_scripts = [
    'perco-micro = percomicro.__main__:main'
]

# Info
classifiers = [
    'License :: OSI Approved :: BSD License',
    'Programming Language :: Python',
    'Programming Language :: Python :: 3.10',
    'Topic :: Scientific/Engineering :: Image Processing'
]

long_description = '''perco-micro is a small perceptual image codec. An
encoder quantises each image to a coarse grid of codebook indices plus an
optional global token, and a conditional diffusion model trained alongside
the encoder synthesises a plausible reconstruction at decode time. The
package carries its own reverse-mode autodiff on NumPy, an adaptive
arithmetic coder, a compact container format and rate-distortion tooling,
and runs on a desktop CPU.'''

setup(name='perco-micro',
      version=version,
      description='Perceptual image compression at extremely low bitrates',
      long_description=long_description,
      license='BSD',
      keywords='Image compression',
      packages=['percomicro'] + modules + tests,
      entry_points={'console_scripts': console_scripts},
      python_requires='>=3.10',
      install_requires=install_requires,
      extras_require=extras_require,
      classifiers=classifiers)
