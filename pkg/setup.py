import os
from setuptools import setup

project_name = 'pyura'
if 'PROJECT_NAME' in os.environ:
    project_name = os.environ['PROJECT_NAME']
setup(name = project_name,
      version = '0.1.0',
      description = 'Link-level simulation of unsourced random access with orthogonal pilots.',
      long_description = """pyura simulates uplink unsourced random access over a
                            many-antenna base station: users pick orthogonal pilots
                            from their own message bits, send a polar-coded QPSK
                            block, and the receiver detects pilots with an energy
                            detector, estimates channels, decodes with a CRC-aided
                            list decoder and cancels decoded users by least squares.
                            It estimates the per-user probability of error with a
                            Monte-Carlo harness and finds the minimum Eb/N0 that
                            reaches a target error rate.
                         """,
      classifiers = [
        'Development Status :: 3 - Alpha',
        'License :: OSI Approved :: MIT License',
        'Programming Language :: Python :: 3',
        'Operating System :: OS Independent',
        'Topic :: Scientific/Engineering',
        'Topic :: Communications'
      ],
      license = 'MIT',
      packages = ['pyura'],
      python_requires = '>=3.7',
      install_requires = ['torch', 'numpy', 'scipy', 'tqdm'],
      extras_require = {'test': ['pytest']},
      entry_points = {'console_scripts': ['pyura = pyura.cli:main']},
      keywords = ['unsourced random access',
                  'massive MIMO',
                  'polar codes',
                  'list decoding',
                  'Monte Carlo simulation',
                  'PyTorch'],
      zip_safe = False)
