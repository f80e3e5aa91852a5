import os
from setuptools import setup


def read_file(filename):
    return open(os.path.join(os.path.dirname(__file__), filename), encoding='utf-8').read()


setup(name='flagmixvol',
      version='0.1.0',
      description='Mixed volumes of convex bodies through flag measures and Monte Carlo integration',
      long_description=read_file('ReadMe.md'),
      long_description_content_type='text/markdown',
      license='MIT',
      keywords='mixed volume flag measure convex geometry monte carlo',
      packages=['flagmixvol', 'tests'],
      install_requires=['bitarray', 'numpy>=1.22', 'scipy'],
      classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Programming Language :: Python :: 3.8",
        "License :: OSI Approved :: MIT License",
      ],
      )
