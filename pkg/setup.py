from setuptools import setup, find_packages

setup(
    name='beaconlab',
    version='0.1.0',
    packages=find_packages(exclude=['tests']),
    install_requires=[
          'pandas==2.2.0',
          'numpy==1.26.3',
          'scipy==1.11.4',
          'tqdm==4.66.1',
      ],
    extras_require={
        'test': ['pytest>=7.4'],
    },
    entry_points={
        'console_scripts': ['beacon-lab=beaconlab.cli:main'],
    },

    # Additional metadata about your package.
    description='Simulations and exact checks for blockchain-based randomness beacons.',
    python_requires='>=3.9',
)
