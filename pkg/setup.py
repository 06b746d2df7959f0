from setuptools import setup
from scripts.release import read_version

version = read_version('version.txt')


def readme():
    with open('README.md') as f:
        return f.read()


setup(
    name='sparsekit',
    packages=['sparsekit'],
    version=version,
    description='Sparse recovery by dual density reweighted l1 minimization',
    long_description=readme(),
    long_description_content_type='text/markdown',
    license='MIT',
    python_requires='>=3.8',
    install_requires=[
        'numpy>=1.19',
        'scipy>=1.6',
        'pandas>=1.2',
        'matplotlib>=3.3',
    ],
    extras_require={
        'test': ['pytest', 'pytest-cov', 'pytest-env'],
        'release': ['semver>=2.10'],
    },
    entry_points={
        'console_scripts': ['sparsekit=sparsekit._cli:main'],
    },
    keywords=['sparse-recovery', 'compressed-sensing', 'reweighted-l1',
              'second-order-cone-programming'],
    classifiers=[],
)
