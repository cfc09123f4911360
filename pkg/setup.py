from setuptools import setup, find_packages
import codecs
import os

here = os.path.abspath(os.path.dirname(__file__))

with codecs.open(os.path.join(here, 'README.md'), encoding='utf-8') as readme_file:
    long_description = readme_file.read()


setup(
    name='nambu_em',
    version='0.1.0',
    description='Nambu EM - spectral Maxwell dynamics from Nambu brackets with a conservation audit.',
    long_description=long_description,
    long_description_content_type='text/markdown',

    license='MIT',
    packages=find_packages(exclude=['tests']),
    package_data={'nambu_em': ['presets/*.json']},

    keywords='nambu bracket, maxwell equations, spectral methods, conservation laws',

    python_requires='>=3.8',
    install_requires=[
        'pandas >= 1.0',
        'matplotlib >= 3.1',
        'numpy >= 1.17',
        'scipy >= 1.9',
        'tqdm >= 4.23.4',
    ],
    entry_points={
        'console_scripts': ['nambu-em=nambu_em.cli.runner:cli'],
    },
)
