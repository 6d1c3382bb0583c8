#!/usr/bin/env python

from setuptools import setup

setup(
    name='django-selgen',
    version='0.1.0',
    description='Answer-aware question generation with a joint sentence '
                'selector, packaged as a Django app',
    packages=[
        'selgen', 'selgen.migrations', 'selgen.management',
        'selgen.management.commands'],
    package_data={'selgen': ['fixtures/*']},
    install_requires=[
        'Django>=3.2',
        'django-extensions',
        'nltk',
        'numpy',
        'torch',
        'tqdm'],
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Environment :: Console',
        'Framework :: Django',
        'Intended Audience :: Science/Research',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Artificial Intelligence'],
)
