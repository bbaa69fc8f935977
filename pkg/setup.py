"""rcdpy package definition and install configuration"""

# Copyright (c) 2024 The rcdpy authors.
#
# This is free software released under the MIT license.  See `LICENSE`
# for details.


import setuptools

import rcdpy


# Extract the short and long descriptions from the documentation
_desc_paragraphs = rcdpy.__doc__.strip().split('\n\n')
# Make sure to keep the short description to a single line
_desc_short = _desc_paragraphs[0].replace('\n', ' ')
# The long description leaves out the copyright and license paragraphs
_desc_long = '\n\n'.join(_desc_paragraphs[1:-2])


# Define package attributes
setuptools.setup(

    # Basics
    name='rcdpy',
    version=rcdpy.__version__,
    license='MIT',
    author='The rcdpy authors',

    # Description
    description=_desc_short,
    long_description=_desc_long,
    keywords=[
        'coordinate descent',
        'convex optimization',
        'lasso',
        'sparse classification',
    ],
    classifiers=[
        'Development Status :: 4 - Beta',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Natural Language :: English',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3 :: Only',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],

    # Requirements
    python_requires='>=3.10', # `X | Y` type unions
    install_requires=[
        'numpy',
        'scipy',
    ],
    extras_require={
        'test': ['pytest'],
    },

    # API
    packages=setuptools.find_packages(),
    entry_points={
        'console_scripts': ['rcdpy = rcdpy.cli:main'],
    },

)
