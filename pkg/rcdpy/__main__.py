"""Run the command-line front end with `python -m rcdpy`."""

# Copyright (c) 2024 The rcdpy authors.
#
# This is free software released under the MIT license.  See `LICENSE`
# for details.


import sys

from . import cli


sys.exit(cli.main())
