# This file makes the 'zulf_engine' directory a Python package.
