# This file makes the 'data' directory a Python package.
