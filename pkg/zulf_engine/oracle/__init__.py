# This file makes the 'oracle' directory a Python package.
