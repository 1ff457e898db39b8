# This file makes the 'execution' directory a Python package.
