"""Assert-statement generation from test and focal methods."""
__version__ = "0.1.0"
