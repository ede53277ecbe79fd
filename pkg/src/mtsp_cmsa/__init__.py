"""mTSP CMSA - min-max multiple traveling salesman solver"""

__version__ = "0.1.0"
