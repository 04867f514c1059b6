# optomech/__init__.py
"""
Truncated-Fock-space simulator for driven-dissipative cavity optomechanics.
"""

__version__ = "1.0.0"
