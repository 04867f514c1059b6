# core/__init__.py - Core primitives
"""
Fock-space linear algebra, error types and timing utilities.
"""
