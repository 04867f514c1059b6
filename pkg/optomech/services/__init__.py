# services/__init__.py - Domain services
"""
State constructors, Hamiltonian builders, master-equation dynamics, protocols
and diagnostics.
"""
