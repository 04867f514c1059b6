"""
Test package for the optomech simulator.
"""
