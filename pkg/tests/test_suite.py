#!/usr/bin/env python3
"""
Consolidated test suite for the optomechanics simulator.
Collects the test cases of every module; slow acceptance checks are included
but skip themselves unless OPTOMECH_RUN_SLOW=1.
"""

import os
import sys
import unittest

# Add the project root to Python path
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, project_root)

from tests import (
    test_acceptance,
    test_analysis,
    test_cli,
    test_config,
    test_experiments,
    test_fock,
    test_hamiltonians,
    test_lindblad,
    test_models,
    test_protocols,
    test_states,
)

MODULES = (
    # Numerical core
    test_fock,
    test_states,
    test_hamiltonians,
    test_lindblad,
    test_analysis,
    test_protocols,
    # Configuration, experiments and command line
    test_config,
    test_models,
    test_experiments,
    test_cli,
    test_acceptance,
)


def select_modules(names=None):
    """Modules whose short name (``fock``, ``protocols``, ...) is in ``names``; all when empty."""
    if not names:
        return MODULES
    wanted = {name if name.startswith("test_") else f"test_{name}" for name in names}
    unknown = wanted - {module.__name__.rsplit(".", 1)[-1] for module in MODULES}
    if unknown:
        raise ValueError(f"unknown test modules: {', '.join(sorted(unknown))}")
    return tuple(module for module in MODULES if module.__name__.rsplit(".", 1)[-1] in wanted)


def create_test_suite(modules=MODULES):
    """Create and return a test suite with the test cases of ``modules``."""
    suite = unittest.TestSuite()
    loader = unittest.defaultTestLoader
    for module in modules:
        for name in dir(module):
            case = getattr(module, name)
            if isinstance(case, type) and issubclass(case, unittest.TestCase) and case.__module__ == module.__name__:
                suite.addTest(loader.loadTestsFromTestCase(case))
    return suite


def run_tests(names=None, verbosity=2):
    """Run the selected test modules and return whether they passed."""
    print("Running optomech Test Suite")
    print("=" * 50)

    runner = unittest.TextTestRunner(verbosity=verbosity)
    result = runner.run(create_test_suite(select_modules(names)))

    print("\n" + "=" * 50)
    print("Test Summary:")
    print(f"Tests Run: {result.testsRun}")
    print(f"Failures: {len(result.failures)}")
    print(f"Errors: {len(result.errors)}")
    print(f"Skipped: {len(result.skipped)}")
    print(f"Success: {result.wasSuccessful()}")

    return result.wasSuccessful()


if __name__ == "__main__":
    success = run_tests()
    sys.exit(0 if success else 1)
