#!/usr/bin/env python3
"""
Installation checker for affinedim
Run this script to verify all dependencies are correctly installed
"""

import sys


def check_package(package_name, import_name=None):
    """Check if a package is installed and can be imported"""
    if import_name is None:
        import_name = package_name

    print(f"Checking {package_name}...", end=" ")

    try:
        module = __import__(import_name)
        print(f"✅ OK ({getattr(module, '__version__', 'unknown version')})")
        return True
    except ImportError as e:
        print(f"❌ FAILED - {e}")
        return False


def check_toml_reader():
    """Spec files need tomllib (Python 3.11+) or the tomli backport"""
    print("Checking TOML reader...", end=" ")
    try:
        import tomllib  # noqa: F401
        print("✅ OK (tomllib)")
        return True
    except ImportError:
        pass
    try:
        import tomli  # noqa: F401
        print("✅ OK (tomli)")
        return True
    except ImportError:
        print("❌ FAILED - install tomli on Python < 3.11")
        return False


def check_numerics():
    """Smoke-test the library on two similarities of ratio 1/3"""
    print("Checking affinedim numerics...", end=" ")
    try:
        import math
        from src.ifs import AffineIFS
        from src.spectrum import exponents_exact_diagonal, lyapunov_dimension
        from src.symbolic_measure import MeasureSpec, entropy

        ifs = AffineIFS.from_matrices([[[1 / 3]], [[1 / 3]]], [[-1 / 3], [1 / 3]])
        mu = MeasureSpec.bernoulli([0.5, 0.5])
        value = lyapunov_dimension(entropy(mu).value, exponents_exact_diagonal(ifs, mu)).value
        if abs(value - math.log(2) / math.log(3)) > 1e-12:
            print(f"❌ FAILED - got {value}")
            return False
        print("✅ OK")
        return True
    except Exception as e:
        print(f"❌ FAILED - {e}")
        return False


def main():
    print("🔍 affinedim Installation Checker")
    print("=" * 40)

    all_good = True

    # Check core dependencies
    dependencies = [
        ("click", "click"),
        ("numpy", "numpy"),
        ("pandas", "pandas"),
        ("scipy", "scipy"),
    ]

    for package_name, import_name in dependencies:
        if not check_package(package_name, import_name):
            all_good = False

    if not check_toml_reader():
        all_good = False

    if all_good and not check_numerics():
        all_good = False

    # Check optional development dependencies
    print("\nOptional dependencies:")
    dev_deps = [
        ("pytest", "pytest"),
        ("hypothesis", "hypothesis"),
        ("mpmath", "mpmath"),
    ]

    for package_name, import_name in dev_deps:
        check_package(package_name, import_name)

    print("\n" + "=" * 40)

    if all_good:
        print("🎉 All core dependencies are correctly installed!")
        print("You can now run: affinedim --help")
    else:
        print("❌ Some dependencies are missing or incorrect.")
        print("Please install missing packages and run this check again.")

    return 0 if all_good else 1


if __name__ == "__main__":
    sys.exit(main())
