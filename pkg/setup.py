#!/usr/bin/env python3
"""
Setup Script for BVS Bench
==========================

Checks the environment, installs dependencies and points at the example sweep.
"""

import sys
import subprocess
from pathlib import Path


def print_header():
    print("🚀 BVS Bench - Setup")
    print("=" * 50)
    print()


def check_python_version():
    """Check if Python version is supported"""
    version = sys.version_info
    if version.major < 3 or (version.major == 3 and version.minor < 9):
        print("❌ Error: Python 3.9+ is required")
        print(f"   Current version: {version.major}.{version.minor}.{version.micro}")
        sys.exit(1)

    print(f"✅ Python {version.major}.{version.minor}.{version.micro} detected")


def install_dependencies(with_tests: bool) -> bool:
    """Install required dependencies"""
    print("📦 Installing dependencies...")
    requirements = "requirements-test.txt" if with_tests else "requirements.txt"
    try:
        subprocess.run([sys.executable, '-m', 'pip', 'install', '-r', requirements],
                       check=True, capture_output=True)
    except subprocess.CalledProcessError as e:
        print(f"❌ Error installing dependencies: {e}")
        print(f"   Try running manually: pip install -r {requirements}")
        return False
    print(f"✅ Installed {requirements}")
    return True


def validate_structure() -> bool:
    """Validate project structure"""
    required = ["src/bvs_bench", "configs", "tests", "docs"]
    missing = [path for path in required if not Path(path).exists()]
    if missing:
        print(f"❌ Missing directories: {', '.join(missing)}")
        return False
    print("✅ Project structure validated")
    return True


def show_next_steps():
    print()
    print("🎯 Setup Complete! Next Steps:")
    print()
    print("1. Run the example sweep:")
    print("   python run.py sweep --config configs/example_sweep.yaml --out output/example")
    print()
    print("2. Run tests:")
    print("   pytest -m 'not slow'")
    print()
    print("📚 Documentation:")
    print("   docs/ARCHITECTURE.md  - Module layout and data flow")
    print("   docs/FILE_FORMATS.md  - Event, AOP, image and report formats")
    print()


def main():
    print_header()
    check_python_version()
    if not validate_structure():
        print("❌ Setup failed: Invalid project structure")
        sys.exit(1)
    if not install_dependencies(with_tests="--dev" in sys.argv):
        sys.exit(1)
    print()
    print("🎉 Setup completed successfully!")
    show_next_steps()


if __name__ == "__main__":
    main()
