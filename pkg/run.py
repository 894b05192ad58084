#!/usr/bin/env python3
"""
BVS Bench - Main Entry Point

Simulates event and primitive-pathway vision sensors against a rotating turntable and
scores them across a speed sweep.

Usage:
    python run.py sweep --config configs/example_sweep.yaml --out output/run
    python run.py plot --report output/run/report.csv

Requirements:
    - Packages from requirements.txt
"""

import sys
import os

# Add src directory to Python path to enable imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

try:
    from bvs_bench.main import main
except ImportError as e:
    print(f"Error importing required modules: {e}")
    print("Please ensure all dependencies are installed:")
    print("pip install -r requirements.txt")
    sys.exit(1)

if __name__ == "__main__":
    sys.exit(main())
