"""
Test Package for BVS Bench
==========================

Unit and end-to-end tests for the simulator, analysis modules and sweep harness.
"""
