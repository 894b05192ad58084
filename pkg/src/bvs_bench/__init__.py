"""
BVS Bench - simulator and benchmark harness for brain-inspired vision sensors

Event cameras (EVS) and primitive-based TD/SD sensors are simulated against a rotating
turntable scene with analytic ground truth, then scored on calibration, structural
quality, corner detection and rotational motion estimation.
"""

__version__ = "1.0.0"
__author__ = "BVS Bench Contributors"
