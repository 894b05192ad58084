"""
BVS Bench Source Package
"""
