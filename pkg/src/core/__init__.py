"""
Design views, standardization and sampler initialization.
"""
