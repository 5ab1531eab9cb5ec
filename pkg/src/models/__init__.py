"""
Data models: dataset, specification, sampler state, errors and run logs.
"""
