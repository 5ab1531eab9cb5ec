"""
Label-switching-robust summaries of a chain: posterior similarity, PAM
representative clustering, pooled cluster parameters and report writers.
"""
