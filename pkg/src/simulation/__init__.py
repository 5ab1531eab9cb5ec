"""
Simulation harness: B-spline bases, scenario generation, benchmark
clusterings, evaluation metrics and replication studies.
"""
