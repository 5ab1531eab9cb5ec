"""
CSV ingestion and export of longitudinal datasets.
"""
