"""
Gibbs engine: the sampler loop, chain persistence, diagnostics, the
sampler-correctness harness and the multi-chain runner.
"""
