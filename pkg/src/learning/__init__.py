"""
Sampling-based two-phase Q-learning (synchronous and asynchronous)
"""
