"""
Bidshare: two-phase Q-learning for constrained vehicle sharing
"""
