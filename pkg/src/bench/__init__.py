"""
Experiment plans, seeded training/evaluation runs and comparison tables
"""
