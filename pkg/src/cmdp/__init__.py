"""
Constrained MDP core: models, seeded streams, simulation and the brute-force oracle
"""
