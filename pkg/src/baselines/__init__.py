"""
Comparison policies: unconstrained, penalized and Lagrangian Q-learning, and
the greedy dispatch rule.
"""
