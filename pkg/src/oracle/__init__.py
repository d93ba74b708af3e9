"""
Exact two-phase dynamic programming on explicit CMDPs
"""
