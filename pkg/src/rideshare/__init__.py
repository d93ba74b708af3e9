"""
Bidding-based vehicle-sharing environment: demand, bid ranking, dispatch
decisions, fleet dynamics and the explicit-model exporter.
"""
