"""
Cross-cutting helpers shared by the kinetic apps.

Holds the exception family, counter-based random streams and the
fixed-order reductions every module relies on for reproducibility.
"""
