"""
Convex level-set domains.

Usage:
    from geometry.domains import get_domain

    domain = get_domain('slab', half_width=1.0)
    t_b, x_b = domain.exit_time(x, v)
"""

from .base import BaseDomain
from .factory import get_domain, list_available_domains, register_domain

__all__ = ["BaseDomain", "get_domain", "list_available_domains", "register_domain"]
