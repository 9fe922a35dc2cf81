"""
Domain factory.

Provides a centralized way to build domain instances by name so that new
convex shapes can be added without touching the solver or the checks.
"""

from typing import Dict, List, Optional, Type

from django.conf import settings

from core.exceptions import KineticException
from .base import BaseDomain
from .slab import Slab
from .unit_ball import UnitBall

# Domain registry - maps shape names to their classes
DOMAIN_REGISTRY: Dict[str, Type[BaseDomain]] = {
    "unit_ball": UnitBall,
    "slab": Slab,
}


def get_domain(shape: Optional[str] = None, **params) -> BaseDomain:
    """
    Get a domain instance.

    Args:
        shape: Registry name ('unit_ball', 'slab', ...). If None, uses
               KINETIC_DEFAULT_DOMAIN from settings
        **params: Shape parameters, e.g. half_width for the slab

    Returns:
        Configured domain instance

    Raises:
        KineticException: If the shape is unknown or its parameters are invalid

    Example:
        >>> domain = get_domain('slab', half_width=1.0)
        >>> domain.exit_time([0.2, 0, 0], [-0.6, 0, 0])
    """
    if shape is None:
        shape = getattr(settings, "KINETIC_DEFAULT_DOMAIN", "slab")

    shape = shape.lower().strip()

    if shape not in DOMAIN_REGISTRY:
        supported = ", ".join(DOMAIN_REGISTRY.keys())
        raise KineticException(
            message=f"Unsupported domain: {shape}. Supported domains: {supported}",
            error_code="unsupported_domain",
        )

    if shape == "slab":
        half_width = float(params.get("half_width", 1.0))
        if not half_width > 0.0:
            raise KineticException(
                message=f"Slab half_width must be > 0, got {half_width}",
                error_code="invalid_input",
            )
        return Slab(half_width=half_width)

    try:
        return DOMAIN_REGISTRY[shape](**params)
    except TypeError as e:
        raise KineticException(
            message=f"Invalid parameters for {shape}: {str(e)}",
            error_code="invalid_input",
        )


def register_domain(name: str, domain_class: Type[BaseDomain]) -> None:
    """
    Register a new domain shape.

    Raises:
        ValueError: If domain_class doesn't inherit from BaseDomain
    """
    if not issubclass(domain_class, BaseDomain):
        raise ValueError(f"{domain_class} must inherit from BaseDomain")

    DOMAIN_REGISTRY[name.lower()] = domain_class


def list_available_domains() -> List[str]:
    return list(DOMAIN_REGISTRY.keys())
