"""byzantine-secretary: simulator for the secretary problem with adversarially timed elements."""

__version__ = "0.1.0"

from byzantine_secretary import (
    adversaries,
    harness,
    matroids,
    model,
    multi_select,
    single_item,
    subroutines,
)

__all__ = ["model", "subroutines", "single_item", "multi_select", "matroids", "adversaries", "harness"]
