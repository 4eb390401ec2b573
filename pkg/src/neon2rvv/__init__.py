"""NEON to RVV intrinsic translation with a differentially tested recipe database."""

from .errors import Neon2RvvError
from .isa_model import (
    ElementClass,
    ElementType,
    NeonVectorType,
    RvvVectorType,
    VlenConfig,
    map_type,
    mapping_records,
)
from .neon_oracle import NeonIntrinsicId, catalog, eval_neon
from .recipe_engine import Recipe, Tier, instantiate, lookup
from .rvv_machine import RvvMachine, RvvProgram, exec_program
from .values import VectorValue

__all__ = [
    "ElementClass", "ElementType", "NeonIntrinsicId", "NeonVectorType", "Neon2RvvError",
    "Recipe", "RvvMachine", "RvvProgram", "RvvVectorType", "Tier", "VectorValue", "VlenConfig",
    "catalog", "eval_neon", "exec_program", "instantiate", "lookup", "map_type", "mapping_records",
]
