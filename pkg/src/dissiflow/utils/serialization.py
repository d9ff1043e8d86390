"""
Conversion of analysis records into strict JSON values.
"""

import math
from enum import Enum
from typing import Any

import numpy as np
from pydantic import BaseModel

SCHEMA_VERSION = "1.0"


def _float(value: float) -> Any:
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def to_jsonable(obj: Any) -> Any:
    """Recursively convert numpy arrays, complex numbers, enums and models."""
    if isinstance(obj, BaseModel):
        return to_jsonable({k: getattr(obj, k) for k in type(obj).model_fields})
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _float(float(obj.real)), "im": _float(float(obj.imag))}
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    return obj


def matrix_rows(matrix: np.ndarray) -> list:
    """Row-major nested list of a matrix."""
    return [[_float(float(v)) for v in row] for row in np.asarray(matrix)]
