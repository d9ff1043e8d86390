"""
User-defined vector fields from component-wise arithmetic expressions.

Grammar: numbers, the coordinates x, y, z, named constants, the operators
+ - * / ^ (or **), parentheses, and the functions sin, cos, exp, sqrt.
The constant pi is predefined. Jacobian and divergence are derived
symbolically.
"""

import io
import logging
import tokenize
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

from ..exceptions import ExpressionError
from .domain import DomainSpec
from .field import SectionSpec, VectorFieldSpec

logger = logging.getLogger(__name__)

COORDINATES = ("x", "y", "z")
FUNCTIONS = {"sin": sp.sin, "cos": sp.cos, "exp": sp.exp, "sqrt": sp.sqrt}
ALLOWED_OPERATORS = {"+", "-", "*", "/", "^", "**", "(", ")"}
TRANSFORMATIONS = standard_transformations + (convert_xor,)


def _check_tokens(text: str, constants: Mapping[str, float], key: Optional[str]) -> None:
    """Reject anything outside the grammar before sympy sees the text."""
    allowed_names = set(COORDINATES) | set(constants) | set(FUNCTIONS) | {"pi"}
    try:
        tokens = list(tokenize.generate_tokens(io.StringIO(text).readline))
    except (tokenize.TokenError, IndentationError) as e:
        raise ExpressionError(str(e), text, 1, len(text) + 1, key) from e

    for tok in tokens:
        line, col = tok.start
        if tok.type in (tokenize.NEWLINE, tokenize.NL, tokenize.ENDMARKER):
            continue
        if tok.type == tokenize.NAME and tok.string not in allowed_names:
            raise ExpressionError(f"unknown name '{tok.string}'", text, line, col + 1, key)
        if tok.type == tokenize.OP and tok.string not in ALLOWED_OPERATORS:
            raise ExpressionError(f"unsupported operator '{tok.string}'", text, line, col + 1, key)
        if tok.type not in (tokenize.NAME, tokenize.NUMBER, tokenize.OP):
            raise ExpressionError(f"unexpected token '{tok.string}'", text, line, col + 1, key)


def parse_component(
    text: str, constants: Mapping[str, float], key: Optional[str] = None
) -> sp.Expr:
    """Parse one component into a sympy expression in x, y, z."""
    if not text or not text.strip():
        raise ExpressionError("empty expression", text or "", 1, 1, key)
    _check_tokens(text, constants, key)

    local_dict: Dict[str, object] = {name: sp.Symbol(name, real=True) for name in COORDINATES}
    local_dict.update(FUNCTIONS)
    local_dict["pi"] = sp.pi
    for name, value in constants.items():
        local_dict[name] = sp.Float(value)

    try:
        expr = parse_expr(
            text, local_dict=local_dict, transformations=TRANSFORMATIONS, evaluate=True
        )
    except SyntaxError as e:
        column = e.offset or 1
        raise ExpressionError(e.msg or "syntax error", text, e.lineno or 1, column, key) from e
    except (TypeError, ValueError, tokenize.TokenError) as e:
        raise ExpressionError(str(e), text, 1, 1, key) from e

    if not isinstance(expr, sp.Expr):
        raise ExpressionError("expression does not evaluate to a number", text, 1, 1, key)
    return expr


def _broadcast(fn):
    """Wrap a lambdified function so constant components broadcast to the input shape."""

    def wrapped(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        value = fn(x[0], x[1], x[2])
        return np.broadcast_to(np.asarray(value, dtype=float), x[0].shape).copy()

    return wrapped


def compile_field(
    components: Sequence[str],
    domain: DomainSpec,
    constants: Optional[Mapping[str, float]] = None,
    name: str = "expression",
    sections: Optional[List[SectionSpec]] = None,
) -> VectorFieldSpec:
    """
    Compile three component expressions into a VectorFieldSpec.

    Raises:
        ExpressionError: with line/column of the offending component text.
    """
    constants = dict(constants or {})
    if len(components) != 3:
        raise ExpressionError(
            f"expected 3 components, got {len(components)}", "", 1, 1, "flow.expressions"
        )

    symbols = [sp.Symbol(name_, real=True) for name_ in COORDINATES]
    exprs = [
        parse_component(text, constants, key=f"flow.expressions.{axis}")
        for text, axis in zip(components, COORDINATES)
    ]

    jac = sp.Matrix(exprs).jacobian(symbols)
    div = sp.simplify(jac.trace())
    logger.debug(f"Compiled field {name}: {exprs}, div = {div}")

    comp_fns = [_broadcast(sp.lambdify(symbols, e, "numpy")) for e in exprs]
    jac_fns = [
        [_broadcast(sp.lambdify(symbols, jac[i, j], "numpy")) for j in range(3)]
        for i in range(3)
    ]
    div_fn = _broadcast(sp.lambdify(symbols, div, "numpy"))

    def field(x: np.ndarray) -> np.ndarray:
        return np.stack([fn(x) for fn in comp_fns])

    def jacobian(x: np.ndarray) -> np.ndarray:
        return np.array([[fn(x) for fn in row] for row in jac_fns], dtype=float)

    return VectorFieldSpec(
        name=name,
        field=field,
        jacobian=jacobian,
        divergence=div_fn,
        domain=domain,
        parameters={"expressions": list(components), **constants},
        sections=sections or [],
    )
