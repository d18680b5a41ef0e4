"""Closed-form expressions in ``t`` for shift exponents.

The accepted language is deliberately small: numbers, ``t``, ``pi``, ``e``,
the operators ``+ - * / **`` and the functions ``sin cos tan exp log sqrt
abs arctan tanh``.  Strings are screened with :mod:`ast` before anything is
handed to sympy, which then supplies the exact derivative.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass
from typing import Callable

import numpy as np
import sympy as sp

__all__ = ["ExpressionError", "Expression", "parse_expression"]

_FUNCS = {
    "sin": sp.sin,
    "cos": sp.cos,
    "tan": sp.tan,
    "exp": sp.exp,
    "log": sp.log,
    "sqrt": sp.sqrt,
    "abs": sp.Abs,
    "arctan": sp.atan,
    "atan": sp.atan,
    "tanh": sp.tanh,
}
_CONSTS = {"pi": sp.pi, "e": sp.E}
_T = sp.Symbol("t", positive=True)

_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)


class ExpressionError(ValueError):
    pass


def _convert(node):
    if isinstance(node, ast.Expression):
        return _convert(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        return sp.nsimplify(node.value) if isinstance(node.value, int) else sp.Float(node.value)
    if isinstance(node, ast.Name):
        if node.id == "t":
            return _T
        if node.id in _CONSTS:
            return _CONSTS[node.id]
        raise ExpressionError(f"unknown name {node.id!r}")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
        arg = _convert(node.operand)
        return -arg if isinstance(node.op, ast.USub) else arg
    if isinstance(node, ast.BinOp) and isinstance(node.op, _BINOPS):
        lhs, rhs = _convert(node.left), _convert(node.right)
        op = node.op
        if isinstance(op, ast.Add):
            return lhs + rhs
        if isinstance(op, ast.Sub):
            return lhs - rhs
        if isinstance(op, ast.Mult):
            return lhs * rhs
        if isinstance(op, ast.Div):
            return lhs / rhs
        return lhs ** rhs
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        if node.keywords or len(node.args) != 1:
            raise ExpressionError(f"{node.func.id}() takes exactly one argument")
        if node.func.id not in _FUNCS:
            raise ExpressionError(f"unknown function {node.func.id!r}")
        return _FUNCS[node.func.id](_convert(node.args[0]))
    raise ExpressionError(f"unsupported syntax: {ast.dump(node)[:60]}")


@dataclass(frozen=True)
class Expression:
    source: str
    sym: sp.Expr
    func: Callable
    derivative: Callable

    @property
    def is_constant(self) -> bool:
        return _T not in self.sym.free_symbols

    def __call__(self, t):
        return _broadcast(self.func, t)

    def diff(self, t):
        return _broadcast(self.derivative, t)


def _broadcast(f, t):
    t = np.asarray(t, dtype=float)
    out = np.asarray(f(t), dtype=float)
    if out.shape != t.shape:
        out = np.broadcast_to(out, t.shape).copy()
    return out[()] if out.ndim == 0 else out


def parse_expression(source: str) -> Expression:
    """Parse ``source`` into a vectorized function of ``t`` and its derivative.

    >>> w = parse_expression("0.5*sin(log(1 + log(t)**2))")
    >>> float(w(1.0))
    0.0
    """
    if not isinstance(source, str) or not source.strip():
        raise ExpressionError("expression must be a non-empty string")
    try:
        tree = ast.parse(source.strip(), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {source!r}: {exc.msg}") from None
    sym = _convert(tree)
    dsym = sp.diff(sym, _T)
    func = sp.lambdify(_T, sym, modules="numpy")
    dfunc = sp.lambdify(_T, dsym, modules="numpy")
    return Expression(source=source, sym=sym, func=func, derivative=dfunc)
