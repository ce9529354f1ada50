"""Tiny arithmetic expression compiler for source and coefficient fields.

Supported grammar: ``+ - * /``, unary minus, parentheses, ``sin``, ``cos``,
``exp``, numeric constants, and the declared variable names.  Anything else
is rejected, so configuration files cannot smuggle in arbitrary Python.
"""

from __future__ import annotations

import ast

import numpy as np

_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
}


class CompiledExpression:
    """Callable wrapper evaluating an expression on numpy arrays."""

    def __init__(self, text: str, variables: tuple[str, ...]):
        self.text = text
        self.variables = tuple(variables)
        try:
            tree = ast.parse(text, mode="eval")
        except SyntaxError as exc:
            raise ValueError(f"invalid expression {text!r}: {exc.msg}") from None
        _validate(tree.body, self.variables)
        self._body = tree.body

    def __call__(self, *args):
        if len(args) != len(self.variables):
            raise TypeError(
                f"expression takes {len(self.variables)} arguments, got {len(args)}"
            )
        env = dict(zip(self.variables, (np.asarray(a, dtype=float) for a in args)))
        return _eval(self._body, env)

    def __repr__(self):
        return f"CompiledExpression({self.text!r})"


def _validate(node: ast.AST, variables: tuple[str, ...]) -> None:
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        _validate(node.left, variables)
        _validate(node.right, variables)
    elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        _validate(node.operand, variables)
    elif isinstance(node, ast.Call):
        if not (isinstance(node.func, ast.Name) and node.func.id in _FUNCS):
            raise ValueError(f"unknown function in expression: {ast.dump(node.func)}")
        if len(node.args) != 1 or node.keywords:
            raise ValueError(f"{node.func.id}() takes exactly one positional argument")
        _validate(node.args[0], variables)
    elif isinstance(node, ast.Name):
        if node.id not in variables:
            raise ValueError(
                f"unknown variable {node.id!r}; allowed: {', '.join(variables)}"
            )
    elif isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)):
            raise ValueError(f"non-numeric constant {node.value!r}")
    else:
        raise ValueError(f"unsupported syntax: {type(node).__name__}")


def _eval(node: ast.AST, env: dict):
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.UnaryOp):
        val = _eval(node.operand, env)
        return -val if isinstance(node.op, ast.USub) else +val
    if isinstance(node, ast.Call):
        return _FUNCS[node.func.id](_eval(node.args[0], env))
    if isinstance(node, ast.Name):
        return env[node.id]
    return float(node.value)


def compile_expression(text: str, variables: tuple[str, ...] = ("x1", "x2")) -> CompiledExpression:
    """Compile ``text`` into a vectorized callable of the given variables."""
    return CompiledExpression(text, variables)
