"""Coefficient expressions: a small immutable tree, an evaluator and a printer.

Nodes compare structurally, so a printed and re-parsed expression is equal to
the original.  Leg symbols evaluate to the first component of the leg's
momentum; a ``sum(p, body)`` node runs its dummy over the first-axis cutoff
window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class PoleError(ArithmeticError):
    """Division by zero inside a coefficient."""


class DomainError(ArithmeticError):
    """Square root of a negative number."""


@dataclass(frozen=True)
class Num:
    value: float

    def __post_init__(self):
        v = float(self.value)
        if not math.isfinite(v) or v < 0:
            raise ValueError(f'numeric literal must be finite and non-negative, got {v}')
        object.__setattr__(self, 'value', v)


@dataclass(frozen=True)
class Sym:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


@dataclass(frozen=True)
class Sum:
    dummy: str
    body: object


CONSTANTS = {'pi': math.pi}
BUILTIN_ARITY = {'sqrt': (1,), 'omega': (1, 2)}


def default_functions():
    """Pluggable named functions; the spinor contractions default to 1."""
    one = lambda *args: 1.0  # noqa: E731
    return {'ubar_u': one, 'ubar_v': one, 'vbar_u': one, 'vbar_v': one}


def evaluate(expr, env, params, window=None, functions=None):
    """Evaluate ``expr``.  ``env`` binds leg symbols, ``params`` model
    parameters, ``window`` is the (lo, hi) range of bounded sums."""
    functions = functions if functions is not None else default_functions()

    def ev(node, scope):
        if isinstance(node, Num):
            return node.value
        if isinstance(node, Sym):
            name = node.name
            if name in scope:
                return scope[name]
            if name in params:
                return params[name]
            if name in CONSTANTS:
                return CONSTANTS[name]
            raise KeyError(f'unbound symbol {name!r}')
        if isinstance(node, Neg):
            return -ev(node.operand, scope)
        if isinstance(node, BinOp):
            a = ev(node.left, scope)
            b = ev(node.right, scope)
            if node.op == '+':
                return a + b
            if node.op == '-':
                return a - b
            if node.op == '*':
                return a * b
            if b == 0:
                raise PoleError('division by zero')
            return a / b
        if isinstance(node, Pow):
            base = ev(node.base, scope)
            if base == 0 and node.exponent < 0:
                raise PoleError('zero raised to a negative power')
            return base ** node.exponent
        if isinstance(node, Call):
            args = [ev(a, scope) for a in node.args]
            if node.func == 'sqrt':
                if args[0] < 0:
                    raise DomainError(f'sqrt of {args[0]}')
                return math.sqrt(args[0])
            if node.func == 'omega':
                mass = args[1] if len(args) > 1 else params.get('m', 0.0)
                return math.sqrt(mass * mass + args[0] * args[0])
            return float(functions[node.func](*args))
        if isinstance(node, Sum):
            if window is None:
                raise ValueError('bounded sum needs a cutoff window')
            lo, hi = window
            inner = dict(scope)
            terms = []
            for p in range(lo, hi + 1):
                inner[node.dummy] = p
                terms.append(ev(node.body, inner))
            return math.fsum(terms)
        raise TypeError(f'not an expression node: {node!r}')

    return ev(expr, dict(env))


def free_symbols(expr, bound=frozenset()):
    """Names used but not bound by an enclosing sum."""
    if isinstance(expr, Sym):
        return set() if expr.name in bound else {expr.name}
    if isinstance(expr, Num):
        return set()
    if isinstance(expr, Neg):
        return free_symbols(expr.operand, bound)
    if isinstance(expr, BinOp):
        return free_symbols(expr.left, bound) | free_symbols(expr.right, bound)
    if isinstance(expr, Pow):
        return free_symbols(expr.base, bound)
    if isinstance(expr, Call):
        out = set()
        for a in expr.args:
            out |= free_symbols(a, bound)
        return out
    if isinstance(expr, Sum):
        return free_symbols(expr.body, bound | {expr.dummy})
    raise TypeError(f'not an expression node: {expr!r}')


_PREC = {'+': 1, '-': 1, '*': 2, '/': 2}


def _prec(node):
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    if isinstance(node, Pow):
        return 4
    return 5


def to_text(node):
    """Print with the fewest parentheses that still re-parse to ``node``."""
    if isinstance(node, Num):
        v = node.value
        if float(v).is_integer() and abs(v) < 1e15:
            return str(int(v))
        return repr(v)
    if isinstance(node, Sym):
        return node.name
    if isinstance(node, Neg):
        inner = to_text(node.operand)
        return '-' + (f'({inner})' if _prec(node.operand) < 3 else inner)
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        left = to_text(node.left)
        right = to_text(node.right)
        if _prec(node.left) < p:
            left = f'({left})'
        if _prec(node.right) <= p:
            right = f'({right})'
        return f'{left} {node.op} {right}'
    if isinstance(node, Pow):
        base = to_text(node.base)
        if _prec(node.base) < 5:
            base = f'({base})'
        return f'{base}^{node.exponent}'
    if isinstance(node, Call):
        return f'{node.func}(' + ', '.join(to_text(a) for a in node.args) + ')'
    if isinstance(node, Sum):
        return f'sum({node.dummy}, {to_text(node.body)})'
    raise TypeError(f'not an expression node: {node!r}')
