"""Equation ASTs: decoding from configuration indices, text I/O, simplification
and vectorised evaluation.

Text format: binary arithmetic is written infix and fully parenthesised,
``pow`` and unary functions use call syntax, fitting parameters are ``p0``,
``p1``, ... and numeric literals are Python float reprs, e.g.
``sin((p0 * x))`` or ``pow((x + 1.0), p1)``.
"""

from __future__ import annotations

import ast
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence, Union

import numpy as np

from srurgs.enumeration import BinaryNode, Leaf, UnaryNode, arrangements, node_counts, tree_from_index
from srurgs.errors import ConfigurationError, ExpressionSyntaxError, NonFiniteEvaluation, SchemaError
from srurgs.space import ARITY, SearchSpaceConfig


@dataclass(frozen=True, slots=True)
class Var:
    name: str


@dataclass(frozen=True, slots=True)
class Param:
    index: int


@dataclass(frozen=True, slots=True)
class Const:
    value: float


@dataclass(frozen=True, slots=True)
class Func:
    name: str
    args: tuple

    def __post_init__(self):
        if ARITY.get(self.name) != len(self.args):
            raise ValueError(f"{self.name} takes {ARITY.get(self.name)} argument(s), got {len(self.args)}")


Expr = Union[Var, Param, Const, Func]


class EquationIndex(NamedTuple):
    """(tree, unary configuration, binary configuration, terminal configuration)."""

    i: int
    q: int
    r: int
    s: int


def add(a, b):
    return Func("add", (a, b))


def sub(a, b):
    return Func("sub", (a, b))


def mul(a, b):
    return Func("mul", (a, b))


def div(a, b):
    return Func("div", (a, b))


def power(a, b):
    return Func("pow", (a, b))


# ---------------------------------------------------------------------------
# traversal helpers


def iter_nodes(e: Expr) -> Iterator[Expr]:
    """Pre-order walk."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Func):
            stack.extend(reversed(node.args))


def parameter_indices(e: Expr) -> list[int]:
    """Distinct parameter ordinals in order of first (pre-order) appearance."""
    seen: dict[int, None] = {}
    for node in iter_nodes(e):
        if isinstance(node, Param):
            seen.setdefault(node.index, None)
    return list(seen)


def num_parameters(e: Expr) -> int:
    """Length of the parameter vector ``e`` needs (max ordinal + 1)."""
    indices = parameter_indices(e)
    return max(indices) + 1 if indices else 0


def variable_names(e: Expr) -> set[str]:
    return {node.name for node in iter_nodes(e) if isinstance(node, Var)}


def has_variable(e: Expr) -> bool:
    return any(isinstance(node, Var) for node in iter_nodes(e))


def height(e: Expr) -> int:
    if isinstance(e, Func):
        return 1 + max(height(a) for a in e.args)
    return 0


def size(e: Expr) -> int:
    return sum(1 for _ in iter_nodes(e))


def substitute_params(e: Expr, values: Sequence[Expr]) -> Expr:
    """Replace every ``Param(k)`` by ``values[k]``."""
    if isinstance(e, Param):
        return values[e.index]
    if isinstance(e, Func):
        return Func(e.name, tuple(substitute_params(a, values) for a in e.args))
    return e


# ---------------------------------------------------------------------------
# configuration decoding


def decode_configuration(index: int, num_choices: int, num_slots: int) -> list[int]:
    """The ``index``-th tuple of ``itertools.product(range(num_choices), repeat=num_slots)``.

    Fixed-radix digit extraction, most significant slot first.
    """
    if num_slots < 0:
        raise ValueError("num_slots must be non-negative")
    total = num_choices**num_slots
    if not 0 <= index < total:
        raise IndexError(f"configuration index {index} outside [0, {total})")
    digits = [0] * num_slots
    for pos in range(num_slots - 1, -1, -1):
        index, digits[pos] = divmod(index, num_choices)
    return digits


def _terminal(name: str) -> Expr:
    if name[0] == "p" and name[1:].isdigit():
        return Param(int(name[1:]))
    return Var(name)


def build_expression(idx: EquationIndex, space: SearchSpaceConfig) -> Expr:
    """Materialise the equation named by ``idx``.

    Slots are filled in pre-order (node, then left, then right): unary nodes
    consume digits of ``q``, binary nodes digits of ``r`` and leaves digits
    of ``s``.
    """
    i, q, r, s = idx
    if not 0 <= i < space.N:
        raise IndexError(f"tree index {i} outside [0, {space.N})")
    G, A, B = arrangements(i, space)
    for name, value, bound in (("q", q, G), ("r", r, A), ("s", s, B)):
        if not 0 <= value < bound:
            raise IndexError(f"{name}={value} outside [0, {bound}) for tree {i}")
    l, k, j = node_counts(i, space.mode)
    unary = iter(decode_configuration(q, space.f, l))
    binary = iter(decode_configuration(r, space.n, k))
    terminals = iter(decode_configuration(s, space.m, j))
    term_nodes = [_terminal(t) for t in space.terminals]

    def fill(shape) -> Expr:
        if isinstance(shape, Leaf):
            return term_nodes[next(terminals)]
        if isinstance(shape, UnaryNode):
            name = space.unary_funcs[next(unary)]
            return Func(name, (fill(shape.child),))
        name = space.binary_funcs[next(binary)]
        left = fill(shape.left)
        return Func(name, (left, fill(shape.right)))

    return fill(tree_from_index(i, space.mode))


# ---------------------------------------------------------------------------
# text format

_INFIX = {"add": "+", "sub": "-", "mul": "*", "div": "/"}


def to_string(e: Expr, anonymous_params: bool = False) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Param):
        return "p" if anonymous_params else f"p{e.index}"
    if isinstance(e, Const):
        return repr(float(e.value))
    args = [to_string(a, anonymous_params) for a in e.args]
    if e.name in _INFIX:
        return f"({args[0]} {_INFIX[e.name]} {args[1]})"
    return f"{e.name}({', '.join(args)})"


_AST_BINOPS = {
    ast.Add: "add",
    ast.Sub: "sub",
    ast.Mult: "mul",
    ast.Div: "div",
    ast.Pow: "pow",
    ast.BitXor: "pow",
}


def parse(text: str) -> Expr:
    """Parse equation text; accepts ``^``/``**`` as well as ``pow(a, b)``."""
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ExpressionSyntaxError(f"malformed expression: {exc.msg}", exc.offset) from None
    return _from_ast(tree.body)


def _from_ast(node) -> Expr:
    pos = getattr(node, "col_offset", None)
    if isinstance(node, ast.BinOp) and type(node.op) in _AST_BINOPS:
        return Func(_AST_BINOPS[type(node.op)], (_from_ast(node.left), _from_ast(node.right)))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        operand = _from_ast(node.operand)
        if isinstance(node.op, ast.UAdd):
            return operand
        if isinstance(operand, Const):
            return Const(-operand.value)
        return sub(Const(0.0), operand)
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in ARITY:
            raise ExpressionSyntaxError("unknown function", pos)
        if node.keywords:
            raise ExpressionSyntaxError("keyword arguments are not allowed", pos)
        name = node.func.id
        if len(node.args) != ARITY[name]:
            raise ExpressionSyntaxError(f"{name} takes {ARITY[name]} argument(s)", pos)
        return Func(name, tuple(_from_ast(a) for a in node.args))
    if isinstance(node, ast.Name):
        if node.id in ARITY:
            raise ExpressionSyntaxError(f"function {node.id} used as a value", pos)
        return _terminal(node.id)
    if isinstance(node, ast.Constant) and type(node.value) in (int, float):
        return Const(float(node.value))
    raise ExpressionSyntaxError(f"unsupported syntax {type(node).__name__}", pos)


# ---------------------------------------------------------------------------
# simplification

_NP_FUNCS = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
    "div": np.divide,
    "pow": np.power,
    "exp": np.exp,
    "sin": np.sin,
    "sinh": np.sinh,
}

_MAX_PASSES = 10


def _fold(name: str, values: Sequence[float]) -> float | None:
    with np.errstate(all="ignore"):
        out = _NP_FUNCS[name](*(np.float64(v) for v in values))
    out = float(out) + 0.0  # drops negative zero
    return out if math.isfinite(out) else None


def _order_key(e: Expr) -> tuple[str, str]:
    return to_string(e, anonymous_params=True), to_string(e)


class _Pass:
    """One bottom-up rewrite sweep.

    Every parameter leaf in the output refers to an entry of ``defs``, an
    expression over the *input* parameters giving that leaf's value. Plain
    parameters map to themselves; collapsed parameter-only groups get a fresh
    entry. A group is only collapsed when none of its parameters is used
    outside it, so the number of free parameters never grows.
    """

    def __init__(self, e: Expr):
        self.defs: list[Expr] = []
        self._alias: dict[int, int] = {}
        self._source: list = []  # input index (kept) or Counter of covered inputs (fresh)
        self._uses = Counter(n.index for n in iter_nodes(e) if isinstance(n, Param))

    def keep(self, k: int) -> Param:
        if k not in self._alias:
            self._alias[k] = len(self.defs)
            self.defs.append(Param(k))
            self._source.append(k)
        return Param(self._alias[k])

    def collapsible(self, leaves) -> bool:
        covered: Counter = Counter()
        for leaf in leaves:
            src = self._source[leaf.index]
            if isinstance(src, Counter):
                covered.update(src)
            else:
                covered[src] += 1
        return all(self._uses[k] == n for k, n in covered.items())

    def fresh(self, value: Expr) -> Param:
        covered: Counter = Counter()
        for leaf in iter_nodes(value):
            if isinstance(leaf, Param):
                src = self._source[leaf.index]
                if isinstance(src, Counter):
                    covered.update(src)
                else:
                    covered[src] += 1
        self.defs.append(substitute_params(value, self.defs))
        self._source.append(covered)
        return Param(len(self.defs) - 1)

    def run(self, e: Expr) -> Expr:
        if isinstance(e, Var):
            return e
        if isinstance(e, Const):
            return e
        if isinstance(e, Param):
            return self.keep(e.index)
        node = Func(e.name, tuple(self.run(a) for a in e.args))
        if not has_variable(node):
            if all(isinstance(a, Const) for a in node.args):
                value = _fold(node.name, [a.value for a in node.args])
                return node if value is None else Const(value)
            leaves = [n for n in iter_nodes(node) if isinstance(n, Param)]
            if leaves and self.collapsible(leaves):
                return self.fresh(node)
            return node
        if node.name in ("add", "sub"):
            return self._additive(node)
        if node.name in ("mul", "div"):
            return self._multiplicative(node)
        if node.name == "pow":
            return self._power(node)
        return node

    def _additive(self, node: Func) -> Expr:
        terms: list[tuple[int, Expr]] = []

        def flatten(e, sign):
            if isinstance(e, Func) and e.name == "add":
                flatten(e.args[0], sign)
                flatten(e.args[1], sign)
            elif isinstance(e, Func) and e.name == "sub":
                flatten(e.args[0], sign)
                flatten(e.args[1], -sign)
            else:
                terms.append((sign, e))

        flatten(node, 1)
        const = 0.0
        params: list[tuple[int, Expr]] = []
        pos: list[Expr] = []
        neg: list[Expr] = []
        for sign, t in terms:
            if isinstance(t, Const):
                const += sign * t.value
            elif isinstance(t, Param):
                params.append((sign, t))
            else:
                (pos if sign > 0 else neg).append(t)
        if not math.isfinite(const):
            return node
        if params and not self.collapsible([p for _, p in params]):
            for sign, p in params:
                (pos if sign > 0 else neg).append(p)
            params = []
        for t in list(neg):
            if t in pos:
                pos.remove(t)
                neg.remove(t)
        if params:
            value: Expr = Const(const)
            for n, (sign, p) in enumerate(params):
                if n == 0 and const == 0.0:
                    value = p if sign > 0 else sub(Const(0.0), p)
                else:
                    value = add(value, p) if sign > 0 else sub(value, p)
            pos.append(self.fresh(value))
        elif const > 0:
            pos.append(Const(const))
        elif const < 0:
            neg.append(Const(-const))
        pos.sort(key=_order_key)
        neg.sort(key=_order_key)
        if not pos and not neg:
            return Const(0.0)
        acc = pos[0] if pos else Const(0.0)
        for t in pos[1:]:
            acc = add(acc, t)
        for t in neg:
            acc = sub(acc, t)
        return acc

    def _multiplicative(self, node: Func) -> Expr:
        factors: list[tuple[int, Expr]] = []

        def flatten(e, sign):
            if isinstance(e, Func) and e.name == "mul":
                flatten(e.args[0], sign)
                flatten(e.args[1], sign)
            elif isinstance(e, Func) and e.name == "div":
                flatten(e.args[0], sign)
                flatten(e.args[1], -sign)
            else:
                factors.append((sign, e))

        flatten(node, 1)
        const = 1.0
        params: list[tuple[int, Expr]] = []
        num: list[Expr] = []
        den: list[Expr] = []
        for sign, t in factors:
            if isinstance(t, Const):
                if sign < 0 and t.value == 0.0:
                    return node
                const = const * t.value if sign > 0 else const / t.value
            elif isinstance(t, Param):
                params.append((sign, t))
            else:
                (num if sign > 0 else den).append(t)
        if not math.isfinite(const):
            return node
        if params and not self.collapsible([p for _, p in params]):
            for sign, p in params:
                (num if sign > 0 else den).append(p)
            params = []
        if const == 0.0:
            return Const(0.0)
        for t in list(den):
            if t in num:
                num.remove(t)
                den.remove(t)
        if params:
            value: Expr = Const(const)
            for n, (sign, p) in enumerate(params):
                if n == 0 and const == 1.0:
                    value = p if sign > 0 else div(Const(1.0), p)
                else:
                    value = mul(value, p) if sign > 0 else div(value, p)
            num.append(self.fresh(value))
        elif const != 1.0:
            num.append(Const(const))
        num.sort(key=_order_key)
        den.sort(key=_order_key)
        if not num and not den:
            return Const(1.0)
        numer = num[0] if num else Const(1.0)
        for t in num[1:]:
            numer = mul(numer, t)
        if not den:
            return numer
        denom = den[0]
        for t in den[1:]:
            denom = mul(denom, t)
        return div(numer, denom)

    def _power(self, node: Func) -> Expr:
        base, exponent = node.args
        if isinstance(exponent, Const):
            if exponent.value == 1.0:
                return base
            if exponent.value == 0.0:
                return Const(1.0)
        if isinstance(base, Const) and base.value == 1.0:
            return Const(1.0)
        return node


def _renumber(e: Expr, defs: list[Expr]) -> tuple[Expr, list[Expr]]:
    order = parameter_indices(e)
    mapping = {old: new for new, old in enumerate(order)}
    relabel = [Param(mapping[k]) if k in mapping else Param(k) for k in range(len(defs))]
    return substitute_params(e, relabel), [defs[k] for k in order]


def canonicalize(e: Expr) -> tuple[Expr, list[Expr]]:
    """Simplify ``e`` and report what each new parameter stands for.

    Returns ``(simplified, defs)`` where ``defs[k]`` is an expression over the
    parameters of ``e`` equal to parameter ``k`` of ``simplified``. Plugging
    ``defs`` evaluated at the old parameter vector into ``simplified``
    reproduces ``e`` except at points removed by x/x -> 1, x*0 -> 0,
    x-x -> 0 and x^0 -> 1.
    """
    n0 = num_parameters(e)
    defs: list[Expr] = [Param(k) for k in range(n0)]
    current = e
    for _ in range(_MAX_PASSES):
        sweep = _Pass(current)
        out = sweep.run(current)
        out, pass_defs = _renumber(out, sweep.defs)
        defs = [substitute_params(d, defs) for d in pass_defs]
        if out == current:
            break
        current = out
    return current, defs


def simplify(e: Expr) -> Expr:
    """Best-effort canonical form.

    Constant folding; x+0, x*1, x*0, x-x, x/x, x^1, x^0 identities; sorted
    flattening of +/- and */÷ chains; every parameter-only subtree becomes
    one parameter; parameters renumbered densely in pre-order.
    """
    return canonicalize(e)[0]


def canonical_text(e: Expr) -> str:
    return to_string(simplify(e))


# ---------------------------------------------------------------------------
# evaluation

_CODE_FUNCS = {
    "pow": "_pow",
    "exp": "_exp",
    "sin": "_sin",
    "sinh": "_sinh",
}
_NAMESPACE = {"_pow": np.power, "_exp": np.exp, "_sin": np.sin, "_sinh": np.sinh, "_f": np.float64}
_compiled: dict[Expr, object] = {}
_COMPILED_LIMIT = 50_000


def _code(e: Expr) -> str:
    if isinstance(e, Var):
        return f"V[{e.name!r}]"
    if isinstance(e, Param):
        return f"P[{e.index}]"
    if isinstance(e, Const):
        return f"_f({float(e.value)!r})"
    args = [_code(a) for a in e.args]
    if e.name in _INFIX:
        return f"({args[0]} {_INFIX[e.name]} {args[1]})"
    return f"{_CODE_FUNCS[e.name]}({', '.join(args)})"


def compile_expression(e: Expr):
    """Return ``fn(V, P)`` computing ``e`` on a column mapping and parameter array."""
    fn = _compiled.get(e)
    if fn is None:
        fn = eval(f"lambda V, P: {_code(e)}", dict(_NAMESPACE))  # noqa: S307 - code built from our own AST
        if len(_compiled) >= _COMPILED_LIMIT:
            _compiled.clear()
        _compiled[e] = fn
    return fn


def evaluate_raw(e: Expr, columns: dict, params, n_rows: int) -> np.ndarray:
    """Evaluate without the finiteness check; non-finite values are returned as is."""
    fn = compile_expression(e)
    p = np.asarray(params, dtype=float)
    with np.errstate(all="ignore"):
        out = fn(columns, p)
    out = np.asarray(out, dtype=float)
    if out.shape != (n_rows,):
        out = np.broadcast_to(out, (n_rows,)).copy()
    return out


def evaluate(e: Expr, data, params=()) -> np.ndarray:
    """Row-wise prediction of ``e`` on ``data``.

    Raises NonFiniteEvaluation when any entry is NaN or infinite (real pow
    of a negative base with a fractional exponent yields NaN).
    """
    missing = variable_names(e) - set(data.columns)
    if missing:
        raise SchemaError(f"dataset has no column(s) {sorted(missing)}")
    need = num_parameters(e)
    if len(params) < need:
        raise SchemaError(f"expression needs {need} parameter(s), got {len(params)}")
    out = evaluate_raw(e, data.columns, params, data.n_rows)
    if not np.all(np.isfinite(out)):
        raise NonFiniteEvaluation("expression evaluates to a non-finite value")
    return out


def check_space_compatible(space: SearchSpaceConfig, data) -> None:
    missing = set(space.variables) - set(data.columns)
    if missing:
        raise ConfigurationError(f"dataset lacks variable column(s) {sorted(missing)}")
