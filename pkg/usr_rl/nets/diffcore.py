"""
Minimal reverse-mode automatic differentiation over dense float64 arrays.

A ``Tape`` records primitive operations in execution order (a Wengert list).
Each recorded node stores its operands, its output and the name of the
primitive whose vector-Jacobian product (VJP) rule is applied during the
backward pass. Leaves are created with ``Tape.leaf`` and may be parameters or
inputs alike, which is what lets the adversarial uncertainty set ask for
``dV/ds'`` from an already-built value network.

Broadcasting is restricted to scalar-versus-array so every gradient rule stays
a short, auditable expression.

Example:
    >>> tape = Tape()
    >>> x = tape.leaf(3.0)
    >>> y = square(x)
    >>> tape.backward(y)[x]
    array(6.)
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from usr_rl.core.constants import FD_DENOMINATOR_FLOOR, FD_EPSILON
from usr_rl.core.errors import ContractError, DomainError, EvaluationError, ShapeError

ArrayLike = Union[float, int, np.ndarray, "Var"]


@dataclass(frozen=True)
class Primitive:
    """A differentiable operation.

    Attributes:
        name: Op-kind used in error messages and on the tape.
        arity: Number of array operands.
        compute: Forward rule ``compute(*values, **attrs) -> ndarray``.
        vjp: Backward rule ``vjp(g, values, out, **attrs) -> tuple of grads``.
        check: Optional operand validation raising ``ShapeError``/``DomainError``.
    """

    name: str
    arity: int
    compute: Callable[..., np.ndarray]
    vjp: Callable[..., Tuple[np.ndarray, ...]]
    check: Optional[Callable[..., None]] = None


@dataclass
class Node:
    """One recorded entry on the tape."""

    op: str
    inputs: Tuple[int, ...]
    value: np.ndarray
    attrs: Dict[str, Any] = field(default_factory=dict)
    name: Optional[str] = None

    @property
    def is_leaf(self) -> bool:
        return self.op == "leaf"


# ============================================================================
# Shape rules
# ============================================================================


def _is_scalar(value: np.ndarray) -> bool:
    return value.ndim == 0


def _check_elementwise(op: str, a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape and not (_is_scalar(a) or _is_scalar(b)):
        raise ShapeError(op, [a.shape, b.shape], "only scalar-vs-array broadcast is allowed")


def _unbroadcast(grad: np.ndarray, like: np.ndarray) -> np.ndarray:
    """Reduce a gradient back to the operand shape (scalar operands sum)."""
    if _is_scalar(like) and not _is_scalar(grad):
        return np.asarray(grad.sum())
    return grad


def _check_matmul(op: str, a: np.ndarray, b: np.ndarray) -> None:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(op, [a.shape, b.shape], "inner dimensions must match")


def _check_positive(op: str, a: np.ndarray) -> None:
    if np.any(a <= 0.0):
        raise DomainError(op, f"requires strictly positive input, min was {float(np.min(a))}")


def _check_columns(op: str, a: np.ndarray, start: int, stop: int) -> None:
    if a.ndim != 2 or not 0 <= start < stop <= a.shape[1]:
        raise ShapeError(op, [a.shape], f"column range [{start}, {stop}) out of bounds")


def _check_concat(op: str, a: np.ndarray, b: np.ndarray) -> None:
    if a.ndim != 2 or b.ndim != 2 or a.shape[0] != b.shape[0]:
        raise ShapeError(op, [a.shape, b.shape], "row counts must match")


def _check_axis(op: str, a: np.ndarray, axis: Optional[int] = None) -> None:
    if axis is not None and not 0 <= axis < a.ndim:
        raise ShapeError(op, [a.shape], f"axis {axis} out of range")


def _expand_reduced(g: np.ndarray, like: np.ndarray, axis: Optional[int]) -> np.ndarray:
    if axis is None:
        return np.broadcast_to(g, like.shape)
    return np.broadcast_to(np.expand_dims(g, axis), like.shape)


# ============================================================================
# Primitive registry
# ============================================================================

PRIMITIVES: Dict[str, Primitive] = {}


def _register(primitive: Primitive) -> None:
    PRIMITIVES[primitive.name] = primitive


_register(Primitive(
    "add", 2,
    lambda a, b: a + b,
    lambda g, vals, out: (_unbroadcast(g, vals[0]), _unbroadcast(g, vals[1])),
    lambda a, b: _check_elementwise("add", a, b),
))
_register(Primitive(
    "subtract", 2,
    lambda a, b: a - b,
    lambda g, vals, out: (_unbroadcast(g, vals[0]), _unbroadcast(-g, vals[1])),
    lambda a, b: _check_elementwise("subtract", a, b),
))
_register(Primitive(
    "multiply", 2,
    lambda a, b: a * b,
    lambda g, vals, out: (
        _unbroadcast(g * vals[1], vals[0]),
        _unbroadcast(g * vals[0], vals[1]),
    ),
    lambda a, b: _check_elementwise("multiply", a, b),
))


def _check_divide(a: np.ndarray, b: np.ndarray) -> None:
    _check_elementwise("divide", a, b)
    if np.any(b == 0.0):
        raise DomainError("divide", "division by zero")


_register(Primitive(
    "divide", 2,
    lambda a, b: a / b,
    lambda g, vals, out: (
        _unbroadcast(g / vals[1], vals[0]),
        _unbroadcast(-g * vals[0] / (vals[1] * vals[1]), vals[1]),
    ),
    _check_divide,
))
_register(Primitive(
    "minimum", 2,
    lambda a, b: np.minimum(a, b),
    # ties route the gradient to the first operand
    lambda g, vals, out: (
        _unbroadcast(np.where(vals[0] <= vals[1], g, 0.0), vals[0]),
        _unbroadcast(np.where(vals[0] <= vals[1], 0.0, g), vals[1]),
    ),
    lambda a, b: _check_elementwise("minimum", a, b),
))
_register(Primitive(
    "matmul", 2,
    lambda a, b: a @ b,
    lambda g, vals, out: (g @ vals[1].T, vals[0].T @ g),
    lambda a, b: _check_matmul("matmul", a, b),
))
_register(Primitive(
    "tanh", 1,
    np.tanh,
    lambda g, vals, out: (g * (1.0 - out * out),),
))
_register(Primitive(
    "exp", 1,
    np.exp,
    lambda g, vals, out: (g * out,),
))
_register(Primitive(
    "log", 1,
    np.log,
    lambda g, vals, out: (g / vals[0],),
    lambda a: _check_positive("log", a),
))
_register(Primitive(
    "square", 1,
    np.square,
    lambda g, vals, out: (2.0 * g * vals[0],),
))
_register(Primitive(
    "sqrt", 1,
    np.sqrt,
    lambda g, vals, out: (g / (2.0 * out),),
    lambda a: _check_positive("sqrt", a),
))
_register(Primitive(
    "abs", 1,
    np.abs,
    lambda g, vals, out: (g * np.sign(vals[0]),),
))
_register(Primitive(
    "relu", 1,
    lambda a: np.maximum(a, 0.0),
    lambda g, vals, out: (np.where(vals[0] > 0.0, g, 0.0),),
))
_register(Primitive(
    "scale", 1,
    lambda a, factor: a * factor,
    lambda g, vals, out, factor: (g * factor,),
))
_register(Primitive(
    "sum", 1,
    lambda a, axis=None: np.asarray(np.sum(a, axis=axis)),
    lambda g, vals, out, axis=None: (_expand_reduced(g, vals[0], axis).copy(),),
    lambda a, axis=None: _check_axis("sum", a, axis),
))
_register(Primitive(
    "mean", 1,
    lambda a, axis=None: np.asarray(np.mean(a, axis=axis)),
    lambda g, vals, out, axis=None: (
        _expand_reduced(g, vals[0], axis) / (vals[0].size if axis is None else vals[0].shape[axis]),
    ),
    lambda a, axis=None: _check_axis("mean", a, axis),
))
_register(Primitive(
    "columns", 1,
    lambda a, start, stop: a[:, start:stop].copy(),
    lambda g, vals, out, start, stop: (_scatter_columns(g, vals[0].shape, start, stop),),
    lambda a, start, stop: _check_columns("columns", a, start, stop),
))
_register(Primitive(
    "concat", 2,
    lambda a, b: np.concatenate([a, b], axis=1),
    lambda g, vals, out: (g[:, : vals[0].shape[1]].copy(), g[:, vals[0].shape[1]:].copy()),
    lambda a, b: _check_concat("concat", a, b),
))


def _scatter_columns(g: np.ndarray, shape: Tuple[int, ...], start: int, stop: int) -> np.ndarray:
    full = np.zeros(shape)
    full[:, start:stop] = g
    return full


# ============================================================================
# Tape and variables
# ============================================================================


class Var:
    """Handle to a value recorded on a tape.

    Arithmetic operators record new nodes on the same tape; Python numbers
    are lifted to constants.
    """

    __slots__ = ("tape", "index")
    __array_ufunc__ = None  # ndarray <op> Var falls through to the reflected operator

    def __init__(self, tape: "Tape", index: int):
        self.tape = tape
        self.index = index

    @property
    def value(self) -> np.ndarray:
        return self.tape.nodes[self.index].value

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    def __repr__(self) -> str:
        return f"Var(index={self.index}, shape={self.shape})"

    def __add__(self, other: ArrayLike) -> "Var":
        return self.tape.forward("add", self, other)

    def __radd__(self, other: ArrayLike) -> "Var":
        return self.tape.forward("add", other, self)

    def __sub__(self, other: ArrayLike) -> "Var":
        return self.tape.forward("subtract", self, other)

    def __rsub__(self, other: ArrayLike) -> "Var":
        return self.tape.forward("subtract", other, self)

    def __mul__(self, other: ArrayLike) -> "Var":
        return self.tape.forward("multiply", self, other)

    def __rmul__(self, other: ArrayLike) -> "Var":
        return self.tape.forward("multiply", other, self)

    def __truediv__(self, other: ArrayLike) -> "Var":
        return self.tape.forward("divide", self, other)

    def __rtruediv__(self, other: ArrayLike) -> "Var":
        return self.tape.forward("divide", other, self)

    def __neg__(self) -> "Var":
        return self.tape.forward("scale", self, factor=-1.0)

    def __matmul__(self, other: ArrayLike) -> "Var":
        return self.tape.forward("matmul", self, other)


class Gradients(Mapping[int, np.ndarray]):
    """Gradient map from leaf index to gradient array.

    Indexable by ``Var`` or by raw node index.
    """

    def __init__(self, grads: Dict[int, np.ndarray]):
        self._grads = grads

    def __getitem__(self, key: Union[int, Var]) -> np.ndarray:
        index = key.index if isinstance(key, Var) else key
        return self._grads[index]

    def __iter__(self) -> Iterator[int]:
        return iter(self._grads)

    def __len__(self) -> int:
        return len(self._grads)


class Tape:
    """Ordered record of primitive operations.

    A tape is confined to one worker. ``backward`` never mutates it, so the
    same tape can be differentiated repeatedly.
    """

    def __init__(self) -> None:
        self.nodes: List[Node] = []

    def __len__(self) -> int:
        return len(self.nodes)

    def _append(self, node: Node) -> Var:
        self.nodes.append(node)
        return Var(self, len(self.nodes) - 1)

    def leaf(self, value: Union[float, np.ndarray], name: Optional[str] = None) -> Var:
        """Record a differentiable leaf (parameter or input)."""
        array = np.array(value, dtype=np.float64)
        if not np.all(np.isfinite(array)):
            raise EvaluationError(f"leaf {name or len(self.nodes)} has non-finite entries")
        return self._append(Node("leaf", (), array, name=name))

    def constant(self, value: Union[float, np.ndarray]) -> Var:
        """Record a constant; it is a leaf whose gradient nobody reads."""
        return self.leaf(value, name="const")

    def _lift(self, operand: ArrayLike) -> Var:
        if isinstance(operand, Var):
            if operand.tape is not self:
                raise ContractError("operand belongs to a different tape")
            return operand
        return self.constant(operand)

    def forward(self, op: str, *operands: ArrayLike, **attrs: Any) -> Var:
        """Evaluate primitive ``op`` on ``operands`` and record it.

        Raises:
            ContractError: Unknown op-kind or wrong operand count.
            ShapeError: Operand shapes incompatible with ``op``.
            DomainError: log/sqrt of non-positive input, division by zero.
            EvaluationError: The result has non-finite entries.
        """
        primitive = PRIMITIVES.get(op)
        if primitive is None:
            raise ContractError(f"unknown op-kind {op!r}; known: {sorted(PRIMITIVES)}")
        if len(operands) != primitive.arity:
            raise ContractError(f"{op} expects {primitive.arity} operands, got {len(operands)}")
        variables = [self._lift(o) for o in operands]
        values = [v.value for v in variables]
        if primitive.check is not None:
            primitive.check(*values, **attrs)
        out = np.asarray(primitive.compute(*values, **attrs), dtype=np.float64)
        if not np.all(np.isfinite(out)):
            raise EvaluationError(f"{op} produced non-finite output")
        return self._append(Node(op, tuple(v.index for v in variables), out, dict(attrs)))

    def backward(self, output: Var) -> Gradients:
        """Reverse pass from a scalar output.

        Returns:
            Gradient of ``output`` with respect to every leaf recorded before
            it. Leaves the output does not depend on get zero gradients.

        Raises:
            ContractError: ``output`` is not a scalar.
        """
        if output.tape is not self:
            raise ContractError("output belongs to a different tape")
        if output.value.shape != ():
            raise ContractError(f"backward needs a scalar output, got shape {output.value.shape}")

        adjoints: Dict[int, np.ndarray] = {output.index: np.ones(())}
        for index in range(output.index, -1, -1):
            node = self.nodes[index]
            g = adjoints.get(index)
            if g is None or node.is_leaf:
                continue
            primitive = PRIMITIVES[node.op]
            values = tuple(self.nodes[i].value for i in node.inputs)
            input_grads = primitive.vjp(g, values, node.value, **node.attrs)
            for input_index, input_grad in zip(node.inputs, input_grads):
                previous = adjoints.get(input_index)
                adjoints[input_index] = input_grad if previous is None else previous + input_grad

        grads: Dict[int, np.ndarray] = {}
        for index in range(output.index + 1):
            node = self.nodes[index]
            if node.is_leaf:
                grads[index] = np.asarray(adjoints.get(index, np.zeros_like(node.value)), dtype=np.float64)
        return Gradients(grads)


# ============================================================================
# Functional front-end
# ============================================================================


def _tape_of(*operands: ArrayLike) -> Tape:
    for operand in operands:
        if isinstance(operand, Var):
            return operand.tape
    raise ContractError("at least one operand must be a recorded Var")


def add(a: ArrayLike, b: ArrayLike) -> Var:
    return _tape_of(a, b).forward("add", a, b)


def subtract(a: ArrayLike, b: ArrayLike) -> Var:
    return _tape_of(a, b).forward("subtract", a, b)


def multiply(a: ArrayLike, b: ArrayLike) -> Var:
    return _tape_of(a, b).forward("multiply", a, b)


def divide(a: ArrayLike, b: ArrayLike) -> Var:
    return _tape_of(a, b).forward("divide", a, b)


def minimum(a: ArrayLike, b: ArrayLike) -> Var:
    return _tape_of(a, b).forward("minimum", a, b)


def matmul(a: ArrayLike, b: ArrayLike) -> Var:
    return _tape_of(a, b).forward("matmul", a, b)


def tanh(x: Var) -> Var:
    return x.tape.forward("tanh", x)


def exp(x: Var) -> Var:
    return x.tape.forward("exp", x)


def log(x: Var) -> Var:
    return x.tape.forward("log", x)


def square(x: Var) -> Var:
    return x.tape.forward("square", x)


def sqrt(x: Var) -> Var:
    return x.tape.forward("sqrt", x)


def absolute(x: Var) -> Var:
    return x.tape.forward("abs", x)


def relu(x: Var) -> Var:
    return x.tape.forward("relu", x)


def scale(x: Var, factor: float) -> Var:
    return x.tape.forward("scale", x, factor=float(factor))


def sum_(x: Var, axis: Optional[int] = None) -> Var:
    return x.tape.forward("sum", x, axis=axis)


def mean(x: Var, axis: Optional[int] = None) -> Var:
    return x.tape.forward("mean", x, axis=axis)


def columns(x: Var, start: int, stop: int) -> Var:
    return x.tape.forward("columns", x, start=int(start), stop=int(stop))


def concat(a: Var, b: ArrayLike) -> Var:
    return _tape_of(a, b).forward("concat", a, b)


# ============================================================================
# Gradient checking
# ============================================================================

ScalarFunction = Callable[[Tape, Var], Var]


def value_and_grad(function: ScalarFunction, point: np.ndarray) -> Tuple[float, np.ndarray]:
    """Evaluate ``function`` at ``point`` and its gradient there."""
    tape = Tape()
    x = tape.leaf(point, name="x")
    out = function(tape, x)
    return float(out.value), tape.backward(out)[x]


def _evaluate(function: ScalarFunction, point: np.ndarray) -> float:
    tape = Tape()
    value = float(function(tape, tape.leaf(point)).value)
    if not np.isfinite(value):
        raise EvaluationError(f"function value is not finite at {point}")
    return value


def numerical_gradient(
    function: ScalarFunction,
    point: np.ndarray,
    epsilon: float = FD_EPSILON,
) -> np.ndarray:
    """Central finite-difference gradient of ``function`` at ``point``."""
    if epsilon <= 0.0:
        raise ContractError(f"epsilon must be positive, got {epsilon}")
    base = np.array(point, dtype=np.float64)
    grad = np.zeros_like(base)
    flat = base.reshape(-1)
    grad_flat = grad.reshape(-1)
    for k in range(flat.size):
        shifted = flat.copy()
        shifted[k] += epsilon
        upper = _evaluate(function, shifted.reshape(base.shape))
        shifted[k] -= 2.0 * epsilon
        lower = _evaluate(function, shifted.reshape(base.shape))
        grad_flat[k] = (upper - lower) / (2.0 * epsilon)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Max over coordinates of ``|analytic - numeric| / (|numeric| + 1e-12)``."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    if analytic.size == 0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric) / (np.abs(numeric) + FD_DENOMINATOR_FLOOR)))


def finite_diff_check(
    function: ScalarFunction,
    point: Union[float, Sequence[float], np.ndarray],
    epsilon: float = FD_EPSILON,
) -> float:
    """Compare the tape gradient of ``function`` with central differences.

    Args:
        function: Builds a scalar on the given tape from the leaf ``x``.
        point: Where to check.
        epsilon: Finite-difference step, must be positive.

    Returns:
        Maximum relative error over coordinates.
    """
    point = np.array(point, dtype=np.float64)
    numeric = numerical_gradient(function, point, epsilon)
    _, analytic = value_and_grad(function, point)
    return relative_error(analytic, numeric)
