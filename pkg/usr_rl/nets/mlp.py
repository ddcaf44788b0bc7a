"""
Feed-forward networks on top of diffcore.

Parameters live in immutable ``MlpParams`` snapshots. A network is evaluated
either with plain numpy (``mlp_forward``) or on a tape after ``bind`` turns
each weight and bias into a leaf, which is how gradients are taken.
"""

from dataclasses import dataclass
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from usr_rl.core.constants import ACTIVATIONS, DEFAULT_HIDDEN_ACTIVATION
from usr_rl.core.errors import ContractError, ShapeError
from usr_rl.nets import diffcore
from usr_rl.nets.diffcore import Gradients, Tape, Var


def _frozen_copy(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class MlpParams:
    """Weights and biases of a fully connected network.

    Attributes:
        weights: Per-layer matrices of shape ``(n_in, n_out)``.
        biases: Per-layer row vectors of shape ``(1, n_out)``.
        activations: Per-layer activation tag (``relu``, ``tanh``, ``identity``).
    """

    weights: Tuple[np.ndarray, ...]
    biases: Tuple[np.ndarray, ...]
    activations: Tuple[str, ...]

    def __post_init__(self) -> None:
        if not (len(self.weights) == len(self.biases) == len(self.activations) >= 1):
            raise ContractError(
                f"layer count mismatch: {len(self.weights)} weights, "
                f"{len(self.biases)} biases, {len(self.activations)} activations"
            )
        weights = tuple(_frozen_copy(w) for w in self.weights)
        biases = tuple(_frozen_copy(b) for b in self.biases)
        for i, (w, b) in enumerate(zip(weights, biases)):
            if w.ndim != 2 or b.shape != (1, w.shape[1]):
                raise ShapeError(f"layer {i}", [w.shape, b.shape], "bias must be (1, n_out)")
            if i > 0 and weights[i - 1].shape[1] != w.shape[0]:
                raise ShapeError(f"layer {i}", [weights[i - 1].shape, w.shape], "layers do not chain")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ContractError(f"layer {i} has non-finite parameters")
        for tag in self.activations:
            if tag not in ACTIVATIONS:
                raise ContractError(f"unknown activation {tag!r}, expected one of {ACTIVATIONS}")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "biases", biases)
        object.__setattr__(self, "activations", tuple(self.activations))

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    def arrays(self) -> List[np.ndarray]:
        """All parameter arrays as ``[w0, b0, w1, b1, ...]``."""
        out: List[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    def with_arrays(self, arrays: Sequence[np.ndarray]) -> "MlpParams":
        """New params with arrays given in ``arrays()`` order."""
        if len(arrays) != 2 * self.num_layers:
            raise ContractError(f"expected {2 * self.num_layers} arrays, got {len(arrays)}")
        return MlpParams(tuple(arrays[0::2]), tuple(arrays[1::2]), self.activations)

    def records(self, prefix: str) -> Dict[str, np.ndarray]:
        """Named arrays, ``<prefix>.weight.<i>`` and ``<prefix>.bias.<i>``."""
        out: Dict[str, np.ndarray] = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"{prefix}.weight.{i}"] = w
            out[f"{prefix}.bias.{i}"] = b
        return out

    @classmethod
    def from_records(
        cls,
        prefix: str,
        records: Mapping[str, np.ndarray],
        activations: Sequence[str],
    ) -> "MlpParams":
        """Inverse of ``records`` for a network with ``len(activations)`` layers."""
        try:
            weights = tuple(records[f"{prefix}.weight.{i}"] for i in range(len(activations)))
            biases = tuple(records[f"{prefix}.bias.{i}"] for i in range(len(activations)))
        except KeyError as e:
            raise ContractError(f"missing parameter record {e.args[0]!r}") from e
        return cls(weights, biases, tuple(activations))

    def squared_norm(self) -> float:
        return float(sum(np.sum(a * a) for a in self.arrays()))


def layer_sizes(in_dim: int, hidden_width: int, hidden_layers: int, out_dim: int) -> List[int]:
    return [in_dim] + [hidden_width] * hidden_layers + [out_dim]


def hidden_activations(hidden_layers: int, hidden: str = DEFAULT_HIDDEN_ACTIVATION) -> Tuple[str, ...]:
    return tuple([hidden] * hidden_layers + ["identity"])


def init_mlp(
    sizes: Sequence[int],
    rng: np.random.Generator,
    hidden_activation: str = DEFAULT_HIDDEN_ACTIVATION,
) -> MlpParams:
    """Fan-in uniform initialization, ``U(-1/sqrt(n_in), 1/sqrt(n_in))``.

    Args:
        sizes: ``[n_in, h1, ..., n_out]``; at least two entries.
        rng: Source of randomness.
        hidden_activation: Nonlinearity on every layer except the last.

    Returns:
        Fresh parameters; the output layer is linear.
    """
    if len(sizes) < 2 or any(n < 1 for n in sizes):
        raise ContractError(f"invalid layer sizes {list(sizes)}")
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(n_in)
        weights.append(rng.uniform(-bound, bound, size=(n_in, n_out)))
        biases.append(rng.uniform(-bound, bound, size=(1, n_out)))
    return MlpParams(tuple(weights), tuple(biases), hidden_activations(len(sizes) - 2, hidden_activation))


def _activate_numpy(tag: str, h: np.ndarray) -> np.ndarray:
    if tag == "relu":
        return np.maximum(h, 0.0)
    if tag == "tanh":
        return np.tanh(h)
    return h


def _activate_tape(tag: str, h: Var) -> Var:
    if tag == "relu":
        return diffcore.relu(h)
    if tag == "tanh":
        return diffcore.tanh(h)
    return h


def mlp_forward(params: MlpParams, inputs: np.ndarray) -> np.ndarray:
    """Deterministic forward pass without a tape.

    Args:
        params: Network parameters.
        inputs: One input vector ``(n_in,)`` or a batch ``(B, n_in)``.

    Returns:
        ``(n_out,)`` for a single input, ``(B, n_out)`` for a batch.

    Raises:
        ShapeError: ``inputs`` does not match the first layer.
    """
    x = np.asarray(inputs, dtype=np.float64)
    single = x.ndim == 1
    batch = x.reshape(1, -1) if single else x
    if batch.ndim != 2 or batch.shape[1] != params.in_dim:
        raise ShapeError("mlp_forward", [x.shape, params.weights[0].shape], "input width mismatch")
    h = batch
    for w, b, tag in zip(params.weights, params.biases, params.activations):
        h = _activate_numpy(tag, h @ w + b)
    return h[0] if single else h


@dataclass(frozen=True)
class BoundMlp:
    """An ``MlpParams`` whose arrays are leaves on a tape."""

    params: MlpParams
    weights: Tuple[Var, ...]
    biases: Tuple[Var, ...]

    def apply(self, inputs: Var) -> Var:
        """Forward pass recorded on the tape; ``inputs`` is ``(B, n_in)``."""
        if len(inputs.shape) != 2 or inputs.shape[1] != self.params.in_dim:
            raise ShapeError("mlp_forward", [inputs.shape, self.params.weights[0].shape], "input width mismatch")
        tape = inputs.tape
        ones = tape.constant(np.ones((inputs.shape[0], 1)))
        h = inputs
        for w, b, tag in zip(self.weights, self.biases, self.params.activations):
            h = _activate_tape(tag, h @ w + ones @ b)
        return h

    def leaves(self) -> List[Var]:
        out: List[Var] = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    def gradients(self, grads: Gradients) -> MlpParams:
        """Collect this network's parameter gradients as an ``MlpParams``."""
        return self.params.with_arrays([grads[v] for v in self.leaves()])


def bind(tape: Tape, params: MlpParams, name: str = "mlp") -> BoundMlp:
    """Record every parameter array of ``params`` as a leaf on ``tape``."""
    weights = tuple(tape.leaf(w, name=f"{name}.weight.{i}") for i, w in enumerate(params.weights))
    biases = tuple(tape.leaf(b, name=f"{name}.bias.{i}") for i, b in enumerate(params.biases))
    return BoundMlp(params, weights, biases)


def soft_update(target: MlpParams, source: MlpParams, rho: float) -> MlpParams:
    """Polyak averaging ``(1 - rho) * target + rho * source``.

    Raises:
        ContractError: ``rho`` outside ``[0, 1]``.
        ShapeError: The two networks have different shapes.
    """
    if not 0.0 <= rho <= 1.0:
        raise ContractError(f"rho must be in [0, 1], got {rho}")
    blended = []
    for t, s in zip(target.arrays(), source.arrays()):
        if t.shape != s.shape:
            raise ShapeError("soft_update", [t.shape, s.shape])
        blended.append((1.0 - rho) * t + rho * s)
    if len(target.arrays()) != len(source.arrays()):
        raise ContractError("soft_update: networks have different depths")
    return target.with_arrays(blended)
