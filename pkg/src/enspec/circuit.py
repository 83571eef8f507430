"""Gate-list circuits, exact state-vector simulation and marginal probabilities.

Bit ordering: qubit 0 is the most significant bit of a basis-state index.
Gates are applied in list order, so ``gates[0]`` is U_1 in U = U_T ... U_1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .linalg import DiscreteDistribution, StateVector, bits_to_index, policy

_S2 = 1 / np.sqrt(2)

_FIXED = {
    "I": np.eye(2, dtype=complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _S2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "T": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "CX": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
}

_XX = np.kron(_FIXED["X"], _FIXED["X"])


def _rx(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def _rz(theta):
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def _expx(theta):
    # exp(i theta X)
    return np.cos(theta) * np.eye(2) + 1j * np.sin(theta) * _FIXED["X"]


def _expxx(theta):
    # exp(i theta X (x) X)
    return np.cos(theta) * np.eye(4) + 1j * np.sin(theta) * _XX


_PARAMETRIC = {"RX": (_rx, 1), "RZ": (_rz, 1), "EXPX": (_expx, 1), "EXPXX": (_expxx, 2)}
_ARITY = {"I": 1, "H": 1, "X": 1, "Y": 1, "Z": 1, "S": 1, "T": 1, "CZ": 2, "CX": 2}

GATE_KINDS = tuple(sorted(set(_FIXED) | set(_PARAMETRIC) | {"U"}))


@dataclass(frozen=True)
class Gate:
    """A named or explicit 1-/2-qubit unitary acting on ``targets``.

    ``kind`` is one of :data:`GATE_KINDS`. ``RX``/``RZ`` take an angle and
    follow the exp(-i theta P / 2) convention; ``EXPX``/``EXPXX`` implement
    exp(i theta X) and exp(i theta X X). ``U`` carries an explicit matrix.
    """

    kind: str
    targets: tuple[int, ...]
    params: tuple[float, ...] = ()
    unitary: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if kind not in GATE_KINDS:
            raise ValidationError(f"unknown gate kind {self.kind!r}")
        if len(set(self.targets)) != len(self.targets):
            raise ValidationError(f"gate {kind} has repeated targets {self.targets}")
        if kind == "U":
            if self.unitary is None:
                raise ValidationError("gate kind U needs an explicit matrix")
            m = np.array(self.unitary, dtype=complex)
            if m.shape not in ((2, 2), (4, 4)):
                raise ValidationError(f"explicit gate matrix has shape {m.shape}")
            if m.shape[0] != 1 << len(self.targets):
                raise ValidationError("explicit gate matrix does not match its target count")
            if np.abs(m.conj().T @ m - np.eye(m.shape[0])).max() > policy().normalization_tol:
                raise ValidationError("explicit gate matrix is not unitary")
            m.setflags(write=False)
            object.__setattr__(self, "unitary", m)
            return
        if kind in _PARAMETRIC:
            fn, arity = _PARAMETRIC[kind]
            if len(self.params) != 1:
                raise ValidationError(f"gate {kind} takes exactly one angle")
        else:
            arity = _ARITY[kind]
            if self.params:
                raise ValidationError(f"gate {kind} takes no parameters")
        if len(self.targets) != arity:
            raise ValidationError(f"gate {kind} acts on {arity} qubit(s), got {self.targets}")

    @property
    def matrix(self) -> np.ndarray:
        if self.kind == "U":
            return self.unitary
        if self.kind in _PARAMETRIC:
            return _PARAMETRIC[self.kind][0](self.params[0])
        return _FIXED[self.kind]

    def inverse(self) -> "Gate":
        return Gate("U", self.targets, unitary=self.matrix.conj().T)

    def full_matrix(self, n: int) -> np.ndarray:
        """Dense 2^n x 2^n embedding of this gate."""
        dim = 1 << n
        cols = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
        return _apply(cols, self, n).reshape(dim, dim)


def _apply(tensor: np.ndarray, gate: Gate, n: int) -> np.ndarray:
    """Apply ``gate`` to the leading ``n`` qubit axes of ``tensor``."""
    k = len(gate.targets)
    g = gate.matrix.reshape((2,) * (2 * k))
    out = np.tensordot(g, tensor, axes=(list(range(k, 2 * k)), list(gate.targets)))
    return np.moveaxis(out, list(range(k)), list(gate.targets))


@dataclass(frozen=True)
class CircuitIR:
    n: int
    gates: tuple[Gate, ...]

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.n < 1:
            raise ValidationError("circuit needs at least one qubit")
        if not self.gates:
            raise ValidationError("circuit needs at least one gate")
        for i, g in enumerate(self.gates):
            if any(t < 0 or t >= self.n for t in g.targets):
                raise ValidationError(f"gates[{i}].targets {g.targets} out of range for n={self.n}")

    @property
    def T(self) -> int:
        return len(self.gates)

    def inverse(self) -> "CircuitIR":
        """U^dag = U_1^dag ... U_T^dag as a gate list."""
        return CircuitIR(self.n, tuple(g.inverse() for g in reversed(self.gates)))

    def prefix(self, t: int) -> "CircuitIR | None":
        return CircuitIR(self.n, self.gates[:t]) if t else None

    def unitary(self) -> np.ndarray:
        dim = 1 << self.n
        tensor = np.eye(dim, dtype=complex).reshape((2,) * self.n + (dim,))
        for g in self.gates:
            tensor = _apply(tensor, g, self.n)
        return tensor.reshape(dim, dim)


def _as_state(n: int, state) -> StateVector:
    if isinstance(state, StateVector):
        return state
    if isinstance(state, (int, np.integer)):
        return StateVector.basis(n, int(state))
    return StateVector.from_bits(state)


def simulate(circuit: CircuitIR, state) -> StateVector:
    """Return U_T ... U_1 |state>. ``state`` may be a StateVector, index or bit tuple."""
    psi = _as_state(circuit.n, state)
    if psi.n != circuit.n:
        raise ValidationError(f"state has {psi.n} qubits, circuit has {circuit.n}")
    tensor = psi.amplitudes.reshape((2,) * circuit.n)
    for g in circuit.gates:
        tensor = _apply(tensor, g, circuit.n)
    return StateVector(tensor.reshape(-1), normalize=True)


def output_distribution(circuit: CircuitIR, state) -> DiscreteDistribution:
    return DiscreteDistribution(simulate(circuit, state).probabilities())


def simulate_prefixes(circuit: CircuitIR, state) -> list[StateVector]:
    """States U_t ... U_1 |state> for t = 0..T."""
    psi = _as_state(circuit.n, state)
    out = [psi]
    tensor = psi.amplitudes.reshape((2,) * circuit.n)
    for g in circuit.gates:
        tensor = _apply(tensor, g, circuit.n)
        out.append(StateVector(tensor.reshape(-1), normalize=True))
    return out


@dataclass(frozen=True)
class MarginalSpec:
    """Set S* of strings whose bit ``positions[i]`` equals ``bits[i]``."""

    positions: tuple[int, ...] = ()
    bits: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "positions", tuple(int(p) for p in self.positions))
        object.__setattr__(self, "bits", tuple(int(b) for b in self.bits))
        if len(self.positions) != len(self.bits):
            raise ValidationError("positions and bits must have equal length")
        if any(b not in (0, 1) for b in self.bits):
            raise ValidationError("marginal bits must be 0 or 1")
        if any(a >= b for a, b in zip(self.positions, self.positions[1:])):
            raise ValidationError("marginal positions must be strictly increasing")
        if any(p < 0 for p in self.positions):
            raise ValidationError("marginal positions must be non-negative")

    def __len__(self) -> int:
        return len(self.positions)

    def validate(self, n: int) -> None:
        if len(self) > n or any(p >= n for p in self.positions):
            raise ValidationError(f"marginal spec {self} is invalid for n={n}")

    def contains(self, bits: Sequence[int]) -> bool:
        return all(bits[k] == b for k, b in zip(self.positions, self.bits))

    def mask(self, n: int) -> np.ndarray:
        """Boolean vector over the 2^n strings marking membership in S*."""
        self.validate(n)
        idx = np.arange(1 << n)
        keep = np.ones(1 << n, dtype=bool)
        for k, b in zip(self.positions, self.bits):
            keep &= ((idx >> (n - 1 - k)) & 1) == b
        return keep

    def complements(self) -> list["MarginalSpec"]:
        """All 2^l specs over the same positions."""
        l = len(self)
        return [
            MarginalSpec(self.positions, tuple((m >> (l - 1 - i)) & 1 for i in range(l)))
            for m in range(1 << l)
        ]


def marginal_probability(circuit: CircuitIR, x, spec: MarginalSpec) -> float:
    """Exact p = sum over y in S* of |<y|U|x>|^2."""
    spec.validate(circuit.n)
    if not len(spec):
        return 1.0
    probs = simulate(circuit, x).probabilities()
    return float(probs[spec.mask(circuit.n)].sum())


# -- JSON schema -------------------------------------------------------------

def gate_to_json(g: Gate) -> dict:
    out: dict = {"kind": g.kind, "targets": list(g.targets)}
    if g.params:
        out["params"] = list(g.params)
    if g.kind == "U":
        out["matrix"] = [[[float(v.real), float(v.imag)] for v in row] for row in g.unitary]
    return out


def circuit_to_json(circuit: CircuitIR) -> dict:
    return {"n": circuit.n, "gates": [gate_to_json(g) for g in circuit.gates]}


def circuit_from_json(data) -> CircuitIR:
    if not isinstance(data, dict):
        raise ValidationError("circuit JSON must be an object")
    if not isinstance(data.get("n"), int) or isinstance(data.get("n"), bool):
        raise ValidationError("circuit field 'n' must be an integer")
    gates_raw = data.get("gates")
    if not isinstance(gates_raw, list):
        raise ValidationError("circuit field 'gates' must be a list")
    gates = []
    for i, g in enumerate(gates_raw):
        where = f"gates[{i}]"
        if not isinstance(g, dict):
            raise ValidationError(f"{where} must be an object")
        kind = g.get("kind")
        if not isinstance(kind, str):
            raise ValidationError(f"{where}.kind must be a string")
        targets = g.get("targets")
        if not isinstance(targets, list) or not all(isinstance(t, int) for t in targets):
            raise ValidationError(f"{where}.targets must be a list of integers")
        params = g.get("params", [])
        if not isinstance(params, list) or not all(isinstance(p, (int, float)) for p in params):
            raise ValidationError(f"{where}.params must be a list of numbers")
        matrix = None
        if "matrix" in g:
            try:
                matrix = np.array([[complex(re, im) for re, im in row] for row in g["matrix"]])
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"{where}.matrix must be rows of [re, im] pairs") from exc
        try:
            gates.append(Gate(kind, tuple(targets), tuple(params), matrix))
        except ValidationError as exc:
            raise ValidationError(f"{where}: {exc}") from exc
    return CircuitIR(data["n"], tuple(gates))


def random_circuit(n: int, T: int, rng: np.random.Generator) -> CircuitIR:
    """Random circuit over H, T, S, Rx, Rz, CX and CZ for property tests."""
    one = ["H", "T", "S", "RX", "RZ", "X"]
    two = ["CX", "CZ"]
    gates = []
    for _ in range(T):
        if n > 1 and rng.random() < 0.4:
            a, b = rng.choice(n, size=2, replace=False)
            gates.append(Gate(two[rng.integers(len(two))], (int(a), int(b))))
        else:
            kind = one[rng.integers(len(one))]
            q = int(rng.integers(n))
            params = (float(rng.uniform(0, 2 * np.pi)),) if kind in ("RX", "RZ") else ()
            gates.append(Gate(kind, (q,), params))
    return CircuitIR(n, tuple(gates))


__all__ = [
    "GATE_KINDS",
    "CircuitIR",
    "Gate",
    "MarginalSpec",
    "bits_to_index",
    "circuit_from_json",
    "circuit_to_json",
    "marginal_probability",
    "output_distribution",
    "random_circuit",
    "simulate",
    "simulate_prefixes",
]
