"""IQP unitaries, random product inputs and closed-form Pauli conjugation.

The IQP family is U = exp(i pi/8 H_XX) with
H_XX = sum_{(j,k)} w_jk X_j X_k + sum_k v_k X_k. The 2D lattice circuit is the
member with w_jk = 2 on grid edges and v_k = 2 on every site.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuit import CircuitIR, Gate
from .errors import ValidationError
from .linalg import StateVector
from .pauli import PauliSum

DEFAULT_ANGLES = (0.0, np.pi / 4)


@dataclass(frozen=True)
class IqpGraph:
    n: int
    edges: tuple[tuple[int, int, float], ...] = ()
    onsite: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("graph needs at least one vertex")
        edges = tuple((int(j), int(k), float(w)) for j, k, w in self.edges)
        seen = set()
        for j, k, _ in edges:
            if j == k:
                raise ValidationError(f"self-loop at vertex {j}")
            if not (0 <= j < self.n and 0 <= k < self.n):
                raise ValidationError(f"edge ({j}, {k}) out of range for n={self.n}")
            key = frozenset((j, k))
            if key in seen:
                raise ValidationError(f"duplicate edge ({j}, {k})")
            seen.add(key)
        onsite = tuple(float(v) for v in self.onsite) or (0.0,) * self.n
        if len(onsite) != self.n:
            raise ValidationError(f"onsite has {len(onsite)} entries, expected {self.n}")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "onsite", onsite)

    def neighbors(self, l: int) -> list[tuple[int, float]]:
        """(k, w_kl) for every edge touching ``l``, with w_kl != 0."""
        out = []
        for j, k, w in self.edges:
            if w == 0:
                continue
            if j == l:
                out.append((k, w))
            elif k == l:
                out.append((j, w))
        return sorted(out)

    def degree(self, l: int) -> int:
        return len(self.neighbors(l))

    def to_json(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges], "onsite": list(self.onsite)}

    @classmethod
    def from_json(cls, data: dict) -> "IqpGraph":
        try:
            return cls(int(data["n"]), tuple(tuple(e) for e in data.get("edges", [])),
                       tuple(data.get("onsite", [])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed IQP graph JSON: {exc}") from exc


@dataclass(frozen=True)
class LatticeSpec:
    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValidationError("lattice dimensions must be positive")

    @property
    def n(self) -> int:
        return self.rows * self.cols

    def site(self, r: int, c: int) -> int:
        return r * self.cols + c

    def edges(self) -> list[tuple[int, int]]:
        out = []
        for r in range(self.rows):
            for c in range(self.cols):
                if c + 1 < self.cols:
                    out.append((self.site(r, c), self.site(r, c + 1)))
                if r + 1 < self.rows:
                    out.append((self.site(r, c), self.site(r + 1, c)))
        return out

    def interior(self) -> list[int]:
        return [self.site(r, c) for r in range(1, self.rows - 1) for c in range(1, self.cols - 1)]

    def graph(self, w: float = 2.0, v: float = 2.0) -> IqpGraph:
        return IqpGraph(self.n, tuple((j, k, w) for j, k in self.edges()), (v,) * self.n)


def build_iqp(graph: IqpGraph) -> CircuitIR:
    """Commuting X-basis factors exp(i pi/8 w X_j X_k) and exp(i pi/8 v X_k)."""
    gates = [Gate("EXPXX", (j, k), (np.pi / 8 * w,)) for j, k, w in graph.edges if w != 0]
    gates += [Gate("EXPX", (k,), (np.pi / 8 * v,)) for k, v in enumerate(graph.onsite) if v != 0]
    if not gates:
        gates = [Gate("I", (0,))]
    return CircuitIR(graph.n, tuple(gates))


def build_u2d(lattice: LatticeSpec) -> CircuitIR:
    """exp[i pi/4 (sum_edges X_j X_k + sum_k X_k)] on a rows x cols grid."""
    return build_iqp(lattice.graph())


@dataclass(frozen=True)
class ProductInput:
    theta: tuple[float, ...]
    x: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "theta", tuple(float(t) for t in self.theta))
        object.__setattr__(self, "x", tuple(int(b) for b in self.x))
        if len(self.theta) != len(self.x) or not self.x:
            raise ValidationError("theta and x must be non-empty and of equal length")
        if any(b not in (0, 1) for b in self.x):
            raise ValidationError("x entries must be bits")

    @property
    def n(self) -> int:
        return len(self.x)

    @classmethod
    def zeros(cls, n: int) -> "ProductInput":
        return cls((0.0,) * n, (0,) * n)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator,
               angles: Sequence[float] = DEFAULT_ANGLES) -> "ProductInput":
        theta = tuple(float(angles[i]) for i in rng.integers(len(angles), size=n))
        return cls(theta, tuple(int(b) for b in rng.integers(2, size=n)))

    def check_angles(self, angles: Sequence[float] = DEFAULT_ANGLES) -> None:
        for t in self.theta:
            if not any(np.isclose(t, a) for a in angles):
                raise ValidationError(f"angle {t} not in the allowed set {tuple(angles)}")


def build_input_state(p: ProductInput) -> StateVector:
    """Normalized product of (|+> + (-1)^x e^{i theta} |->) over qubits."""
    psi = np.ones(1, dtype=complex)
    for theta, bit in zip(p.theta, p.x):
        c = (-1) ** bit * np.exp(1j * theta)
        psi = np.kron(psi, np.array([(1 + c) / 2, (1 - c) / 2]))
    return StateVector(psi, normalize=True)


def conjugate_z(l: int, graph: IqpGraph, basis: str = "z") -> PauliSum:
    """U^dag Z_l U for U = build_iqp(graph), expanded into Pauli strings.

    Uses U^dag Z_l U = Z_l cos(pi/4 H_l) - Y_l sin(pi/4 H_l) with
    H_l = v_l + sum_k w_kl X_k. Each commuting X_k factor of exp(i pi/4 H_l)
    branches into a cos (identity) and i sin (X_k) part.

    ``basis="x"`` returns the Hadamard-conjugated form, with the roles of X
    and Z exchanged.
    """
    if not 0 <= l < graph.n:
        raise ValidationError(f"qubit {l} out of range for n={graph.n}")
    if basis not in ("z", "x"):
        raise ValidationError("basis must be 'z' or 'x'")
    branches: list[tuple[complex, tuple[int, ...]]] = [(np.exp(0.25j * np.pi * graph.onsite[l]), ())]
    for k, w in graph.neighbors(l):
        a = 0.25 * np.pi * w
        c, s = np.cos(a), np.sin(a)
        branches = [b for coef, S in branches for b in ((coef * c, S), (coef * 1j * s, S + (k,)))]
    terms = []
    for coef, S in branches:
        for letter, value in (("Z", coef.real), ("Y", -coef.imag)):
            if abs(value) <= 1e-12:
                continue
            chars = ["I"] * graph.n
            chars[l] = letter
            for k in S:
                chars[k] = "X"
            terms.append((value, "".join(chars)))
    out = PauliSum(graph.n, tuple(terms)).simplify()
    return out.hadamard_conjugate() if basis == "x" else out
