"""Feynman-Kitaev circuit-to-Hamiltonian compilation with a binary clock.

Basis ordering is system-major: index = x * 2^c + t for a c-qubit clock.
Clock values t > T appear in no term; they are exact zero-energy spectators
and ``physical`` projects them away.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .circuit import CircuitIR, MarginalSpec, simulate, simulate_prefixes
from .errors import ValidationError
from .linalg import HermitianOperator, StateVector, eigendecompose, policy


@dataclass(frozen=True)
class ClockRegister:
    T: int

    def __post_init__(self):
        if self.T < 1:
            raise ValidationError("clock needs T >= 1")

    @property
    def qubits(self) -> int:
        return max(1, math.ceil(math.log2(self.T + 1)))

    @property
    def dim(self) -> int:
        return 1 << self.qubits

    def projector(self, t: int) -> sp.csr_matrix:
        return self.transition(t, t)

    def transition(self, to: int, frm: int) -> sp.csr_matrix:
        """|to><frm| on the clock register."""
        return sp.csr_matrix(([1.0], ([to], [frm])), shape=(self.dim, self.dim))


def _sys_dim(n: int) -> int:
    return 1 << n


def build_hprop(circuit: CircuitIR) -> HermitianOperator:
    """1/2 sum_t [I|t><t| + I|t-1><t-1| - U_t|t><t-1| - U_t^dag|t-1><t|]."""
    clock = ClockRegister(circuit.T)
    n = circuit.n
    eye = sp.identity(_sys_dim(n), dtype=complex, format="csr")
    H = sp.csr_matrix((_sys_dim(n) * clock.dim,) * 2, dtype=complex)
    for t, gate in enumerate(circuit.gates, start=1):
        U = sp.csr_matrix(gate.full_matrix(n))
        H = H + 0.5 * (
            sp.kron(eye, clock.projector(t)) + sp.kron(eye, clock.projector(t - 1))
            - sp.kron(U, clock.transition(t, t - 1)) - sp.kron(U.conj().T, clock.transition(t - 1, t))
        )
    return HermitianOperator(H.tocsr(), check=False)


def _clock_zero_diagonal(n: int, clock: ClockRegister, cost: np.ndarray) -> HermitianOperator:
    diag = np.zeros(_sys_dim(n) * clock.dim)
    diag[::clock.dim] = cost
    return HermitianOperator(sp.diags(diag.astype(complex), format="csr"), check=False)


def build_hinit(n: int, clock: ClockRegister) -> HermitianOperator:
    """sum_i |1><1|_i (x) |0><0|_c: Hamming weight of x on the t = 0 sector."""
    x = np.arange(_sys_dim(n))
    weight = np.array([bin(v).count("1") for v in x], dtype=float)
    return _clock_zero_diagonal(n, clock, weight)


def build_hpen(spec: MarginalSpec, n: int, clock: ClockRegister) -> HermitianOperator:
    """sum_i |not b_i><not b_i|_{k_i} (x) |0><0|_c: violated marginal bits at t = 0."""
    spec.validate(n)
    x = np.arange(_sys_dim(n))
    violations = np.zeros(x.size)
    for k, b in zip(spec.positions, spec.bits):
        violations += ((x >> (n - 1 - k)) & 1) != b
    return _clock_zero_diagonal(n, clock, violations)


@dataclass(frozen=True)
class HistoryState:
    y: int
    vector: StateVector


def history_state(circuit: CircuitIR, y: int) -> HistoryState:
    """(T+1)^{-1/2} sum_t U_t ... U_1 |y> (x) |t>."""
    clock = ClockRegister(circuit.T)
    out = np.zeros((_sys_dim(circuit.n), clock.dim), dtype=complex)
    for t, psi in enumerate(simulate_prefixes(circuit, int(y))):
        out[:, t] = psi.amplitudes
    return HistoryState(int(y), StateVector(out.reshape(-1) / math.sqrt(circuit.T + 1)))


def clock_state(n: int, clock: ClockRegister, x: int, t: int) -> StateVector:
    """|x> (x) |t>_c in the full system (x) clock space."""
    if not 0 <= t <= clock.T:
        raise ValidationError(f"clock value {t} outside 0..{clock.T}")
    return StateVector.basis(n + clock.qubits, int(x) * clock.dim + t)


@dataclass(frozen=True)
class FKOperator:
    circuit: CircuitIR
    prop: HermitianOperator
    init: HermitianOperator | None = None
    pen: HermitianOperator | None = None
    marginal: MarginalSpec | None = None
    clock: ClockRegister = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "clock", ClockRegister(self.circuit.T))

    @property
    def n(self) -> int:
        return self.circuit.n

    @property
    def dim(self) -> int:
        return self.prop.dim

    def total(self) -> HermitianOperator:
        H = self.prop
        for part in (self.init, self.pen):
            if part is not None:
                H = H + part
        return H

    def physical_indices(self) -> np.ndarray:
        """Full-space indices of the |x>|t> states with t <= T, x-major."""
        x = np.arange(_sys_dim(self.n))[:, None]
        t = np.arange(self.clock.T + 1)[None, :]
        return (x * self.clock.dim + t).reshape(-1)

    def physical(self, H: HermitianOperator | None = None) -> HermitianOperator:
        """Restriction of ``H`` (default: the total operator) to the t <= T sector."""
        H = self.total() if H is None else H
        idx = self.physical_indices()
        return HermitianOperator(H.sparse()[idx][:, idx], check=False)

    def to_physical(self, state: StateVector) -> StateVector:
        return StateVector(state.amplitudes[self.physical_indices()])

    def input_state(self, x: int) -> StateVector:
        """|x>|T>_c in the physical sector."""
        T = self.clock.T
        v = np.zeros(_sys_dim(self.n) * (T + 1), dtype=complex)
        v[int(x) * (T + 1) + T] = 1.0
        return StateVector(v)

    def ground_labels(self) -> list[int]:
        """Inputs y whose history states span the expected zero-energy space."""
        keep = np.ones(_sys_dim(self.n), dtype=bool)
        if self.init is not None:
            keep[1:] = False
        if self.marginal is not None and len(self.marginal):
            keep &= self.marginal.mask(self.n)
        return [int(y) for y in np.flatnonzero(keep)]

    def history_basis(self, labels=None) -> np.ndarray:
        """Physical-sector history states for ``labels`` as orthonormal columns."""
        labels = self.ground_labels() if labels is None else labels
        cols = [self.to_physical(history_state(self.circuit, y).vector).amplitudes for y in labels]
        return np.array(cols).T.reshape(len(self.physical_indices()), len(cols))

    def ground_probability(self, x: int) -> float:
        """sum over ground labels y of |<x|U|y>|^2 / (T+1)."""
        amps = np.array([simulate(self.circuit, y).amplitudes[x] for y in self.ground_labels()])
        return float(np.sum(np.abs(amps) ** 2) / (self.clock.T + 1))

    def omega_basis(self, y: int) -> np.ndarray:
        """Physical-sector columns |eta_y(t)> = U_t...U_1|y>|t>, t = 0..T."""
        T = self.clock.T
        cols = np.zeros((_sys_dim(self.n) * (T + 1), T + 1), dtype=complex)
        for t, psi in enumerate(simulate_prefixes(self.circuit, int(y))):
            cols[t::T + 1, t] = psi.amplitudes
        return cols


def build_fk(circuit: CircuitIR, init: bool = True, marginal: MarginalSpec | None = None) -> FKOperator:
    clock = ClockRegister(circuit.T)
    pen = None
    if marginal is not None:
        pen = build_hpen(marginal, circuit.n, clock)
    return FKOperator(circuit, build_hprop(circuit), build_hinit(circuit.n, clock) if init else None,
                      pen, marginal)


def geometric_lemma_bound(g1: float, g2: float, delta1: float, delta2: float, cos_theta: float) -> float:
    """g1 + g2 + min(delta1, delta2) (1 - cos theta)."""
    if delta1 <= 0 or delta2 <= 0:
        raise ValidationError("both gaps must be positive")
    if not 0 <= cos_theta <= 1:
        raise ValidationError("cos(theta) must lie in [0, 1]")
    return g1 + g2 + min(delta1, delta2) * (1 - cos_theta)


def history_overlap(T: int) -> float:
    """cos(theta) between a history state and span{eta(t): t >= 1}."""
    return math.sqrt(T / (T + 1))


def path_gap(T: int) -> float:
    """Smallest nonzero eigenvalue of H_prop inside one invariant subspace."""
    return 1 - math.cos(math.pi / (T + 1))


@dataclass
class CertificationReport:
    ground_energy: float
    gap: float
    ground_dim: int
    expected_dim: int
    subspace_error: float
    pgs_expected: float
    pgs_measured: float
    penalized: list = field(default_factory=list)
    passed: bool = False

    def to_json(self) -> dict:
        return {
            "ground_energy": self.ground_energy,
            "gap": self.gap,
            "ground_dim": self.ground_dim,
            "expected_ground_dim": self.expected_dim,
            "subspace_error": self.subspace_error,
            "pgs_check": {"expected": self.pgs_expected, "measured": self.pgs_measured},
            "penalized": self.penalized,
            "pass": self.passed,
        }


def certify_ground_space(fk: FKOperator, x: int = 0, tol: float = 1e-10) -> CertificationReport:
    """Diagonalize on the physical sector and compare with the history-state prediction.

    Checks the zero ground energy, that the ground space equals the span of
    the expected history states, the ground-state probability of |x>|T>_c,
    and, with a penalty term, that every penalized subspace sits above the
    geometric-lemma bound.
    """
    H = fk.physical()
    if H.dim > policy().full_spectrum_limit:
        raise ValidationError(f"physical sector of dimension {H.dim} is too large to certify exactly")
    dec = eigendecompose(H, k=H.dim)
    vals, vecs = dec.eigenvalues, dec.eigenvectors
    ground = vals <= vals[0] + policy().degeneracy_tol
    ground_dim = int(ground.sum())
    gap = float(vals[ground_dim] - vals[0]) if ground_dim < vals.size else math.inf
    G = vecs[:, ground]
    P_ground = G @ G.conj().T
    labels = fk.ground_labels()
    B = fk.history_basis(labels)
    subspace_error = float(np.linalg.norm(P_ground - B @ B.conj().T, 2)) if labels else math.inf
    inp = fk.input_state(x).amplitudes
    measured = float(np.real(np.vdot(inp, P_ground @ inp)))
    expected = fk.ground_probability(x)
    penalized = []
    ok = abs(vals[0]) <= tol and ground_dim == len(labels) and subspace_error <= tol \
        and abs(measured - expected) <= tol
    if fk.pen is not None or fk.init is not None:
        penalized = _penalized_sectors(fk, H, set(labels), tol)
        ok = ok and all(p["pass"] for p in penalized)
    return CertificationReport(float(vals[0]), gap, ground_dim, len(labels), subspace_error,
                               expected, measured, penalized, bool(ok))


def _penalized_sectors(fk: FKOperator, H: HermitianOperator, ground: set, tol: float) -> list:
    """Lowest energy in each invariant subspace Omega_y with y outside the ground labels."""
    T = fk.clock.T
    cos_theta = history_overlap(T)
    delta1 = path_gap(T)
    out = []
    dense = H.dense()
    penalty = np.zeros(_sys_dim(fk.n) * (T + 1))
    for part in (fk.init, fk.pen):
        if part is not None:
            penalty += np.real(fk.physical(part).dense().diagonal())
    for y in range(_sys_dim(fk.n)):
        if y in ground:
            continue
        B = fk.omega_basis(y)
        HB = dense @ B
        leak = float(np.linalg.norm(HB - B @ (B.conj().T @ HB), 2))
        lowest = float(np.linalg.eigvalsh(B.conj().T @ HB)[0])
        cost = float(penalty[y * (T + 1)])
        bound = geometric_lemma_bound(0.0, 0.0, delta1, cost, cos_theta)
        out.append({"y": y, "lowest": lowest, "bound": bound, "leak": leak,
                    "pass": lowest >= bound - tol and leak <= tol})
    return out
