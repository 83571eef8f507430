"""Quantum-diagonalizable Hamiltonians H = U^dag diag(f) U and spectral utilities."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.sparse.linalg as spla

from .circuit import CircuitIR, Gate
from .errors import ValidationError
from .iqp import LatticeSpec, build_u2d, conjugate_z
from .linalg import HermitianOperator, eigendecompose, policy
from .pauli import PauliSum


def _exact(w) -> Fraction:
    # floats convert to their exact binary value, so dyadic weights stay exact
    return w if isinstance(w, Fraction) else Fraction(w)


class EigenFunction:
    """Linear eigenvalue function f(z) = sum_j w_j z_j with exact rational weights.

    Bit ``z_j`` is qubit ``j``, i.e. bit n-1-j of the integer ``z``.
    """

    def __init__(self, weights: Sequence):
        self.weights: tuple[Fraction, ...] = tuple(_exact(w) for w in weights)
        if not self.weights:
            raise ValidationError("need at least one weight")
        lo = sum((w for w in self.weights if w < 0), Fraction(0))
        hi = sum((w for w in self.weights if w > 0), Fraction(0))
        # tolerate float round-off from normalizing weights
        if lo < -1e-12 or hi > 1 + 1e-12:
            raise ValidationError(
                f"f(z) ranges over [{float(lo)}, {float(hi)}]; weights must keep it inside [0, 1]"
            )
        self._inverse: dict[Fraction, int] | None = None

    @property
    def n(self) -> int:
        return len(self.weights)

    def exact(self, z: int) -> Fraction:
        n = self.n
        return sum((w for j, w in enumerate(self.weights) if (z >> (n - 1 - j)) & 1), Fraction(0))

    def __call__(self, z: int) -> float:
        return float(self.exact(z))

    def exact_values(self) -> list[Fraction]:
        return [self.exact(z) for z in range(1 << self.n)]

    def values(self) -> np.ndarray:
        return np.array([float(v) for v in self.exact_values()])

    @property
    def invertible(self) -> bool:
        return self.inverse_map() is not None

    def inverse_map(self) -> dict[Fraction, int] | None:
        if self._inverse is None:
            vals = self.exact_values()
            table = {v: z for z, v in enumerate(vals)}
            self._inverse = table if len(table) == len(vals) else {}
        return self._inverse or None

    def inverse(self, value) -> int:
        table = self.inverse_map()
        if table is None:
            raise ValidationError("eigenvalue function is not injective")
        try:
            return table[_exact(value)]
        except KeyError:
            raise ValidationError(f"{value} is not a value of f") from None

    def is_zero(self) -> bool:
        return all(w == 0 for w in self.weights)


def u_weights(n: int) -> list[Fraction]:
    """Dyadic preset u_j = 2^-(j+1), giving f(z) = z / 2^n."""
    return [Fraction(1, 1 << (j + 1)) for j in range(n)]


def v_weights(n: int) -> list[Fraction]:
    """Uniform preset v_j = 1/n."""
    return [Fraction(1, n)] * n


@dataclass(frozen=True)
class DiagonalizableHamiltonian:
    diagonalizer: CircuitIR
    eigen: EigenFunction
    pauli_form: PauliSum | None = None

    def __post_init__(self):
        if self.eigen.n != self.diagonalizer.n:
            raise ValidationError("eigenvalue function and diagonalizer act on different qubit counts")
        if self.pauli_form is not None and self.pauli_form.n != self.n:
            raise ValidationError("Pauli form acts on a different qubit count")

    @property
    def n(self) -> int:
        return self.diagonalizer.n

    def diagonal_form(self) -> np.ndarray:
        """Dense U^dag diag(f) U."""
        U = self.diagonalizer.unitary()
        return U.conj().T @ (self.eigen.values()[:, None] * U)

    def operator(self) -> HermitianOperator:
        """The operator from its local Pauli expansion when known, else from (U, f)."""
        if self.pauli_form is not None:
            return self.pauli_form.to_operator()
        m = self.diagonal_form()
        return HermitianOperator((m + m.conj().T) / 2, check=False)

    def consistency_error(self) -> float:
        """||dense(pauli_form) - U^dag diag(f) U|| in operator norm."""
        if self.pauli_form is None:
            raise ValidationError("no Pauli form to compare against")
        return float(np.linalg.norm(self.pauli_form.dense() - self.diagonal_form(), 2))

    def exact_projection(self, lo, hi) -> np.ndarray:
        """sum over z with f(z) in [lo, hi] of U^dag |z><z| U."""
        lo, hi = _exact(lo), _exact(hi)
        U = self.diagonalizer.unitary()
        rows = [z for z, v in enumerate(self.eigen.exact_values()) if lo <= v <= hi]
        sub = U[rows, :]
        return sub.conj().T @ sub


def build_h2d(lattice: LatticeSpec, weights: Sequence, basis: str = "z") -> DiagonalizableHamiltonian:
    """sum_j w_j U2D^dag n_j U2D with n_j = (1 - Z_j)/2, plus its local Pauli form.

    ``basis="x"`` applies a global Hadamard so that the local terms read
    X_j prod Z_k instead of Z_j prod X_k; the diagonalizer absorbs the Hadamards.
    """
    n = lattice.n
    if len(weights) != n:
        raise ValidationError(f"got {len(weights)} weights for {n} sites")
    eigen = EigenFunction(weights)
    graph = lattice.graph()
    pauli = PauliSum.identity(n, 0.0)
    for j, w in enumerate(eigen.weights):
        if w == 0:
            continue
        half = float(w) / 2
        pauli = pauli + PauliSum.identity(n, half) + conjugate_z(j, graph).scale(-half)
    pauli = pauli.simplify()
    U = build_u2d(lattice)
    if basis == "x":
        pauli = pauli.hadamard_conjugate()
        U = CircuitIR(n, tuple(Gate("H", (q,)) for q in range(n)) + U.gates)
    elif basis != "z":
        raise ValidationError("basis must be 'z' or 'x'")
    return DiagonalizableHamiltonian(U, eigen, pauli)


def operator_norm(H: HermitianOperator) -> float:
    if H.is_sparse:
        return float(abs(spla.eigsh(H.sparse(), k=1, which="LM", return_eigenvectors=False)[0]))
    return float(np.abs(np.linalg.eigvalsh(H.dense())).max(initial=0.0))


def rescale_to_unit(H, kappa: float, psd: bool = False) -> HermitianOperator:
    """(H/kappa + 1)/2, whose spectrum lies in [0, 1] when kappa >= ||H||.

    With ``psd=True`` the operator is only divided by ``kappa``; this keeps a
    zero ground energy at zero for positive semidefinite inputs.
    """
    if isinstance(H, PauliSum):
        H = H.to_operator()
    if kappa <= 0:
        raise ValidationError("kappa must be positive")
    norm = operator_norm(H)
    if kappa < norm - policy().reconstruction_tol:
        raise ValidationError(f"kappa={kappa} is below ||H|| = {norm}")
    if psd:
        if eigendecompose(H, k=1).eigenvalues[0] < -policy().reconstruction_tol:
            raise ValidationError("psd rescaling needs a positive semidefinite operator")
        return H.scale(1 / kappa)
    return H.scale(0.5 / kappa, 0.5)


def spectral_projection(H: HermitianOperator, lo: float, hi: float) -> HermitianOperator:
    """Projector onto eigenvectors with eigenvalue in the closed interval [lo, hi]."""
    if lo > hi:
        raise ValidationError("interval lower end exceeds upper end")
    dec = eigendecompose(H)
    if not dec.complete:
        raise ValidationError("spectral projection needs the complete spectrum")
    tol = policy().degeneracy_tol
    keep = (dec.eigenvalues >= lo - tol) & (dec.eigenvalues <= hi + tol)
    V = dec.eigenvectors[:, keep]
    P = V @ V.conj().T
    return HermitianOperator((P + P.conj().T) / 2, check=False)


@dataclass(frozen=True)
class GapReport:
    ground_energy: float
    gap: float
    ground_multiplicity: int
    flat: bool = False


def spectral_gap(H: HermitianOperator) -> GapReport:
    """Ground energy and distance to the next distinct level.

    A spectrum with a single distinct level reports ``gap = inf`` and
    ``flat=True``.
    """
    k = 6
    while True:
        dec = eigendecompose(H, k=k)
        levels = dec.distinct_levels()
        if len(levels) >= 2 or dec.complete or k >= H.dim - 2:
            break
        k *= 2
    if len(levels) < 2:
        return GapReport(levels[0][0], math.inf, levels[0][1], flat=True)
    return GapReport(levels[0][0], levels[1][0] - levels[0][0], levels[0][1])
