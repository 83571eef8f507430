"""Exponential fast-forwarding of diagonalizable Hamiltonians.

The circuit maps U^dag|z> to |z>, writes an a-bit approximation of
f(z) T mod 2 pi into an ancilla register, applies the phase, uncomputes the
register and maps back. Ancillas are not materialized: uncomputation of a
deterministic f is exact, so the net action on the system is
U^dag diag(exp(-i phi~_z)) U.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import ValidationError
from .hamiltonian import DiagonalizableHamiltonian
from .linalg import eigendecompose, operator_norm_distance

_TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class FFParams:
    T: float
    a: int
    rounding: str = "floor"

    def __post_init__(self):
        if not self.T > 0:
            raise ValidationError("evolution time must be positive")
        if int(self.a) != self.a or self.a < 1:
            raise ValidationError("phase register needs at least one bit")
        if self.rounding not in ("floor", "nearest"):
            raise ValidationError("rounding must be 'floor' or 'nearest'")

    @property
    def bound(self) -> float:
        """Per-eigenvalue phase error guaranteed by the a-bit register."""
        scale = 1.0 if self.rounding == "floor" else 0.5
        return scale * _TWO_PI * 2.0 ** (-self.a)


def ff_phases(H: DiagonalizableHamiltonian, p: FFParams) -> tuple[np.ndarray, np.ndarray]:
    """Exact phases f(z) T mod 2 pi and their a-bit register values."""
    with mpmath.workdps(40):
        two_pi = 2 * mpmath.pi
        T = mpmath.mpf(p.T)
        exact = []
        for v in H.eigen.exact_values():
            phase = mpmath.fmod(mpmath.mpf(v.numerator) / v.denominator * T, two_pi)
            exact.append(phase)
        steps = 1 << p.a
        approx = []
        for phase in exact:
            units = phase / two_pi * steps
            k = mpmath.floor(units) if p.rounding == "floor" else mpmath.nint(units)
            approx.append(two_pi * k / steps)
        return (np.array([float(x) for x in exact]), np.array([float(x) for x in approx]))


def build_ff_unitary(H: DiagonalizableHamiltonian, p: FFParams) -> np.ndarray:
    """U' = U^dag diag(exp(-i phi~_z)) U on the system register."""
    _, approx = ff_phases(H, p)
    U = H.diagonalizer.unitary()
    return U.conj().T @ (np.exp(-1j * approx)[:, None] * U)


def exact_evolution(H: DiagonalizableHamiltonian, T: float) -> np.ndarray:
    """exp(-i H T) from an eigendecomposition of the local operator."""
    dec = eigendecompose(H.operator())
    V = dec.eigenvectors
    return (V * np.exp(-1j * dec.eigenvalues * T)) @ V.conj().T


@dataclass(frozen=True)
class FFReport:
    distance: float
    bound: float
    passed: bool
    build_seconds: float

    def to_json(self) -> dict:
        return {"distance": self.distance, "bound": self.bound, "pass": self.passed,
                "build_seconds": self.build_seconds}


def verify_ff(H: DiagonalizableHamiltonian, p: FFParams) -> FFReport:
    """Compare U' with exp(-i H T) in operator norm against 2 pi 2^-a."""
    start = time.perf_counter()
    U_ff = build_ff_unitary(H, p)
    elapsed = time.perf_counter() - start
    distance = operator_norm_distance(U_ff, exact_evolution(H, p.T))
    return FFReport(distance, p.bound, distance <= p.bound, elapsed)
