"""Exact complex linear algebra used as the oracle layer.

States, Hermitian operators, eigendecompositions and distribution distances.
Operators up to ``NumericPolicy.dense_limit`` are stored dense; larger ones are
kept in CSR form and only their low-lying spectrum is computed iteratively.
"""
from __future__ import annotations

import contextlib
import dataclasses
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ResourceError, ValidationError


@dataclass(frozen=True)
class NumericPolicy:
    normalization_tol: float = 1e-12
    hermitian_tol: float = 1e-12
    reconstruction_tol: float = 1e-10
    degeneracy_tol: float = 1e-9
    dense_limit: int = 2**10
    full_spectrum_limit: int = 2**12
    max_dim: int = 2**14


_POLICY = NumericPolicy()


def policy() -> NumericPolicy:
    return _POLICY


@contextlib.contextmanager
def numeric_policy(**overrides) -> Iterator[NumericPolicy]:
    """Temporarily replace fields of the global numeric policy."""
    global _POLICY
    saved = _POLICY
    _POLICY = dataclasses.replace(saved, **overrides)
    try:
        yield _POLICY
    finally:
        _POLICY = saved


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def _check_dim(dim: int) -> None:
    if dim > policy().max_dim:
        raise ResourceError(f"dimension {dim} exceeds the guard {policy().max_dim}")


class StateVector:
    """Unit-norm amplitude vector over ``n`` qubits (qubit 0 is the most significant bit).

    Vectors on subspaces whose dimension is not a power of two are allowed;
    their ``n`` is None.
    """

    __slots__ = ("n", "amplitudes")

    def __init__(self, amplitudes, normalize: bool = False):
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        size = amps.size
        if size < 1:
            raise ValidationError("state vector is empty")
        n = size.bit_length() - 1
        if (1 << n) != size:
            n = None
        norm = np.linalg.norm(amps)
        if normalize:
            if norm == 0:
                raise ValidationError("cannot normalize the zero vector")
            amps = amps / norm
        elif abs(norm**2 - 1) > policy().normalization_tol:
            raise ValidationError(f"state norm^2 is {norm**2!r}, expected 1")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "amplitudes", _readonly(amps))

    def __setattr__(self, name, value):
        raise AttributeError("StateVector is immutable")

    @classmethod
    def basis(cls, n: int, index: int) -> "StateVector":
        if not 0 <= index < (1 << n):
            raise ValidationError(f"basis index {index} out of range for {n} qubits")
        amps = np.zeros(1 << n, dtype=complex)
        amps[index] = 1.0
        return cls(amps)

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "StateVector":
        return cls.basis(len(bits), bits_to_index(bits))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def overlap(self, other: "StateVector") -> complex:
        """Inner product <self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __repr__(self) -> str:
        return f"StateVector(n={self.n})" if self.n is not None else f"StateVector(dim={self.dim})"


def bits_to_index(bits: Sequence[int]) -> int:
    index = 0
    for b in bits:
        if b not in (0, 1):
            raise ValidationError(f"bit value {b!r} is not 0 or 1")
        index = (index << 1) | int(b)
    return index


def index_to_bits(index: int, n: int) -> tuple[int, ...]:
    return tuple((index >> (n - 1 - j)) & 1 for j in range(n))


class HermitianOperator:
    """Hermitian matrix, dense below the policy's dense limit and CSR above it."""

    __slots__ = ("_matrix", "dim")

    def __init__(self, matrix, check: bool = True):
        if sp.issparse(matrix):
            m = sp.csr_matrix(matrix, dtype=complex)
        else:
            m = np.asarray(matrix, dtype=complex)
            if m.ndim != 2:
                raise ValidationError("operator must be a 2-D matrix")
        if m.shape[0] != m.shape[1]:
            raise ValidationError(f"operator is not square: {m.shape}")
        dim = m.shape[0]
        _check_dim(dim)
        if dim > policy().dense_limit:
            m = sp.csr_matrix(m)
        elif sp.issparse(m):
            m = m.toarray()
        if check:
            diff = m - m.conj().T
            err = abs(diff).max() if diff.shape[0] else 0.0
            if sp.issparse(diff):
                err = float(err) if diff.nnz else 0.0
            if err > policy().hermitian_tol:
                raise ValidationError(f"operator is not Hermitian (max |H - H^dag| = {err:.3g})")
        if isinstance(m, np.ndarray):
            m.setflags(write=False)
        object.__setattr__(self, "_matrix", m)
        object.__setattr__(self, "dim", dim)

    def __setattr__(self, name, value):
        raise AttributeError("HermitianOperator is immutable")

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self._matrix)

    @property
    def n_qubits(self) -> int | None:
        n = self.dim.bit_length() - 1
        return n if (1 << n) == self.dim else None

    def dense(self) -> np.ndarray:
        if self.is_sparse:
            if self.dim > policy().full_spectrum_limit:
                raise ResourceError(f"refusing to densify a {self.dim}-dimensional operator")
            return self._matrix.toarray()
        return self._matrix

    def sparse(self) -> sp.csr_matrix:
        return self._matrix if self.is_sparse else sp.csr_matrix(self._matrix)

    def apply(self, vector) -> np.ndarray:
        v = vector.amplitudes if isinstance(vector, StateVector) else np.asarray(vector)
        return np.asarray(self._matrix @ v)

    def expectation(self, state: StateVector) -> float:
        return float(np.real(np.vdot(state.amplitudes, self.apply(state))))

    def __add__(self, other: "HermitianOperator") -> "HermitianOperator":
        if other.dim != self.dim:
            raise ValidationError("dimension mismatch")
        return HermitianOperator(self._sum_matrix(other, 1.0), check=False)

    def __sub__(self, other: "HermitianOperator") -> "HermitianOperator":
        if other.dim != self.dim:
            raise ValidationError("dimension mismatch")
        return HermitianOperator(self._sum_matrix(other, -1.0), check=False)

    def _sum_matrix(self, other, sign):
        if self.is_sparse or other.is_sparse:
            return self.sparse() + sign * other.sparse()
        return self._matrix + sign * other._matrix

    def scale(self, factor: float, shift: float = 0.0) -> "HermitianOperator":
        """Return ``factor * H + shift * I``."""
        if self.is_sparse:
            m = factor * self._matrix + shift * sp.identity(self.dim, dtype=complex, format="csr")
        else:
            m = factor * self._matrix + shift * np.eye(self.dim)
        return HermitianOperator(m, check=False)

    def restrict(self, basis: np.ndarray) -> "HermitianOperator":
        """Compress onto the span of the orthonormal columns of ``basis``: B^dag H B."""
        b = np.asarray(basis, dtype=complex)
        m = b.conj().T @ np.asarray(self._matrix @ b)
        return HermitianOperator((m + m.conj().T) / 2, check=False)

    @classmethod
    def zeros(cls, dim: int) -> "HermitianOperator":
        if dim > policy().dense_limit:
            return cls(sp.csr_matrix((dim, dim), dtype=complex), check=False)
        return cls(np.zeros((dim, dim), dtype=complex), check=False)

    def __repr__(self) -> str:
        kind = "sparse" if self.is_sparse else "dense"
        return f"HermitianOperator(dim={self.dim}, {kind})"


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues and orthonormal eigenvector columns.

    ``complete`` is False when only the low-lying part of the spectrum was
    computed by an iterative solver.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    complete: bool = True

    def reconstruction_error(self, H: HermitianOperator) -> float:
        if not self.complete:
            raise ValidationError("reconstruction needs the complete spectrum")
        V = self.eigenvectors
        approx = (V * self.eigenvalues) @ V.conj().T
        return float(np.linalg.norm(H.dense() - approx, 2))

    def orthonormality_error(self) -> float:
        V = self.eigenvectors
        return float(np.abs(V.conj().T @ V - np.eye(V.shape[1])).max())

    def distinct_levels(self, tol: float | None = None) -> list[tuple[float, int]]:
        """Group eigenvalues closer than ``tol`` into (level, multiplicity) pairs."""
        tol = policy().degeneracy_tol if tol is None else tol
        levels: list[list] = []
        for e in self.eigenvalues:
            if levels and e - levels[-1][2] <= tol:
                levels[-1][1] += 1
                levels[-1][2] = e
            else:
                levels.append([e, 1, e])
        return [(float(first), count) for first, count, _ in levels]


def eigendecompose(H: HermitianOperator, k: int | None = None) -> SpectralDecomposition:
    """Eigendecomposition with ascending eigenvalues.

    Dense operators are fully diagonalized. Sparse operators get their ``k``
    lowest eigenpairs (default 6) from Lanczos unless ``k`` covers the whole
    dimension and the full-spectrum limit allows a dense solve. Lanczos may
    return fewer copies of a degenerate level than its multiplicity.
    """
    if not isinstance(H, HermitianOperator):
        H = HermitianOperator(H)
    dim = H.dim
    if not H.is_sparse or (k is not None and k >= dim - 1 and dim <= policy().full_spectrum_limit):
        vals, vecs = scipy.linalg.eigh(H.dense())
        return SpectralDecomposition(_readonly(vals), _readonly(vecs), complete=True)
    k = 6 if k is None else k
    A = H.sparse()
    # Lanczos misses eigenvectors lying exactly in the kernel, so solve for the
    # positive definite A + shift*I (Gershgorin bound) and shift back
    shift = 1.0 + float(abs(A).sum(axis=1).max())
    vals, vecs = spla.eigsh(A + shift * sp.identity(dim, format="csr"), k=min(k, dim - 2),
                            which="SA", tol=1e-14)
    vals = np.real(np.einsum("ij,ij->j", vecs.conj(), A @ vecs))
    order = np.argsort(vals)
    return SpectralDecomposition(_readonly(vals[order]), _readonly(vecs[:, order]), complete=False)


def _as_matrix(A) -> np.ndarray | sp.spmatrix:
    if isinstance(A, HermitianOperator):
        return A.sparse() if A.is_sparse else A.dense()
    if sp.issparse(A):
        return A
    return np.asarray(A, dtype=complex)


def operator_norm_distance(A, B) -> float:
    """Largest singular value of ``A - B``."""
    a, b = _as_matrix(A), _as_matrix(B)
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    if sp.issparse(diff):
        if diff.nnz == 0:
            return 0.0
        if diff.shape[0] <= policy().full_spectrum_limit:
            diff = diff.toarray()
        else:
            return float(spla.svds(diff, k=1, return_singular_vectors=False)[0])
    return float(np.linalg.norm(diff, 2))


class DiscreteDistribution:
    """Non-negative probability vector summing to one."""

    __slots__ = ("probabilities",)

    def __init__(self, probabilities, check: bool = True):
        p = np.asarray(probabilities, dtype=float).reshape(-1)
        tol = policy().normalization_tol
        if check:
            if p.size == 0:
                raise ValidationError("empty distribution")
            if (p < -tol).any():
                raise ValidationError("distribution has negative entries")
            total = p.sum()
            if abs(total - 1) > tol:
                raise ValidationError(f"distribution sums to {total!r}, expected 1")
        p = np.clip(p, 0.0, None)
        object.__setattr__(self, "probabilities", _readonly(p))

    def __setattr__(self, name, value):
        raise AttributeError("DiscreteDistribution is immutable")

    def __len__(self) -> int:
        return self.probabilities.size

    def __getitem__(self, i):
        return self.probabilities[i]

    def __repr__(self) -> str:
        return f"DiscreteDistribution(size={len(self)})"


def _probs(p) -> np.ndarray:
    if isinstance(p, DiscreteDistribution):
        return p.probabilities
    return np.asarray(p, dtype=float).reshape(-1)


def l1_distance(p, q) -> float:
    """Un-halved distance sum_i |p_i - q_i| (the convention all bounds are checked in)."""
    a, b = _probs(p), _probs(q)
    if a.shape != b.shape:
        raise ValidationError(f"support sizes differ: {a.size} vs {b.size}")
    return float(np.abs(a - b).sum())


def total_variation(p, q) -> float:
    """Halved distance, in [0, 1]."""
    return 0.5 * l1_distance(p, q)
