"""Real-weighted sums of Pauli strings."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .errors import ValidationError
from .linalg import HermitianOperator

_LETTERS = frozenset("IXYZ")


def pauli_string_matrix(string: str) -> sp.csr_matrix:
    """Sparse matrix of a Pauli string, letter 0 acting on the most significant qubit."""
    n = len(string)
    xmask = zmask = 0
    n_y = 0
    for ch in string:
        xmask <<= 1
        zmask <<= 1
        if ch in "XY":
            xmask |= 1
        if ch in "ZY":
            zmask |= 1
        n_y += ch == "Y"
    idx = np.arange(1 << n, dtype=np.int64)
    parity = np.zeros(idx.size, dtype=np.int64)
    bits = idx & zmask
    while bits.any():
        parity ^= bits & 1
        bits >>= 1
    phase = (1j**n_y) * (1 - 2 * parity)
    return sp.csr_matrix((phase, (idx ^ xmask, idx)), shape=(1 << n, 1 << n))


@dataclass(frozen=True)
class PauliSum:
    """sum_i c_i P_i with real c_i; Hermitian by construction."""

    n: int
    terms: tuple[tuple[float, str], ...]

    def __post_init__(self):
        clean = []
        for coef, s in self.terms:
            s = s.upper()
            if len(s) != self.n or not set(s) <= _LETTERS:
                raise ValidationError(f"bad Pauli string {s!r} for n={self.n}")
            c = float(coef)
            if not np.isfinite(c):
                raise ValidationError("Pauli coefficients must be finite reals")
            clean.append((c, s))
        object.__setattr__(self, "terms", tuple(clean))

    @classmethod
    def single(cls, n: int, ops: dict[int, str], coef: float = 1.0) -> "PauliSum":
        letters = ["I"] * n
        for q, ch in ops.items():
            letters[q] = ch
        return cls(n, ((coef, "".join(letters)),))

    @classmethod
    def identity(cls, n: int, coef: float = 1.0) -> "PauliSum":
        return cls(n, ((coef, "I" * n),))

    def simplify(self, tol: float = 1e-12) -> "PauliSum":
        acc: dict[str, float] = defaultdict(float)
        for c, s in self.terms:
            acc[s] += c
        return PauliSum(self.n, tuple((c, s) for s, c in sorted(acc.items()) if abs(c) > tol))

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if other.n != self.n:
            raise ValidationError("qubit counts differ")
        return PauliSum(self.n, self.terms + other.terms)

    def scale(self, factor: float) -> "PauliSum":
        return PauliSum(self.n, tuple((factor * c, s) for c, s in self.terms))

    @staticmethod
    def locality_of(string: str) -> int:
        return sum(ch != "I" for ch in string)

    def locality(self) -> int:
        return max((self.locality_of(s) for _, s in self.terms), default=0)

    def support(self) -> set[int]:
        return {q for _, s in self.terms for q, ch in enumerate(s) if ch != "I"}

    def norm_bound(self) -> float:
        """Triangle-inequality bound sum_i |c_i| >= ||H||."""
        return float(sum(abs(c) for c, _ in self.terms))

    def hadamard_conjugate(self) -> "PauliSum":
        """H^{(x)n} P H^{(x)n}: swaps X and Z and flips the sign of each Y."""
        swap = str.maketrans("XZ", "ZX")
        out = []
        for c, s in self.terms:
            out.append(((-1) ** s.count("Y") * c, s.translate(swap)))
        return PauliSum(self.n, tuple(out))

    def sparse(self) -> sp.csr_matrix:
        dim = 1 << self.n
        m = sp.csr_matrix((dim, dim), dtype=complex)
        for c, s in self.terms:
            m = m + c * pauli_string_matrix(s)
        return m

    def dense(self) -> np.ndarray:
        return self.sparse().toarray()

    def to_operator(self) -> HermitianOperator:
        return HermitianOperator(self.sparse(), check=False)

    def to_json(self) -> list:
        return [[c, s] for c, s in self.terms]

    @classmethod
    def from_json(cls, n: int, terms: Iterable) -> "PauliSum":
        try:
            return cls(n, tuple((float(c), str(s)) for c, s in terms))
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"terms must be [coefficient, string] pairs: {exc}") from exc
