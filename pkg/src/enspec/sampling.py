"""Binned energy-measurement distributions, the sampler built from a
diagonalizing circuit, noise injection and resolution-contract checks.

All distances are un-halved l1 sums unless a name says otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .circuit import output_distribution
from .errors import ValidationError
from .hamiltonian import DiagonalizableHamiltonian
from .iqp import ProductInput, build_input_state
from .linalg import DiscreteDistribution, HermitianOperator, StateVector, eigendecompose, policy

_EDGE_TOL = 1e-12


@dataclass(frozen=True)
class EnergyGrid:
    """Outcome set {0, 1/K, ..., 1}."""

    K: int

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ValidationError("grid size K must be a positive integer")

    @classmethod
    def from_resolution(cls, delta) -> "EnergyGrid":
        """Grid with pitch exactly ``delta``; ``delta`` must be 1/K."""
        inv = 1 / Fraction(delta)
        if inv.denominator != 1:
            raise ValidationError(f"resolution {delta} is not 1/K for an integer K")
        return cls(int(inv))

    @classmethod
    def finer_than(cls, delta: float) -> "EnergyGrid":
        """Coarsest grid whose pitch does not exceed ``delta``."""
        return cls(max(1, math.ceil(1 / delta - 1e-12)))

    @property
    def delta(self) -> Fraction:
        return Fraction(1, self.K)

    @property
    def size(self) -> int:
        return self.K + 1

    def energies(self) -> np.ndarray:
        return np.arange(self.K + 1) / self.K

    def energy(self, m: int) -> float:
        return m / self.K

    def nearest(self, values) -> np.ndarray:
        """Nearest grid index, ties toward the lower point; -delta and 1+delta fold to 0 and 1."""
        x = np.asarray(values, dtype=float) * self.K
        idx = np.ceil(x - 0.5 - 1e-9).astype(np.int64)
        return np.clip(idx, 0, self.K)


@dataclass(frozen=True)
class SamplerParams:
    delta: float
    eta: float = 1.0
    beta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.delta <= 1:
            raise ValidationError("resolution must lie in (0, 1]")
        if not 0 <= self.eta <= 1:
            raise ValidationError("confidence must lie in [0, 1]")
        if self.beta < 0:
            raise ValidationError("sampling error must be non-negative")

    @property
    def epsilon(self) -> float:
        return 1 - self.eta


@dataclass(frozen=True)
class EnergyDistribution:
    grid: EnergyGrid
    q: DiscreteDistribution

    def __post_init__(self):
        if len(self.q) != self.grid.size:
            raise ValidationError(f"distribution has {len(self.q)} entries, grid has {self.grid.size}")

    @property
    def probabilities(self) -> np.ndarray:
        return self.q.probabilities

    def mass_in(self, lo: float, hi: float) -> float:
        """Probability of outcomes E_m with lo <= E_m <= hi."""
        e = self.grid.energies()
        keep = (e >= lo - _EDGE_TOL) & (e <= hi + _EDGE_TOL)
        return float(self.probabilities[keep].sum())

    def with_probabilities(self, q) -> "EnergyDistribution":
        return EnergyDistribution(self.grid, q if isinstance(q, DiscreteDistribution) else DiscreteDistribution(q))


def _state(state) -> StateVector:
    if isinstance(state, ProductInput):
        return build_input_state(state)
    return state


def _operator(H) -> HermitianOperator:
    return H.operator() if isinstance(H, DiagonalizableHamiltonian) else H


def populations(H, state) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues of H and the weights |<v_i|psi>|^2 of ``state`` on them."""
    H = _operator(H)
    psi = _state(state)
    if psi.dim != H.dim:
        raise ValidationError(f"state dimension {psi.dim} does not match operator dimension {H.dim}")
    dec = eigendecompose(H, k=H.dim)
    weights = np.abs(dec.eigenvectors.conj().T @ psi.amplitudes) ** 2
    return dec.eigenvalues, weights


def exact_energy_distribution(H, state, grid: EnergyGrid) -> EnergyDistribution:
    """Ideal measurement statistics binned to the nearest grid point."""
    vals, weights = populations(H, state)
    tol = policy().reconstruction_tol
    if vals[0] < -tol or vals[-1] > 1 + tol:
        raise ValidationError(
            f"spectrum [{vals[0]:.6g}, {vals[-1]:.6g}] is outside [0, 1]; apply rescale_to_unit first"
        )
    q = np.bincount(grid.nearest(vals), weights=weights, minlength=grid.size)
    return EnergyDistribution(grid, DiscreteDistribution(q / q.sum()))


def truncated_levels(H: DiagonalizableHamiltonian, l: int) -> np.ndarray:
    """Grid index of the l-digit truncation of f(z), for every z."""
    scale = 1 << l
    return np.array([math.floor(v * scale) for v in H.eigen.exact_values()], dtype=np.int64)


def theorem1_distribution(H: DiagonalizableHamiltonian, P, l: int) -> EnergyDistribution:
    """Outcome law q_m = sum of P_z over z whose truncated f(z) equals m / 2^l."""
    if l < 1:
        raise ValidationError("digit count must be at least 1")
    grid = EnergyGrid(1 << l)
    probs = P.probabilities if isinstance(P, DiscreteDistribution) else np.asarray(P, dtype=float)
    q = np.bincount(truncated_levels(H, l), weights=probs, minlength=grid.size)
    return EnergyDistribution(grid, DiscreteDistribution(q))


def circuit_distribution(H: DiagonalizableHamiltonian, state) -> DiscreteDistribution:
    """P_z = |<z|U|psi>|^2 for the diagonalizing circuit."""
    return output_distribution(H.diagonalizer, _state(state))


def perturb_distribution(p, beta: float, seed=None, *, donors=None, acceptors=None) -> DiscreteDistribution:
    """Return q with sum |p - q| = beta exactly.

    Mass beta/2 is removed from donor entries (clipped at zero) and spread over
    disjoint acceptor entries. Donors and acceptors are random unless given.
    """
    probs = p.probabilities if isinstance(p, DiscreteDistribution) else np.asarray(p, dtype=float)
    if beta < 0 or beta > 2:
        raise ValidationError("beta must lie in [0, 2] (l1 convention)")
    if beta == 0:
        return DiscreteDistribution(probs)
    rng = np.random.default_rng(seed)
    half = beta / 2
    N = probs.size
    if donors is None:
        if N < 2 or half > 1 - probs.min() + 1e-15:
            raise ValidationError(f"beta={beta} exceeds the movable mass")
        order = [int(i) for i in rng.permutation(N) if probs[i] > 0]
        donors = _greedy(order, probs, half)
        if len(donors) == N:
            donors = _greedy(sorted(order, key=lambda i: -probs[i]), probs, half)
    donors = [int(i) for i in donors]
    if acceptors is None:
        rest = [i for i in range(N) if i not in set(donors)]
        if not rest:
            raise ValidationError(f"beta={beta} leaves no acceptor entries")
        size = int(rng.integers(1, len(rest) + 1))
        acceptors = rng.choice(rest, size=size, replace=False)
        shares = rng.dirichlet(np.ones(size))
    else:
        acceptors = [int(i) for i in acceptors]
        shares = np.full(len(acceptors), 1 / len(acceptors))
    if set(donors) & set(int(a) for a in acceptors):
        raise ValidationError("donor and acceptor entries must be disjoint")
    if probs[donors].sum() < half - 1e-15:
        raise ValidationError(f"beta={beta} exceeds the mass held by the donors")
    q = probs.copy()
    remaining = half
    for i in donors:
        take = min(q[i], remaining)
        q[i] -= take
        remaining -= take
        if remaining <= 0:
            break
    q[np.asarray(acceptors, dtype=int)] += half * shares
    return DiscreteDistribution(q)


def _greedy(order, probs, half):
    chosen, total = [], 0.0
    for i in order:
        chosen.append(i)
        total += probs[i]
        if total >= half:
            break
    return chosen


def confidence_mix(dist: EnergyDistribution, epsilon: float, target: int) -> EnergyDistribution:
    """(1 - epsilon) q + epsilon * (unit mass at grid index ``target``).

    Any such mixture still satisfies the resolution inequality with confidence
    1 - epsilon, which makes it a valid adversarial sampler.
    """
    if not 0 <= epsilon <= 1:
        raise ValidationError("epsilon must lie in [0, 1]")
    q = (1 - epsilon) * dist.probabilities
    q[target] += epsilon
    return dist.with_probabilities(q)


@dataclass(frozen=True)
class EnergySamples:
    grid: EnergyGrid
    indices: np.ndarray
    seed: int | None = None

    def energies(self) -> np.ndarray:
        return self.indices / self.grid.K

    def counts(self) -> np.ndarray:
        return np.bincount(self.indices, minlength=self.grid.size)

    def empirical(self) -> EnergyDistribution:
        c = self.counts()
        return EnergyDistribution(self.grid, DiscreteDistribution(c / c.sum()))


def draw(dist: EnergyDistribution, shots: int, rng: np.random.Generator) -> np.ndarray:
    return rng.choice(dist.grid.size, size=shots, p=dist.probabilities)


def sample_theorem1(H: DiagonalizableHamiltonian, inp, l: int, params: SamplerParams,
                    shots: int) -> EnergySamples:
    """Draw z from the (perturbed) circuit distribution and emit f(z) truncated to l digits."""
    if shots < 0:
        raise ValidationError("shot count must be non-negative")
    perturb_seq, shot_seq = np.random.SeedSequence(params.seed).spawn(2)
    P = circuit_distribution(H, inp)
    if params.beta:
        P = perturb_distribution(P, params.beta, np.random.default_rng(perturb_seq))
    rng = np.random.default_rng(shot_seq)
    z = rng.choice(P.probabilities.size, size=shots, p=P.probabilities)
    return EnergySamples(EnergyGrid(1 << l), truncated_levels(H, l)[z], params.seed)


@dataclass(frozen=True)
class ContractReport:
    worst_margin: float
    worst_interval: tuple[float, float]
    intervals_checked: int
    passed: bool


def check_resolution_contract(dist: EnergyDistribution, H, state, delta: float,
                              eta: float) -> ContractReport:
    """Check Pr(E in [E_A - delta, E_B + delta]) >= eta tr(Pi_[E_A, E_B] rho).

    Only intervals whose endpoints are eigenvalues need checking: the right
    side changes only when an endpoint crosses an eigenvalue, and shrinking an
    interval to the nearest enclosed eigenvalues only lowers the left side.
    """
    vals, weights = populations(H, state)
    levels, level_w = [], []
    tol = policy().degeneracy_tol
    for v, w in zip(vals, weights):
        if levels and v - levels[-1] <= tol:
            level_w[-1] += w
        else:
            levels.append(float(v))
            level_w.append(float(w))
    levels = np.array(levels)
    cum_w = np.concatenate([[0.0], np.cumsum(level_w)])
    energies = dist.grid.energies()
    cum_q = np.concatenate([[0.0], np.cumsum(dist.probabilities)])
    lo_idx = np.searchsorted(energies, levels - delta - _EDGE_TOL, side="left")
    hi_idx = np.searchsorted(energies, levels + delta + _EDGE_TOL, side="right")
    D = levels.size
    a, b = np.triu_indices(D)
    lhs = cum_q[hi_idx[b]] - cum_q[lo_idx[a]]
    rhs = eta * (cum_w[b + 1] - cum_w[a])
    margin = lhs - rhs
    worst = int(np.argmin(margin))
    return ContractReport(
        float(margin[worst]),
        (float(levels[a[worst]]), float(levels[b[worst]])),
        int(a.size),
        bool(margin[worst] >= -_EDGE_TOL),
    )
