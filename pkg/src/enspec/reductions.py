"""Reductions built on energy samplers: output sampling for the 2D IQP
circuit, ground-state probability bounds, the marginal-probability poly-box,
the Stockmeyer error calculator and the anticoncentration diagnostic.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .circuit import CircuitIR, MarginalSpec, output_distribution
from .errors import ValidationError
from .fk import build_fk
from .hamiltonian import build_h2d, rescale_to_unit, spectral_gap, u_weights
from .iqp import DEFAULT_ANGLES, LatticeSpec, ProductInput, build_input_state, build_u2d
from .linalg import DiscreteDistribution, HermitianOperator, StateVector, eigendecompose, l1_distance, policy
from .sampling import (EnergyDistribution, EnergyGrid, confidence_mix, exact_energy_distribution,
                       perturb_distribution, populations)

# Corollary threshold on 2 eps + beta, kept as metadata only
HARDNESS_THRESHOLD = 1 / 22


@dataclass
class ReductionReport:
    measured: float
    bound: float
    passed: bool
    seed: int | None = None
    shots: int | None = None
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = asdict(self)
        out["pass"] = out.pop("passed")
        return out


# -- energy samples to basis samples ------------------------------------------

def algorithm1_grid(n: int) -> EnergyGrid:
    """Grid of pitch 2^-n / 3, so that z / 2^n sits on index 3z."""
    return EnergyGrid(3 << n)


def algorithm1_map(n: int) -> np.ndarray:
    """z for every grid index m: the unique z with m in {3z-1, 3z, 3z+1}.

    Only m = 3 * 2^n has no such z; it goes to the nearest one, 2^n - 1.
    """
    m = np.arange((3 << n) + 1)
    return np.minimum((m + 1) // 3, (1 << n) - 1)


def algorithm1_distribution(dist: EnergyDistribution, n: int) -> DiscreteDistribution:
    """Push an energy-outcome law through the outcome-to-z map."""
    if dist.grid.K != 3 << n:
        raise ValidationError(f"sampler grid K={dist.grid.K} is not aligned with 3 * 2^{n}")
    p = np.bincount(algorithm1_map(n), weights=dist.probabilities, minlength=1 << n)
    return DiscreteDistribution(p)


def algorithm1_sample(outcomes: np.ndarray, n: int) -> np.ndarray:
    """Map sampled grid indices to strings z (as integers)."""
    return algorithm1_map(n)[np.asarray(outcomes, dtype=np.int64)]


def adversarial_sampler(ideal: EnergyDistribution, n: int, P: np.ndarray, eps: float,
                        beta: float) -> EnergyDistribution:
    """An (eps, beta) sampler built to push the reduction's output far from P.

    The eps part sends its mass to the outcome of the least likely z. The beta
    part then drains the most likely outcomes into that same z's neighbour bin.
    """
    target_z = int(np.argmin(P))
    target = 3 * target_z
    dist = confidence_mix(ideal, eps, target)
    if beta:
        acceptor = target + 1 if target + 1 <= ideal.grid.K else target - 1
        order = [int(m) for m in np.argsort(-dist.probabilities, kind="stable")
                 if algorithm1_map(n)[m] != target_z]
        q = perturb_distribution(dist.q, beta, donors=order, acceptors=[acceptor])
        dist = dist.with_probabilities(q)
    return dist


def random_sampler(ideal: EnergyDistribution, eps: float, beta: float,
                   rng: np.random.Generator) -> EnergyDistribution:
    """An (eps, beta) sampler with a random eps target and random beta move."""
    dist = confidence_mix(ideal, eps, int(rng.integers(ideal.grid.size)))
    if beta:
        dist = dist.with_probabilities(perturb_distribution(dist.q, beta, rng))
    return dist


def theorem2_instance(lattice: LatticeSpec, inp: ProductInput, eps: float, beta: float,
                      adversarial: bool = True, rng: np.random.Generator | None = None) -> dict:
    """Exact l1 between the reduction's z-law and the U2D output law for one input."""
    n = lattice.n
    H = build_h2d(lattice, u_weights(n))
    psi = build_input_state(inp)
    P = output_distribution(build_u2d(lattice), psi).probabilities
    ideal = exact_energy_distribution(H, psi, algorithm1_grid(n))
    if adversarial:
        dist = adversarial_sampler(ideal, n, P, eps, beta)
    else:
        dist = random_sampler(ideal, eps, beta, rng or np.random.default_rng())
    p = algorithm1_distribution(dist, n)
    return {"l1": l1_distance(p, P), "bound": 2 * eps + beta,
            "ideal_l1": l1_distance(algorithm1_distribution(ideal, n), P)}


def run_theorem2(lattice: LatticeSpec, eps: float, beta: float, inputs: int = 20,
                 seed: int = 0, adversarial: bool = True, angles: Sequence[float] = DEFAULT_ANGLES,
                 tol: float = 1e-12) -> ReductionReport:
    if eps < 0 or eps > 1 or beta < 0:
        raise ValidationError("need 0 <= eps <= 1 and beta >= 0")
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(inputs):
        inp = ProductInput.random(lattice.n, rng, angles)
        rows.append(theorem2_instance(lattice, inp, eps, beta, adversarial, rng))
    worst = max(r["l1"] for r in rows)
    bound = 2 * eps + beta
    return ReductionReport(worst, bound, worst <= bound + tol, seed, None, {
        "rows": lattice.rows, "cols": lattice.cols, "eps": eps, "beta": beta,
        "inputs": inputs, "adversarial": adversarial, "per_input_l1": [r["l1"] for r in rows],
        "hardness_threshold": HARDNESS_THRESHOLD, "below_threshold": bound <= HARDNESS_THRESHOLD,
    })


# -- ground-state probability ------------------------------------------------------

def lemma1_grid(gap: float) -> EnergyGrid:
    """Coarsest 1/K grid with pitch at most gap / 3."""
    if not gap > 0 or not math.isfinite(gap):
        raise ValidationError("a positive finite gap is required")
    return EnergyGrid(math.ceil(3 / gap - 1e-12))


def ground_probability(H: HermitianOperator, state: StateVector) -> tuple[float, float, float]:
    """(ground energy, gap, <psi|Pi_GS|psi>) from a full diagonalization."""
    vals, weights = populations(H, state)
    tol = policy().degeneracy_tol
    ground = vals <= vals[0] + tol
    if ground.all():
        raise ValidationError("Hamiltonian is gapless on this space")
    gap = float(vals[~ground][0] - vals[0])
    return float(vals[0]), gap, float(weights[ground].sum())


@dataclass
class Lemma1Report:
    q_gs: float
    p_gs: float
    deviation: float
    bound: float
    lower_ok: bool
    upper_ok: bool
    passed: bool


def lemma1_bounds(dist: EnergyDistribution, H: HermitianOperator, state: StateVector,
                  eps: float, beta: float, gap: float | None = None, tol: float = 1e-12) -> Lemma1Report:
    """Compare q'_GS (mass on [0, gap/3]) with P_GS against eps + beta."""
    e0, measured_gap, p_gs = ground_probability(H, state)
    if abs(e0) > policy().reconstruction_tol:
        raise ValidationError(f"ground energy {e0:.3g} is not zero")
    gap = measured_gap if gap is None else gap
    if dist.grid.delta > gap / 3 + 1e-15:
        raise ValidationError("sampler resolution must not exceed gap / 3")
    q_gs = dist.mass_in(0.0, gap / 3)
    dev = abs(q_gs - p_gs)
    bound = eps + beta
    lower = q_gs >= (1 - eps) * p_gs - beta - tol
    upper = q_gs <= p_gs + eps + beta + tol
    return Lemma1Report(q_gs, p_gs, dev, bound, lower, upper, dev <= bound + tol)


def worst_case_lemma1(ideal: EnergyDistribution, gap: float, eps: float, beta: float,
                      direction: str = "down") -> EnergyDistribution:
    """(eps, beta) sampler pushing q'_GS as far as allowed in one direction.

    ``down`` moves mass out of the ground window to the top outcome; ``up``
    moves it into outcome 0.
    """
    top = ideal.grid.K
    inside = ideal.grid.energies() <= gap / 3 + 1e-12
    if direction == "down":
        dist = confidence_mix(ideal, eps, top)
        donors = [int(m) for m in np.flatnonzero(inside)]
        acceptors = [top]
    elif direction == "up":
        dist = confidence_mix(ideal, eps, 0)
        donors = [int(m) for m in np.flatnonzero(~inside)]
        acceptors = [0]
    else:
        raise ValidationError("direction must be 'down' or 'up'")
    movable = dist.probabilities[donors].sum()
    b = min(beta, 2 * movable)
    if b > 0:
        dist = dist.with_probabilities(perturb_distribution(dist.q, b, donors=donors, acceptors=acceptors))
    return dist


# -- poly-box -----------------------------------------------------------------

@dataclass(frozen=True)
class PolyBoxParams:
    delta_p: float
    epsilon_p: float

    def __post_init__(self):
        if not 0 < self.delta_p < 1:
            raise ValidationError("delta_p must lie in (0, 1)")
        if not 0 < self.epsilon_p < 1:
            raise ValidationError("epsilon_p must lie in (0, 1)")


def hoeffding_samples(delta_p: float, epsilon_p: float, T: int) -> int:
    """s = ceil(ln(2/eps_p) * 2 (T+1)^2 / delta_p^2)."""
    return math.ceil(math.log(2 / epsilon_p) * 2 * (T + 1) ** 2 / delta_p**2)


SamplerFactory = Callable[[EnergyDistribution, float, float, np.random.Generator], EnergyDistribution]


def default_factory(ideal: EnergyDistribution, eps: float, beta: float,
                    rng: np.random.Generator) -> EnergyDistribution:
    return random_sampler(ideal, eps, beta, rng)


@dataclass
class PolyBoxResult:
    p_hat: float
    samples: int
    report: dict


def polybox_estimate(circuit: CircuitIR, x: int, spec: MarginalSpec, params: PolyBoxParams,
                     factory: SamplerFactory = default_factory, seed: int | None = 0,
                     eps: float | None = None, beta: float | None = None) -> PolyBoxResult:
    """Estimate p = sum_{y in S*} |<y|U|x>|^2 by energy sampling.

    The clock Hamiltonian is compiled from U^dag: its zero-energy space is
    spanned by history states of U^dag started in S*, whose weight on |x>|T>_c
    is p / (T+1). The spectrum is divided by its norm to fit [0, 1].
    """
    spec.validate(circuit.n)
    T = circuit.T
    budget = params.delta_p / (2 * (T + 1))
    eps = budget / 2 if eps is None else eps
    beta = budget / 2 if beta is None else beta
    if eps < 0 or beta < 0 or eps + beta > budget + 1e-15:
        raise ValidationError(f"eps + beta = {eps + beta} exceeds delta_p / (2(T+1)) = {budget}")
    fk = build_fk(circuit.inverse(), init=False, marginal=spec)
    H = fk.physical()
    kappa = float(np.abs(eigendecompose(H, k=H.dim).eigenvalues).max())
    H = rescale_to_unit(H, kappa, psd=True)
    report = spectral_gap(H)
    grid = lemma1_grid(report.gap)
    state = fk.input_state(x)
    ideal = exact_energy_distribution(H, state, grid)
    rng = np.random.default_rng(seed)
    dist = factory(ideal, eps, beta, rng)
    s = hoeffding_samples(params.delta_p, params.epsilon_p, T)
    draws = rng.choice(grid.size, size=s, p=dist.probabilities)
    q_hat = float(np.mean(grid.energies()[draws] <= report.gap / 3 + 1e-12))
    p_hat = (T + 1) * q_hat
    return PolyBoxResult(p_hat, s, {
        "p_hat": p_hat, "q_hat": q_hat, "samples": s, "eps": eps, "beta": beta,
        "gap": report.gap, "kappa": kappa, "grid_K": grid.K, "seed": seed,
        "delta_p": params.delta_p, "epsilon_p": params.epsilon_p, "T": T,
    })


# -- Stockmeyer error ------------------------------------------------------------

def stockmeyer_error(q: float, m: int, beta: float, nu: float, c: float) -> float:
    """q/c + beta / (2^m nu) * (1 + 1/c), with c standing in for poly(n)."""
    if not 0 < nu < 1:
        raise ValidationError("nu must lie in (0, 1)")
    if c <= 0:
        raise ValidationError("the poly(n) proxy c must be positive")
    if m < 0 or beta < 0 or q < 0:
        raise ValidationError("q, m and beta must be non-negative")
    return q / c + beta / (2.0**m * nu) * (1 + 1 / c)


# -- anticoncentration ------------------------------------------------------------

@dataclass
class AnticoncentrationReport:
    fraction: float
    per_trial: list
    trials: int
    alpha: float
    seed: int

    def to_json(self) -> dict:
        return asdict(self)


def anticoncentration_stats(lattice: LatticeSpec, trials: int, alpha: float, seed: int = 0,
                            angles: Sequence[float] = DEFAULT_ANGLES,
                            tol: float = 1e-12) -> AnticoncentrationReport:
    """Fraction of output probabilities above alpha / 2^n over random inputs.

    Values within ``tol`` of the threshold count as above it; at alpha = 0 the
    test is p > tol.
    """
    if trials < 1:
        raise ValidationError("need at least one trial")
    if alpha < 0:
        raise ValidationError("alpha must be non-negative")
    n = lattice.n
    U = build_u2d(lattice)
    rng = np.random.default_rng(seed)
    threshold = alpha / 2**n
    per_trial = []
    for _ in range(trials):
        p = output_distribution(U, build_input_state(ProductInput.random(n, rng, angles))).probabilities
        hits = p > tol if alpha == 0 else p >= threshold - tol
        per_trial.append(float(hits.mean()))
    return AnticoncentrationReport(float(np.mean(per_trial)), per_trial, trials, alpha, seed)
