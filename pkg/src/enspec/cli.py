"""Command-line front end.

Exit codes: 0 success, 2 bad input, 3 resource guard, 4 certification failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

import numpy as np

from .circuit import MarginalSpec, circuit_from_json, circuit_to_json
from .errors import EnspecError, ResourceError, ValidationError
from .fastforward import FFParams, verify_ff
from .fk import FKOperator, build_fk, certify_ground_space
from .hamiltonian import DiagonalizableHamiltonian, build_h2d, rescale_to_unit, u_weights, v_weights
from .iqp import LatticeSpec, ProductInput, build_input_state
from .linalg import StateVector, eigendecompose
from .pauli import PauliSum
from .reductions import PolyBoxParams, anticoncentration_stats, polybox_estimate, run_theorem2
from .sampling import (EnergyGrid, EnergySamples, SamplerParams, exact_energy_distribution,
                       perturb_distribution, sample_theorem1)

EXIT_OK, EXIT_INPUT, EXIT_RESOURCE, EXIT_CERT = 0, 2, 3, 4


# -- I/O ------------------------------------------------------------------------

def _write(path: str | None, text: str) -> None:
    """Atomic write via a temporary file in the target directory; stdout if no path."""
    if path is None:
        sys.stdout.write(text)
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _dump_json(path: str | None, data) -> None:
    _write(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def _dump_csv(path: str | None, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    _write(path, buf.getvalue())


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None


def _config(args) -> dict:
    # output locations do not affect results, so reruns elsewhere stay byte-identical
    return {k: v for k, v in vars(args).items() if k not in ("func", "out", "report")}


# -- Hamiltonian files --------------------------------------------------------------

def _weights(spec, n: int) -> list[Fraction]:
    if spec == "u":
        return u_weights(n)
    if spec == "v":
        return v_weights(n)
    if isinstance(spec, str):
        spec = spec.split(",")
    try:
        return [Fraction(str(w)) for w in spec]
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"field 'weights': {exc}") from None


def h2d_json(rows: int, cols: int, weights, basis: str = "z") -> dict:
    return {"kind": "h2d", "rows": rows, "cols": cols, "basis": basis,
            "weights": [str(w) for w in weights]}


def ham_from_json(data):
    """DiagonalizableHamiltonian, PauliSum or FKOperator from a Hamiltonian JSON object."""
    if not isinstance(data, dict) or "kind" not in data:
        raise ValidationError("Hamiltonian JSON needs a 'kind' field")
    kind = data["kind"]
    if kind == "h2d":
        for key in ("rows", "cols"):
            if not isinstance(data.get(key), int):
                raise ValidationError(f"field '{key}' must be an integer")
        lattice = LatticeSpec(data["rows"], data["cols"])
        return build_h2d(lattice, _weights(data.get("weights", "u"), lattice.n), data.get("basis", "z"))
    if kind == "pauli":
        if not isinstance(data.get("n"), int):
            raise ValidationError("field 'n' must be an integer")
        return PauliSum.from_json(data["n"], data.get("terms", []))
    if kind == "fk":
        circuit = circuit_from_json(data.get("circuit"))
        marginal = _marginal_from_json(data["marginal"]) if data.get("marginal") is not None else None
        return build_fk(circuit, init=bool(data.get("init", True)), marginal=marginal)
    raise ValidationError(f"field 'kind': unknown Hamiltonian kind {kind!r}")


def _marginal_from_json(data) -> MarginalSpec:
    if not isinstance(data, dict):
        raise ValidationError("marginal spec must be an object with 'positions' and 'bits'")
    return MarginalSpec(tuple(data.get("positions", ())), tuple(data.get("bits", ())))


def _parse_marginal(text: str | None) -> MarginalSpec | None:
    """Either a JSON file path or inline 'pos=bit,pos=bit'."""
    if text is None:
        return None
    if os.path.exists(text):
        return _marginal_from_json(_load_json(text))
    pairs = []
    try:
        for item in filter(None, text.split(",")):
            pos, bit = item.split("=")
            pairs.append((int(pos), int(bit)))
    except ValueError:
        raise ValidationError(f"marginal {text!r} is neither a file nor 'pos=bit,...'") from None
    pairs.sort()
    return MarginalSpec(tuple(p for p, _ in pairs), tuple(b for _, b in pairs))


def _operator(ham):
    if isinstance(ham, DiagonalizableHamiltonian):
        return ham.operator()
    if isinstance(ham, PauliSum):
        return ham.to_operator()
    return ham.physical()


# -- commands ------------------------------------------------------------------------

def cmd_build_ham(args) -> int:
    lattice = LatticeSpec(args.rows, args.cols)
    data = h2d_json(args.rows, args.cols, _weights(args.weights, lattice.n), args.basis)
    ham = ham_from_json(data)
    if args.pauli:
        data = {"kind": "pauli", "n": ham.n, "terms": ham.pauli_form.to_json()}
    _dump_json(args.out, data)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    ham = ham_from_json(_load_json(args.ham))
    if isinstance(ham, DiagonalizableHamiltonian) and not args.numeric:
        exact = sorted(ham.eigen.exact_values())
        rows = [(i, repr(float(v)), str(v)) for i, v in enumerate(exact)]
    else:
        H = _operator(ham)
        vals = eigendecompose(H, k=H.dim).eigenvalues
        rows = [(i, repr(float(v)), "") for i, v in enumerate(vals)]
    _dump_csv(args.out, ["index", "eigenvalue", "exact"], rows)
    return EXIT_OK


def _input_state(ham, path: str | None):
    if isinstance(ham, FKOperator):
        x = 0 if path is None else _load_json(path).get("x", 0)
        if not isinstance(x, int):
            raise ValidationError("field 'x' must be an integer basis index")
        return ham.input_state(x)
    n = ham.n
    if path is None:
        return ProductInput.zeros(n)
    data = _load_json(path)
    if not isinstance(data, dict) or "x" not in data:
        raise ValidationError("input JSON needs 'x' (and optionally 'theta')")
    x = data["x"]
    theta = data.get("theta", [0.0] * len(x))
    inp = ProductInput(tuple(theta), tuple(x))
    if inp.n != n:
        raise ValidationError(f"field 'x' has {inp.n} entries, Hamiltonian has {n} qubits")
    return inp


def cmd_sample(args) -> int:
    ham = ham_from_json(_load_json(args.ham))
    inp = _input_state(ham, args.input)
    params = SamplerParams(2.0**-args.digits, 1.0, args.beta, args.seed)
    if isinstance(ham, DiagonalizableHamiltonian):
        samples = sample_theorem1(ham, inp, args.digits, params, args.shots)
    else:
        state = inp if isinstance(inp, StateVector) else build_input_state(inp)
        grid = EnergyGrid(1 << args.digits)
        H = _operator(ham)
        if args.kappa is not None:
            H = rescale_to_unit(H, args.kappa, psd=isinstance(ham, FKOperator))
        dist = exact_energy_distribution(H, state, grid)
        perturb_seq, shot_seq = np.random.SeedSequence(args.seed).spawn(2)
        if args.beta:
            dist = dist.with_probabilities(perturb_distribution(dist.q, args.beta, np.random.default_rng(perturb_seq)))
        rng = np.random.default_rng(shot_seq)
        samples = EnergySamples(grid, rng.choice(grid.size, size=args.shots, p=dist.probabilities), args.seed)
    counts = samples.counts()
    total = max(int(counts.sum()), 1)
    rows = [(m, repr(samples.grid.energy(m)), repr(int(c) / total), int(c)) for m, c in enumerate(counts)]
    _dump_csv(args.out, ["bin_index", "energy", "probability", "counts"], rows)
    if args.report:
        _dump_json(args.report, {"config": _config(args), "seed": args.seed, "shots": args.shots})
    return EXIT_OK


def cmd_ff_verify(args) -> int:
    ham = ham_from_json(_load_json(args.ham))
    if not isinstance(ham, DiagonalizableHamiltonian):
        raise ValidationError("fast-forwarding needs an 'h2d' Hamiltonian")
    report = verify_ff(ham, FFParams(args.T, args.a, args.rounding))
    out = report.to_json()
    out["config"] = _config(args)
    _dump_json(args.out, out)
    return EXIT_OK if report.passed else EXIT_CERT


def cmd_fk_build(args) -> int:
    circuit = circuit_from_json(_load_json(args.circuit))
    marginal = _parse_marginal(args.marginal)
    if marginal is not None:
        marginal.validate(circuit.n)
    data = {"kind": "fk", "circuit": circuit_to_json(circuit), "init": not args.no_init,
            "marginal": None if marginal is None else
            {"positions": list(marginal.positions), "bits": list(marginal.bits)}}
    _dump_json(args.out, data)
    return EXIT_OK


def cmd_certify(args) -> int:
    ham = ham_from_json(_load_json(args.ham))
    if not isinstance(ham, FKOperator):
        raise ValidationError("certify needs an 'fk' Hamiltonian")
    report = certify_ground_space(ham, args.x)
    out = report.to_json()
    out["config"] = _config(args)
    _dump_json(args.out, out)
    return EXIT_OK if report.passed else EXIT_CERT


def cmd_reduce(args) -> int:
    report = run_theorem2(LatticeSpec(args.rows, args.cols), args.eps, args.beta, args.inputs,
                          args.seed, adversarial=not args.random)
    out = report.to_json()
    out["config"] = _config(args)
    _dump_json(args.out, out)
    return EXIT_OK if report.passed else EXIT_CERT


def cmd_polybox(args) -> int:
    circuit = circuit_from_json(_load_json(args.circuit))
    marginal = _parse_marginal(args.marginal) or MarginalSpec()
    result = polybox_estimate(circuit, args.x, marginal, PolyBoxParams(args.delta_p, args.eps_p), seed=args.seed)
    out = dict(result.report)
    out["config"] = _config(args)
    _dump_json(args.out, out)
    return EXIT_OK


def cmd_anticoncentration(args) -> int:
    report = anticoncentration_stats(LatticeSpec(args.rows, args.cols), args.trials, args.alpha, args.seed)
    out = report.to_json()
    out["config"] = _config(args)
    _dump_json(args.out, out)
    return EXIT_OK


# -- parser --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="enspec", description="Energy sampling toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("build-ham", help="write an H2D Hamiltonian file")
    s.add_argument("--rows", type=int, required=True)
    s.add_argument("--cols", type=int, required=True)
    s.add_argument("--weights", default="u", help="'u', 'v' or comma-separated fractions")
    s.add_argument("--basis", choices=("z", "x"), default="z")
    s.add_argument("--pauli", action="store_true", help="write the local Pauli form instead")
    s.add_argument("--out")
    s.set_defaults(func=cmd_build_ham)

    s = sub.add_parser("spectrum", help="eigenvalues as CSV")
    s.add_argument("--ham", required=True)
    s.add_argument("--numeric", action="store_true", help="diagonalize even when f is known")
    s.add_argument("--out")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("sample", help="energy samples as a histogram CSV")
    s.add_argument("--ham", required=True)
    s.add_argument("--input")
    s.add_argument("--digits", type=int, default=4)
    s.add_argument("--beta", type=float, default=0.0)
    s.add_argument("--shots", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--kappa", type=float,
                   help="rescale a non-diagonalizable Hamiltonian by this norm bound first")
    s.add_argument("--out")
    s.add_argument("--report", help="optional JSON file with the run configuration")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("ff-verify", help="check the fast-forwarded evolution")
    s.add_argument("--ham", required=True)
    s.add_argument("--T", type=float, required=True)
    s.add_argument("--a", type=int, required=True)
    s.add_argument("--rounding", choices=("floor", "nearest"), default="floor")
    s.add_argument("--out")
    s.set_defaults(func=cmd_ff_verify)

    s = sub.add_parser("fk-build", help="compile a circuit into a clock Hamiltonian file")
    s.add_argument("--circuit", required=True)
    s.add_argument("--marginal", help="JSON file or inline 'pos=bit,...'")
    s.add_argument("--no-init", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_fk_build)

    s = sub.add_parser("certify", help="certify the ground space of a clock Hamiltonian")
    s.add_argument("--ham", required=True)
    s.add_argument("--x", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("reduce", help="run a reduction")
    rsub = s.add_subparsers(dest="reduction", required=True)
    r = rsub.add_parser("thm2", help="output sampling from an energy sampler")
    r.add_argument("--rows", type=int, required=True)
    r.add_argument("--cols", type=int, required=True)
    r.add_argument("--eps", type=float, default=0.0)
    r.add_argument("--beta", type=float, default=0.0)
    r.add_argument("--inputs", type=int, default=20)
    r.add_argument("--random", action="store_true", help="random instead of adversarial samplers")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out")
    r.set_defaults(func=cmd_reduce)

    s = sub.add_parser("polybox", help="estimate a marginal probability")
    s.add_argument("--circuit", required=True)
    s.add_argument("--marginal")
    s.add_argument("--x", type=int, default=0)
    s.add_argument("--delta-p", type=float, required=True)
    s.add_argument("--eps-p", type=float, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_polybox)

    s = sub.add_parser("anticoncentration", help="fraction of outputs above alpha / 2^n")
    s.add_argument("--rows", type=int, required=True)
    s.add_argument("--cols", type=int, required=True)
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_anticoncentration)
    return p


def _thread_limit():
    value = os.environ.get("ENSPEC_NUM_THREADS")
    if not value:
        return None
    from threadpoolctl import threadpool_limits
    try:
        return threadpool_limits(limits=max(1, int(value)))
    except ValueError:
        raise ValidationError("ENSPEC_NUM_THREADS must be an integer") from None


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        limiter = _thread_limit()
        try:
            return args.func(args)
        finally:
            if limiter is not None:
                limiter.restore_original_limits()
    except ResourceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ValidationError, EnspecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
