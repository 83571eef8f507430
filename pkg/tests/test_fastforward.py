import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from enspec.errors import ValidationError
from enspec.fastforward import FFParams, build_ff_unitary, exact_evolution, ff_phases, verify_ff
from enspec.hamiltonian import build_h2d, u_weights, v_weights
from enspec.iqp import LatticeSpec


@pytest.fixture(scope="module")
def h2x2():
    return build_h2d(LatticeSpec(2, 2), u_weights(4))


def test_exact_evolution_matches_expm(h2x2):
    T = 3.7
    assert np.allclose(exact_evolution(h2x2, T), scipy.linalg.expm(-1j * T * h2x2.pauli_form.dense()))


@pytest.mark.parametrize("T", [1, 2**10, 2**20])
@pytest.mark.parametrize("a", [4, 8, 16])
def test_error_within_register_bound(h2x2, T, a):
    r = verify_ff(h2x2, FFParams(T, a))
    assert r.passed, (r.distance, r.bound)


def test_nearest_rounding_halves_bound(h2x2):
    p = FFParams(2**10, 6, "nearest")
    assert np.isclose(p.bound, np.pi * 2**-6)
    assert verify_ff(h2x2, p).passed


def test_phase_register_values(h2x2):
    exact, approx = ff_phases(h2x2, FFParams(2**20, 8))
    step = 2 * np.pi / 2**8
    assert np.all(exact - approx >= -1e-12)
    assert np.all(exact - approx < step + 1e-12)
    assert np.allclose(np.round(approx / step), approx / step)


def test_large_time_phase_reduction():
    # T = 32 pi * 2^10 makes f(z) T = z * 2 pi * 2^11, a multiple of 2 pi
    H = build_h2d(LatticeSpec(2, 2), u_weights(4))
    exact, _ = ff_phases(H, FFParams(32 * np.pi * 2**10, 4))
    wrapped = np.minimum(exact, 2 * np.pi - exact)
    assert np.all(wrapped < 1e-6)


@given(st.floats(0.1, 1e6), st.integers(3, 16))
def test_bound_property_v_preset(T, a):
    H = build_h2d(LatticeSpec(1, 3), v_weights(3))
    assert verify_ff(H, FFParams(T, a)).passed


def test_ff_unitary_is_unitary(h2x2):
    U = build_ff_unitary(h2x2, FFParams(2**20, 8))
    assert np.allclose(U.conj().T @ U, np.eye(16))


def test_build_cost_does_not_grow_linearly(h2x2):
    import time
    times = []
    for T in (1, 2**10, 2**20):
        start = time.perf_counter()
        for _ in range(5):
            build_ff_unitary(h2x2, FFParams(T, 8))
        times.append(time.perf_counter() - start)
    # linear growth would make the last entry ~1e6 times the first
    assert times[-1] < 50 * times[0] + 0.1


def test_validation():
    with pytest.raises(ValidationError):
        FFParams(0, 4)
    with pytest.raises(ValidationError):
        FFParams(1, 0)
    with pytest.raises(ValidationError):
        FFParams(1, 4, "ceil")


def test_report_json(h2x2):
    data = verify_ff(h2x2, FFParams(2, 4)).to_json()
    assert set(data) == {"distance", "bound", "pass", "build_seconds"}
