import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import eigh

from uccsim.ansatz import (E2, E11, E12, FULL6, G, REDUCED2, ClusterAmplitudes, QuditState, cluster_generator_qubits,
                           cluster_term_count, effective_hamiltonian, prepare, qubit_state_to_qudit,
                           ucc_state_exact, ucc_state_qubits, ucc_state_trotter)
from uccsim.hamiltonian import occupation_state, pauli_to_matrix, sector_isometry

small = st.floats(min_value=-1.0, max_value=1.0)
params6 = st.lists(small, min_size=6, max_size=6).map(lambda v: ClusterAmplitudes.from_vector(v, FULL6))


def fidelity(a, b):
    return abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2


def test_zero_amplitudes():
    t = ClusterAmplitudes()
    assert np.array_equal(effective_hamiltonian(t), np.zeros((4, 4)))
    assert np.allclose(ucc_state_exact(t).amplitudes, [1, 0, 0, 0])


def test_imaginary_double_amplitude():
    H = effective_hamiltonian(ClusterAmplitudes(t2=1j))
    assert H[E2, G] == pytest.approx(-1.0)
    assert np.allclose(H.imag, 0.0)
    assert np.allclose(H, H.conj().T)


@pytest.mark.parametrize("theta", [0.1, 0.7, -1.2])
def test_double_rotation(theta):
    psi = ucc_state_exact(ClusterAmplitudes(t2=theta)).amplitudes
    assert abs(psi[E2]) ** 2 == pytest.approx(np.sin(theta) ** 2, abs=1e-14)
    # with the determinant phases used here the rotation reads cos|G> + sin|E2>
    assert np.allclose(psi, [np.cos(theta), 0, 0, np.sin(theta)], atol=1e-14)


@given(params6)
@settings(max_examples=50, deadline=None)
def test_exact_matches_eigendecomposition(t):
    w, V = eigh(effective_hamiltonian(t))
    ref = V @ (np.exp(-1j * w) * V.conj().T[:, G])
    assert np.allclose(ucc_state_exact(t).amplitudes, ref, atol=1e-12)


@given(params6, st.floats(min_value=-3, max_value=3))
@settings(max_examples=50, deadline=None)
def test_effective_hamiltonian_linear(t, alpha):
    scaled = ClusterAmplitudes(alpha * t.t11, alpha * t.t12, alpha * t.t2)
    assert np.array_equal(effective_hamiltonian(scaled), alpha * effective_hamiltonian(t)) or \
        np.allclose(effective_hamiltonian(scaled), alpha * effective_hamiltonian(t), rtol=0, atol=1e-15)


@given(params6, st.integers(min_value=1, max_value=8))
@settings(max_examples=50, deadline=None)
def test_all_paths_unit_norm(t, N):
    for psi in (ucc_state_exact(t), ucc_state_trotter(t, N)):
        assert abs(np.linalg.norm(psi.amplitudes) - 1) < 1e-12
    assert abs(np.linalg.norm(ucc_state_qubits(t, N)) - 1) < 1e-12


@pytest.mark.parametrize("name", ["t11", "t12", "t2"])
@given(amp=st.complex_numbers(max_magnitude=2.0))
@settings(max_examples=20, deadline=None)
def test_single_amplitude_trotter_is_exact(name, amp):
    t = ClusterAmplitudes(**{name: amp})
    assert np.allclose(ucc_state_trotter(t, 1).amplitudes, ucc_state_exact(t).amplitudes, atol=1e-13)


def test_small_amplitude_trotter_fidelity():
    rng = np.random.default_rng(11)
    for _ in range(200):
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, 3))
        mags = rng.uniform(0, 0.3, 3)
        t = ClusterAmplitudes(*(mags * phases))
        assert fidelity(ucc_state_trotter(t, 2), ucc_state_exact(t)) >= 0.999
    t = ClusterAmplitudes(0.3, 0.3, 0.3)
    assert fidelity(ucc_state_trotter(t, 2), ucc_state_exact(t)) >= 0.999


def test_trotter_second_order_convergence():
    rng = np.random.default_rng(5)
    Ns = np.array([4, 8, 16, 32, 64])
    for _ in range(5):
        z = rng.normal(size=3) + 1j * rng.normal(size=3)
        t = ClusterAmplitudes(*(z / np.abs(z) * rng.uniform(0.3, 1.0, 3)))
        exact = ucc_state_exact(t).amplitudes
        err = np.array([np.linalg.norm(ucc_state_trotter(t, N).amplitudes - exact) for N in Ns])
        slope = -np.polyfit(np.log(Ns), np.log(err), 1)[0]
        assert slope == pytest.approx(2.0, abs=0.1)
        assert fidelity(ucc_state_trotter(t, 64), ucc_state_exact(t)) >= 1 - 1e-6


def test_prepare_dispatch():
    t = ClusterAmplitudes(0.2, 0.1, 0.3)
    assert np.array_equal(prepare(t, None).amplitudes, ucc_state_exact(t).amplitudes)
    assert np.array_equal(prepare(t, 3).amplitudes, ucc_state_trotter(t, 3).amplitudes)
    with pytest.raises(ValueError):
        ucc_state_trotter(t, 0)


def test_qubit_reference_state():
    assert np.allclose(ucc_state_qubits(ClusterAmplitudes(), 2), occupation_state([1, 1, 0, 0]))


@given(params6)
@settings(max_examples=30, deadline=None)
def test_qubit_generator_projects_onto_qudit_generator(t):
    K16 = pauli_to_matrix(cluster_generator_qubits(t))
    U = sector_isometry()
    assert np.allclose(U.conj().T @ K16 @ U, -1j * effective_hamiltonian(t), atol=1e-12)
    leak = K16 @ U - U @ (U.conj().T @ K16 @ U)
    assert np.max(np.abs(leak)) < 1e-12
    assert all(abs(np.real(c)) < 1e-14 for _, c in cluster_generator_qubits(t))


@given(params6)
@settings(max_examples=20, deadline=None)
def test_qubit_backend_converges_to_exact(t):
    psi = qubit_state_to_qudit(ucc_state_qubits(t, 64))
    assert fidelity(psi, ucc_state_exact(t)) > 1 - 1e-5


@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.integers(1, 4))
@settings(max_examples=40, deadline=None)
def test_reduced2_symmetry(t1, t2, N):
    t = ClusterAmplitudes.from_vector([t1, t2], REDUCED2)
    for psi in (ucc_state_exact(t).amplitudes, ucc_state_trotter(t, N).amplitudes):
        assert abs(abs(psi[E11]) - abs(psi[E12])) < 1e-12
        assert abs(psi[G].imag) < 1e-12 and abs(psi[E2].imag) < 1e-12


def test_amplitude_vector_roundtrip():
    x = np.array([0.1, -0.2, 0.3, 0.4, -0.5, 0.6])
    assert np.array_equal(ClusterAmplitudes.from_vector(x).to_vector(), x)
    r = ClusterAmplitudes.from_vector([0.1, 0.2], REDUCED2)
    assert r.t11 == r.t12 == 0.1 and r.n_params == 2
    with pytest.raises(ValueError):
        ClusterAmplitudes(0.1, 0.2, 0.0, REDUCED2)
    with pytest.raises(ValueError):
        ClusterAmplitudes.from_vector([0.1, 0.2, 0.3], REDUCED2)


def test_qudit_state_validation():
    with pytest.raises(ValueError):
        QuditState(np.array([1, 1, 0, 0]))
    assert QuditState.reference().to_json()[0] == [1.0, 0.0]


def test_term_count_examples():
    assert cluster_term_count(4, 2, 2) == (2, 1)
    for n_spatial in (2, 3, 5, 8):
        assert cluster_term_count(2 * n_spatial, 2, 1) == (2 * (n_spatial - 1),)
    with pytest.raises(ValueError):
        cluster_term_count(4, 2, 3)


def _enumerate(M, n_occ, k):
    """Brute force over occupation patterns."""
    from itertools import combinations
    spins = [p % 2 for p in range(M)]
    occ_up = (n_occ + 1) // 2
    ref = [p for p in range(M) if (p % 2 == 0 and p // 2 < occ_up) or (p % 2 == 1 and p // 2 < n_occ // 2)]
    virt = [p for p in range(M) if p not in ref]
    counts = []
    for level in range(1, k + 1):
        c = 0
        for holes in combinations(ref, level):
            for parts in combinations(virt, level):
                if sorted(spins[h] for h in holes) == sorted(spins[p] for p in parts):
                    c += 1
        counts.append(c)
    return tuple(counts)


@pytest.mark.parametrize("M", [4, 8, 12, 16])
def test_term_count_growth(M):
    n_occ = M // 2
    counts = cluster_term_count(M, n_occ, 2)
    assert counts == _enumerate(M, n_occ, 2)
    for k, c in enumerate(counts, start=1):
        assert c <= M ** (2 * k)
