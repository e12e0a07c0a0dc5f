import numpy as np
import pytest
from dataclasses import replace

import uccsim.vqe as vqe_mod
from uccsim.ansatz import FULL6, REDUCED2
from uccsim.hamiltonian import QuditHamiltonian, field_operator, heh_problem, qubit_hamiltonian_matrix
from uccsim.neldermead import OptimizerError
from uccsim.vqe import (EXACT, FOLDED_DEFAULTS, SHOTS, DegeneracyError, VqeSettings, axial_field,
                        determinant_starts, dissociation_scan, exact_eigensystem, field_scan, folded_scan,
                        perturbative_field_energies, point_seed, vqe_ground)


def test_exact_eigensystem_of_diagonal():
    w, V = exact_eigensystem(np.diag([3.0, -1.0, 2.0, 0.5]))
    assert np.array_equal(w, [-1.0, 0.5, 2.0, 3.0])
    assert np.allclose(np.abs(V), np.eye(4)[:, [1, 3, 2, 0]])


def test_exact_eigensystem_rejects_non_hermitian():
    with pytest.raises(ValueError):
        exact_eigensystem(np.triu(np.ones((4, 4))))


def test_settings_validation():
    with pytest.raises(ValueError):
        VqeSettings(params="four")
    with pytest.raises(ValueError):
        VqeSettings(backend="qubits", trotter_steps=None)
    with pytest.raises(ValueError):
        VqeSettings(measurement="noisy")
    assert VqeSettings().nm_config().ftol == 1e-8
    assert VqeSettings(measurement=SHOTS).nm_config().ftol == 1e-3


def test_reduced2_reaches_ground(heh17):
    res = vqe_ground(heh17.H, VqeSettings(params=REDUCED2, polish_exact=True))
    assert res.energy == pytest.approx(res.exact_energy, abs=1e-6)
    assert res.fidelity >= 0.999


def test_full6_iteration_budget_and_agreement(heh17):
    full = vqe_ground(heh17.H, VqeSettings(params=FULL6, trotter_steps=None))
    red = vqe_ground(heh17.H, VqeSettings(params=REDUCED2, trotter_steps=None))
    assert full.converged and full.iterations <= 300
    assert red.iterations < full.iterations
    assert abs(full.energy - red.energy) < 1e-6


@pytest.mark.parametrize("R", [0.7, 1.7, 3.5])
@pytest.mark.parametrize("params", [REDUCED2, FULL6])
def test_variational_bound_and_monotone_acceptance(R, params):
    p = heh_problem(R)
    res = vqe_ground(p.H, VqeSettings(params=params, trotter_steps=2))
    energies = np.array([r.energy for r in res.trace])
    assert np.all(energies >= res.exact_energy - 1e-10)
    accepted = [r.energy for r in res.trace if r.accepted]
    assert np.all(np.diff(accepted) <= 0)
    assert all(0 <= r.fidelity <= 1 for r in res.trace)


def test_qubit_backend_matches_qudit(heh17):
    H16 = qubit_hamiltonian_matrix(heh17.ints)
    s = VqeSettings(params=FULL6, trotter_steps=2, ftol=1e-12, max_iter=1000)
    a = vqe_ground(heh17.H, s)
    b = vqe_ground(heh17.H, replace(s, backend="qubits"), H16=H16)
    assert abs(a.energy - b.energy) < 1e-8
    with pytest.raises(ValueError):
        vqe_ground(heh17.H, replace(s, backend="qubits"))


@pytest.mark.parametrize("estimator", ["tomography", "terms"])
def test_shot_mode_lands_near_ground(heh17, estimator):
    from uccsim.hamiltonian import sector_terms
    terms = [M for _, M in sector_terms(heh17.ints)]
    s = VqeSettings(measurement=SHOTS, shots=1000, seed=21, estimator=estimator)
    res = vqe_ground(heh17.H, s, terms=terms)
    assert abs(res.energy - res.exact_energy) < 3 * res.stderr + 1e-12
    assert res.fidelity >= 0.95
    again = vqe_ground(heh17.H, s, terms=terms)
    assert again.energy == res.energy and again.evaluations == res.evaluations


def test_terms_estimator_needs_terms(heh17):
    with pytest.raises(ValueError):
        vqe_ground(heh17.H, VqeSettings(measurement=SHOTS, estimator="terms"))


def test_optimizer_failure_carries_partial_trace(heh17, monkeypatch):
    real = vqe_mod._energy_fn

    def broken(H, s, terms, H16):
        inner = real(H, s, terms, H16)
        count = [0]

        def evaluate(t, index):
            e, se, psi = inner(t, index)
            count[0] += 1
            return (np.nan if count[0] > 5 else e), se, psi

        return evaluate

    monkeypatch.setattr(vqe_mod, "_energy_fn", broken)
    with pytest.raises(OptimizerError) as info:
        vqe_ground(heh17.H)
    assert len(info.value.partial) == 6


def test_point_seed_independent_of_order():
    assert point_seed(7, 3) == point_seed(7, 3)
    assert len({point_seed(7, i) for i in range(50)}) == 50


def test_dissociation_scan_records():
    recs = dissociation_scan([0.9, 1.7], VqeSettings(polish_exact=True))
    assert [r["index"] for r in recs] == [0, 1]
    for r in recs:
        assert r["status"] == "ok"
        assert r["E_vqe_total"] == pytest.approx(r["E_vqe_elec"] + r["E_nuc"])
        assert r["E_vqe_elec"] == pytest.approx(r["E_exact_elec"], abs=1e-6)
        assert r["E_exact_total"] <= r["E_hf_total"] + 1e-12
    with pytest.raises(ValueError):
        dissociation_scan([1.0, -1.0])


def test_scan_records_point_failure(monkeypatch):
    real = vqe_mod.heh_problem

    def flaky(R):
        if R == 2.0:
            raise RuntimeError("SCF diverged")
        return real(R)

    monkeypatch.setattr(vqe_mod, "heh_problem", flaky)
    recs = dissociation_scan([1.5, 2.0, 2.5])
    assert [r["status"] for r in recs] == ["ok", "failed: SCF diverged", "ok"]


def test_parallel_scan_matches_serial():
    s = VqeSettings(measurement=SHOTS, shots=200, seed=3, max_iter=30)
    grid = [1.2, 1.7, 2.4]
    assert dissociation_scan(grid, s, workers=1) == dissociation_scan(grid, s, workers=3)


def test_field_scan_zero_strength_matches_bare(heh17):
    s = VqeSettings(polish_exact=True)
    rec = field_scan(1.7, [0.0], s)[0]
    bare = dissociation_scan([1.7], s)[0]
    assert rec["E_vqe_total"] == bare["E_vqe_total"]
    assert rec["E_first_elec"] == rec["E_second_elec"] == pytest.approx(rec["E_exact_elec"], abs=1e-14)


def test_perturbative_energies(heh17):
    V = field_operator(heh17.ints, heh17.geometry, axial_field(1.0))
    e1, e2 = perturbative_field_energies(heh17.H, V, [0.0, 0.01, 0.02])
    e0 = exact_eigensystem(heh17.H)[0][0]
    assert e1[0] == e2[0] == pytest.approx(e0, abs=1e-14)
    assert np.allclose(np.diff(e1, 2), 0.0, atol=1e-14)
    assert np.all(e2[1:] <= e1[1:])


def test_perturbation_rejects_degenerate_ground():
    H = QuditHamiltonian(np.diag([-1.0, -1.0, 0.0, 1.0]))
    with pytest.raises(DegeneracyError):
        perturbative_field_energies(H, np.eye(4), [0.1])


def test_folded_at_eigenvalues(heh17):
    w, V = exact_eigensystem(heh17.H)
    recs = folded_scan(heh17.H, w)
    for rec, e in zip(recs, w):
        assert rec["folded_min"] < 1e-8
        assert rec["E_plus"] == pytest.approx(e, abs=1e-4)


def test_folded_between_eigenvalues(heh17):
    w, V = exact_eigensystem(heh17.H)
    lams = [(w[0] + w[1]) / 2 - 0.1, (w[1] + w[2]) / 2 + 0.02, w[3] + 0.3]
    for rec in folded_scan(heh17.H, lams):
        nearest = rec["E_nearest_exact"]
        assert min(abs(rec["E_plus"] - nearest), abs(rec["E_minus"] - nearest)) < 1e-6
        assert rec["folded_min"] == pytest.approx((nearest - rec["lambda"]) ** 2, abs=1e-10)


def test_folded_ground_state_is_an_eigenvector(heh17):
    w, V = exact_eigensystem(heh17.H)
    Hf = vqe_mod.fold(heh17.H, w[2] + 0.01)
    runs = [vqe_ground(Hf, FOLDED_DEFAULTS, x0=x0) for x0 in determinant_starts(FULL6)]
    best = min(runs, key=lambda r: r.energy)
    overlaps = np.abs(V.conj().T @ best.state) ** 2
    assert np.max(overlaps) >= 1 - 1e-8


@pytest.mark.parametrize("shots,resolved", [(100, False), (1000, True)])
def test_folded_shot_mode_resolution_criterion(heh17, shots, resolved):
    w, _ = exact_eigensystem(heh17.H)
    s = replace(FOLDED_DEFAULTS, measurement=SHOTS, shots=shots, seed=5, ftol=None, max_iter=150, trotter_steps=2)
    rec = folded_scan(heh17.H, [w[1]], s)[0]
    spacing = w[2] - w[1]
    # two levels blur together once the noise on <(H - lambda)^2> exceeds their squared gap
    assert (rec["stderr"] < spacing ** 2) == resolved


def test_determinant_starts_are_determinants():
    from uccsim.ansatz import ClusterAmplitudes, ucc_state_exact
    for params in (FULL6, REDUCED2):
        for x in determinant_starts(params):
            psi = ucc_state_exact(ClusterAmplitudes.from_vector(x, params)).amplitudes
            assert np.isclose(np.max(np.abs(psi)), 1.0)
