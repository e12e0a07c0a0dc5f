"""
Variational loop and scan drivers.

One VQE run prepares the UCC state for a parameter vector, estimates the
energy (exactly or from finite shots), and hands the number to Nelder-Mead.
Fidelity with the exact ground vector is recorded for every evaluation but is
never seen by the optimizer.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from uccsim import ansatz
from uccsim.ansatz import FULL6, REDUCED2, ClusterAmplitudes
from uccsim.hamiltonian import (MolecularProblem, QuditHamiltonian, field_dress, field_operator, fold,
                                heh_problem, qubit_hamiltonian_matrix, sector_terms)
from uccsim.measurement import ShotPlan, TermSettings, tomography_energy
from uccsim.neldermead import NelderMeadConfig, OptimizerError, nelder_mead

log = logging.getLogger(__name__)

EXACT = "exact"
SHOTS = "shots"
FINAL_STREAM = 2 ** 31 - 1
DEFAULT_SEED = 0


class DegeneracyError(ValueError):
    pass


@dataclass(frozen=True)
class VqeSettings:
    params: str = REDUCED2
    trotter_steps: int | None = 2  # None -> exact exponential
    measurement: str = EXACT
    shots: int = 1000
    seed: int = DEFAULT_SEED
    estimator: str = "tomography"  # or "terms"
    backend: str = "qudit"  # or "qubits"
    polish_exact: bool = False
    ftol: float | None = None
    max_iter: int = 300
    initial_step: float = 0.1

    def __post_init__(self):
        if self.params not in (FULL6, REDUCED2):
            raise ValueError(f"unknown parameter mode {self.params!r}")
        if self.measurement not in (EXACT, SHOTS):
            raise ValueError(f"unknown measurement mode {self.measurement!r}")
        if self.estimator not in ("tomography", "terms"):
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.backend not in ("qudit", "qubits"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.trotter_steps is not None and self.trotter_steps < 1:
            raise ValueError("Trotter steps must be positive")
        if self.shots < 1:
            raise ValueError("shots must be positive")
        if self.backend == "qubits" and self.trotter_steps is None:
            raise ValueError("the qubit backend is always Trotterized")

    def nm_config(self) -> NelderMeadConfig:
        ftol = self.ftol if self.ftol is not None else (1e-8 if self.measurement == EXACT else 1e-3)
        return NelderMeadConfig(ftol=ftol, max_iter=self.max_iter, initial_step=self.initial_step)


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    energy: float
    accepted: bool
    fidelity: float
    stderr: float = 0.0


@dataclass
class VqeResult:
    amplitudes: ClusterAmplitudes
    energy: float
    stderr: float
    fidelity: float
    converged: bool
    iterations: int
    evaluations: int
    restarts: int
    exact_energy: float
    settings: VqeSettings
    trace: list[TraceRecord] = field(default_factory=list, repr=False)
    state: np.ndarray | None = field(default=None, repr=False)


def exact_eigensystem(H: QuditHamiltonian | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    M = H.matrix if isinstance(H, QuditHamiltonian) else np.asarray(H)
    if np.max(np.abs(M - M.conj().T)) > 1e-12:
        raise ValueError("matrix is not Hermitian")
    return np.linalg.eigh(M)


def _energy_fn(H: QuditHamiltonian, s: VqeSettings, terms, H16) -> Callable:
    """Return f(amplitudes, eval_index) -> (energy, stderr, sector state)."""
    M = H.matrix
    term_settings = TermSettings.build(M, terms) if s.estimator == "terms" and terms is not None else None

    def prepare(t):
        if s.backend == "qubits":
            psi16 = ansatz.ucc_state_qubits(t, s.trotter_steps)
            return psi16, ansatz.qubit_state_to_qudit(psi16)
        return None, ansatz.prepare(t, s.trotter_steps)

    def evaluate(t, index):
        psi16, psi = prepare(t)
        if s.measurement == EXACT:
            if psi16 is not None:
                e = float(np.real(np.vdot(psi16, H16 @ psi16)))
            else:
                v = psi.amplitudes
                e = float(np.real(np.vdot(v, M @ v)))
            return e, 0.0, psi
        plan = ShotPlan(s.shots, (s.seed, index))
        if s.estimator == "terms":
            est = term_settings.estimate(psi, plan)
        else:
            est, _ = tomography_energy(psi, M, plan)
        return est.energy, est.stderr, psi

    return evaluate


def vqe_ground(H: QuditHamiltonian, settings: VqeSettings | None = None, *, terms=None, H16=None,
               x0=None) -> VqeResult:
    """Nelder-Mead over cluster amplitudes, starting from the Hartree-Fock point unless ``x0`` is given."""
    s = settings or VqeSettings()
    if s.estimator == "terms" and s.measurement == SHOTS and terms is None:
        raise ValueError("term-by-term estimation needs the Hamiltonian terms")
    if s.backend == "qubits" and H16 is None:
        raise ValueError("the qubit backend needs the 16x16 Hamiltonian")
    evals, evecs = exact_eigensystem(H)
    ground = evecs[:, 0]
    stage = {"evaluate": _energy_fn(H, s, terms, H16)}
    n = 6 if s.params == FULL6 else 2
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)

    trace: list[TraceRecord] = []
    best = [np.inf]

    def record(e, se, psi):
        fid = float(min(1.0, abs(np.vdot(ground, psi.amplitudes)) ** 2))
        accepted = e < best[0]
        if accepted:
            best[0] = e
        trace.append(TraceRecord(len(trace), e, accepted, fid, se))

    def objective(v):
        e, se, psi = stage["evaluate"](ClusterAmplitudes.from_vector(v, s.params), len(trace))
        record(e, se, psi)
        return e

    try:
        res = nelder_mead(objective, x, s.nm_config())
    except OptimizerError as exc:
        exc.partial = trace
        raise
    if res.restarts_used:
        log.info("Nelder-Mead restarted %d time(s)", res.restarts_used)
    nit, restarts, converged, x_best = res.nit, res.restarts_used, res.converged, res.x

    if s.polish_exact:
        polish = replace(s, trotter_steps=None, backend="qudit", initial_step=0.01)
        stage["evaluate"] = _energy_fn(H, polish, terms, H16)
        pres = nelder_mead(objective, x_best, polish.nm_config())
        nit += pres.nit
        restarts += pres.restarts_used
        converged, x_best = pres.converged, pres.x

    t_best = ClusterAmplitudes.from_vector(x_best, s.params)
    if s.measurement == SHOTS:
        # fresh, unselected re-measurement at the optimum; the running minimum is biased low
        energy, stderr, psi = stage["evaluate"](t_best, FINAL_STREAM)
    else:
        energy, stderr, psi = stage["evaluate"](t_best, len(trace))
    fidelity = float(min(1.0, abs(np.vdot(ground, psi.amplitudes)) ** 2))
    return VqeResult(t_best, energy, stderr, fidelity, converged, nit, len(trace), restarts,
                     float(evals[0]), s, trace, psi.amplitudes)


# ---------------------------------------------------------------------------
# scans

def point_seed(base_seed: int, index: int) -> int:
    """Per-point seed that does not depend on scheduling order."""
    return int(np.random.SeedSequence([int(base_seed), int(index)]).generate_state(1)[0])


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(*it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *it) for it in items]
        return [f.result() for f in futures]


def _run_for_problem(problem: MolecularProblem, H: QuditHamiltonian, s: VqeSettings) -> VqeResult:
    terms = None
    if s.measurement == SHOTS and s.estimator == "terms":
        terms = [M for _, M in sector_terms(problem.ints)]
        extra = H.matrix - problem.H.matrix
        if np.max(np.abs(extra)) > 0:
            terms.append(extra)
    H16 = None
    if s.backend == "qubits":
        H16 = qubit_hamiltonian_matrix(problem.ints)
        if H.label != "bare":
            raise ValueError("the qubit backend only handles the bare Hamiltonian")
    return vqe_ground(H, s, terms=terms, H16=H16)


def _dissociation_point(index: int, R: float, s: VqeSettings) -> dict:
    rec = {"index": index, "R": float(R), "status": "ok"}
    try:
        problem = heh_problem(R)
    except Exception as exc:  # scan keeps going; the failure is recorded
        rec.update(status=f"failed: {exc}")
        return rec
    s = replace(s, seed=point_seed(s.seed, index))
    res = _run_for_problem(problem, problem.H, s)
    enn = problem.Enn
    rec.update(
        E_vqe_elec=res.energy, E_exact_elec=res.exact_energy, E_nuc=enn,
        E_vqe_total=res.energy + enn, E_exact_total=res.exact_energy + enn,
        E_hf_total=problem.rhf.E_total, iterations=res.iterations, evaluations=res.evaluations,
        fidelity=res.fidelity, stderr=res.stderr, converged=res.converged,
    )
    return rec


def dissociation_scan(R_grid: Sequence[float], settings: VqeSettings | None = None,
                      workers: int = 1) -> list[dict]:
    s = settings or VqeSettings()
    if any(R <= 0 for R in R_grid):
        raise ValueError("bond lengths must be positive")
    return _map(_dissociation_point, [(i, R, s) for i, R in enumerate(R_grid)], workers)


def axial_field(strength: float) -> np.ndarray:
    return np.array([0.0, 0.0, float(strength)])


def perturbative_field_energies(H0: QuditHamiltonian, V: np.ndarray, strengths: Sequence[float],
                                gap_tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """First- and second-order Rayleigh-Schroedinger energies of H0 + eps V."""
    evals, evecs = exact_eigensystem(H0)
    if evals[1] - evals[0] < gap_tol:
        raise DegeneracyError("ground state of the unperturbed Hamiltonian is degenerate")
    Vm = evecs.conj().T @ np.asarray(V) @ evecs
    first = float(np.real(Vm[0, 0]))
    second = float(np.sum(np.abs(Vm[1:, 0]) ** 2 / (evals[0] - evals[1:])))
    eps = np.asarray(strengths, dtype=float)
    e1 = evals[0] + eps * first
    return e1, e1 + eps ** 2 * second


def _field_point(index: int, problem: MolecularProblem, strength: float, s: VqeSettings) -> dict:
    Hf = field_dress(problem.H, problem.ints, problem.geometry, axial_field(strength))
    s = replace(s, seed=point_seed(s.seed, index))
    res = _run_for_problem(problem, Hf, s)
    enn = problem.Enn
    return {
        "index": index, "field": float(strength), "status": "ok",
        "E_vqe_elec": res.energy, "E_exact_elec": res.exact_energy, "E_nuc": enn,
        "E_vqe_total": res.energy + enn, "E_exact_total": res.exact_energy + enn,
        "iterations": res.iterations, "evaluations": res.evaluations, "fidelity": res.fidelity,
        "stderr": res.stderr, "converged": res.converged,
    }


def field_scan(R: float, strengths: Sequence[float], settings: VqeSettings | None = None,
               workers: int = 1) -> list[dict]:
    """Ground energy of HeH+ in a static field along the bond axis (He -> H is +z)."""
    s = settings or VqeSettings()
    problem = heh_problem(R)
    records = _map(_field_point, [(i, problem, f, s) for i, f in enumerate(strengths)], workers)
    V = field_operator(problem.ints, problem.geometry, axial_field(1.0))
    e1, e2 = perturbative_field_energies(problem.H, V, strengths)
    for rec, a, b in zip(records, e1, e2):
        rec.update(E_first_elec=float(a), E_second_elec=float(b),
                   E_first_total=float(a) + problem.Enn, E_second_total=float(b) + problem.Enn)
    return records


FOLDED_DEFAULTS = VqeSettings(params=FULL6, trotter_steps=None, ftol=1e-14, max_iter=2000)


def determinant_starts(params: str) -> list[np.ndarray]:
    """Amplitude vectors whose UCC state is exactly |G>, |E11>, |E12> or |E2>.

    A single amplitude of pi/2 rotates |G> fully onto one determinant, and with
    one nonzero amplitude the Trotter splitting is exact.
    """
    h = np.pi / 2
    if params == REDUCED2:
        return [np.zeros(2), np.array([0.0, h])]
    starts = [np.zeros(6)]
    for k in (0, 2, 4):
        x = np.zeros(6)
        x[k] = h
        starts.append(x)
    return starts


def _folded_point(index: int, H: QuditHamiltonian, lam: float, s: VqeSettings) -> dict:
    s = replace(s, seed=point_seed(s.seed, index))
    Hf = fold(H, lam)
    runs = [vqe_ground(Hf, s, x0=x0) for x0 in determinant_starts(s.params)]
    res = min(runs, key=lambda r: r.energy)
    m = res.energy
    root = float(np.sqrt(max(m, 0.0)))
    spectrum = exact_eigensystem(H)[0]
    return {
        "index": index, "lambda": float(lam), "status": "ok", "folded_min": m,
        "E_plus": lam + root, "E_minus": lam - root,
        "E_nearest_exact": float(spectrum[np.argmin(np.abs(spectrum - lam))]),
        "iterations": sum(r.iterations for r in runs), "evaluations": sum(r.evaluations for r in runs),
        "fidelity": res.fidelity, "stderr": res.stderr, "converged": res.converged,
    }


def folded_scan(H: QuditHamiltonian, lambdas: Sequence[float], settings: VqeSettings | None = None,
                workers: int = 1) -> list[dict]:
    """Minimize <(H - lambda)^2> for each lambda; E_plus/E_minus are the two roots lambda +- sqrt(min).

    Each lambda is optimized from every determinant start and the lowest value kept.
    """
    s = settings or FOLDED_DEFAULTS
    lambdas = [float(l) for l in lambdas]
    if not all(np.isfinite(lambdas)):
        raise ValueError("lambda grid must be finite")
    return _map(_folded_point, [(i, H, lam, s) for i, lam in enumerate(lambdas)], workers)


def settings_dict(s: VqeSettings) -> dict:
    return asdict(s)
