"""
Energy estimation on the four-level register: exact expectations, finite-shot
projective sampling, term-by-term estimation and linear-inversion tomography.

Random streams are keyed by (seed..., setting index) so the result of one
setting never depends on how many others were drawn before it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from uccsim.ansatz import QuditState
from uccsim.hamiltonian import jw_transform, sector_terms

HERMITIAN_TOL = 1e-12
DEFAULT_SHOTS = 1000

Seed = Union[int, Sequence[int]]


class DecompositionError(ValueError):
    pass


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray
    generator_means: np.ndarray | None = field(default=None, repr=False)
    generator_stderr: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError("density matrices here are 4x4")
        if np.max(np.abs(m - m.conj().T)) > 1e-10:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > 1e-10:
            raise ValueError("density matrix does not have unit trace")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def pure(cls, state: QuditState) -> "DensityMatrix":
        v = state.amplitudes
        return cls(np.outer(v, v.conj()))

    @property
    def is_positive(self) -> bool:
        return bool(np.min(np.linalg.eigvalsh(self.matrix)) >= -1e-12)


@dataclass(frozen=True)
class ShotPlan:
    shots_per_setting: int = DEFAULT_SHOTS
    seed: Seed = 0
    settings: tuple[np.ndarray, ...] = ()

    def __post_init__(self):
        if int(self.shots_per_setting) != self.shots_per_setting or self.shots_per_setting < 1:
            raise ValueError("shots_per_setting must be a positive integer")

    def substream(self, *keys: int) -> tuple[int, ...]:
        return _seed_tuple(self.seed) + tuple(int(k) for k in keys)


@dataclass(frozen=True)
class EnergyEstimate:
    energy: float
    stderr: float
    settings_used: int


def _seed_tuple(seed: Seed) -> tuple[int, ...]:
    if isinstance(seed, (int, np.integer)):
        return (int(seed),)
    return tuple(int(s) for s in seed)


def _as_density(state) -> np.ndarray:
    if isinstance(state, DensityMatrix):
        return state.matrix
    v = state.amplitudes if isinstance(state, QuditState) else np.asarray(state, dtype=complex)
    return np.outer(v, v.conj())


def _check_hermitian(O: np.ndarray) -> np.ndarray:
    O = np.asarray(O)
    if np.max(np.abs(O - O.conj().T)) > HERMITIAN_TOL:
        raise ValueError("observable is not Hermitian")
    return O


def exact_expectation(state, O: np.ndarray) -> float:
    O = _check_hermitian(O)
    if isinstance(state, DensityMatrix):
        val = np.trace(state.matrix @ O)
    else:
        v = state.amplitudes if isinstance(state, QuditState) else np.asarray(state, dtype=complex)
        val = np.vdot(v, O @ v)
    scale = max(1.0, float(np.max(np.abs(O))))
    if abs(val.imag) > HERMITIAN_TOL * scale:
        raise ArithmeticError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def sampled_expectation(state, O: np.ndarray, shots: int, seed: Seed) -> tuple[float, float]:
    """Projective measurement of O repeated ``shots`` times; returns (mean, standard error)."""
    if shots < 1:
        raise ValueError("need at least one shot")
    O = _check_hermitian(O)
    evals, evecs = np.linalg.eigh(O)
    return _sample(_as_density(state), evals, evecs, shots, seed)


def _sample(rho, evals, evecs, shots, seed) -> tuple[float, float]:
    probs = np.real(np.einsum("ij,jk,ki->i", evecs.conj().T, rho, evecs))
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum()
    counts = np.random.default_rng(_seed_tuple(seed)).multinomial(shots, probs)
    mean = float(counts @ evals / shots)
    if shots == 1:
        return mean, 0.0
    var = float(counts @ (evals - mean) ** 2 / (shots - 1))
    return mean, float(np.sqrt(var / shots))


@lru_cache(maxsize=None)
def _gell_mann(d: int) -> tuple[np.ndarray, ...]:
    sym, anti, diag = [], [], []
    for j in range(d):
        for k in range(j + 1, d):
            s = np.zeros((d, d), dtype=complex)
            s[j, k] = s[k, j] = 1.0
            sym.append(s)
            a = np.zeros((d, d), dtype=complex)
            a[j, k] = -1j
            a[k, j] = 1j
            anti.append(a)
    for l in range(1, d):
        m = np.zeros((d, d), dtype=complex)
        m[np.arange(l), np.arange(l)] = 1.0
        m[l, l] = -l
        diag.append(np.sqrt(2.0 / (l * (l + 1))) * m)
    out = tuple(sym + anti + diag)
    for g in out:
        g.setflags(write=False)
    return out


def gell_mann_basis(d: int = 4) -> tuple[np.ndarray, ...]:
    """Traceless Hermitian generators with Tr(g_j g_k) = 2 delta_jk.

    Order: symmetric (j<k lexicographic), antisymmetric (same pairs), diagonal.
    """
    return _gell_mann(d)


@lru_cache(maxsize=None)
def _gell_mann_eig(d: int):
    return tuple(np.linalg.eigh(g) for g in _gell_mann(d))


def tomography(state, plan: ShotPlan | None = None, *, exact: bool = False) -> DensityMatrix:
    """Linear inversion rho = I/4 + 1/2 sum_k <g_k> g_k over the 15 generators.

    No positivity repair; check ``DensityMatrix.is_positive``.
    """
    gens = gell_mann_basis(4)
    if plan is not None and plan.settings and len(plan.settings) != len(gens):
        raise ValueError("tomography uses exactly 15 settings")
    means = np.zeros(len(gens))
    errs = np.zeros(len(gens))
    rho = _as_density(state)
    for k, (g, (evals, evecs)) in enumerate(zip(gens, _gell_mann_eig(4))):
        if exact or plan is None:
            means[k] = exact_expectation(state, g)
        else:
            means[k], errs[k] = _sample(rho, evals, evecs, plan.shots_per_setting, plan.substream(k))
    rho_est = np.eye(4, dtype=complex) / 4 + 0.5 * sum(m * g for m, g in zip(means, gens))
    return DensityMatrix(rho_est, means, errs)


def tomography_energy(state, H: np.ndarray, plan: ShotPlan | None = None, *,
                      exact: bool = False) -> tuple[EnergyEstimate, DensityMatrix]:
    """Tr(rho H) from reconstructed rho, with the standard error propagated linearly."""
    rho = tomography(state, plan, exact=exact)
    H = _check_hermitian(H)
    weights = np.array([0.5 * np.trace(g @ H).real for g in gell_mann_basis(4)])
    energy = float(np.trace(rho.matrix @ H).real)
    stderr = float(np.sqrt(np.sum((weights * rho.generator_stderr) ** 2)))
    return EnergyEstimate(energy, stderr, len(weights)), rho


def measurement_settings(terms: Sequence[np.ndarray], tol: float = 1e-12) -> tuple[float, list[np.ndarray]]:
    """Split terms into (constant, distinct Hermitian observables) whose sum gives the energy.

    Each term's Hermitian part is split into a real symmetric and an imaginary
    antisymmetric observable; multiples of the identity become the constant and
    observables proportional to one another share a setting.
    """
    constant = 0.0
    settings: list[np.ndarray] = []
    for M in terms:
        M = np.asarray(M, dtype=complex)
        A, B = M.real, M.imag
        for obs in ((A + A.T) / 2, 1j * (B - B.T) / 2):
            if np.max(np.abs(obs)) < tol:
                continue
            tr = np.trace(obs).real / 4
            if np.max(np.abs(obs - tr * np.eye(4))) < tol:
                constant += tr
                continue
            for i, S in enumerate(settings):
                if _proportional(S, obs, tol):
                    settings[i] = S + obs
                    break
            else:
                settings.append(obs)
    return constant, settings


def _proportional(A: np.ndarray, B: np.ndarray, tol: float) -> bool:
    a = A.ravel()
    b = B.ravel()
    k = int(np.argmax(np.abs(a)))
    if abs(a[k]) < tol:
        return False
    ratio = b[k] / a[k]
    return bool(np.max(np.abs(b - ratio * a)) < tol)


@dataclass(frozen=True)
class TermSettings:
    """Measurement settings for a fixed term decomposition, diagonalized once."""

    constant: float
    observables: tuple[np.ndarray, ...]
    eigensystems: tuple[tuple[np.ndarray, np.ndarray], ...] = field(repr=False)

    @classmethod
    def build(cls, H: np.ndarray, terms: Sequence[np.ndarray]) -> "TermSettings":
        H = np.asarray(H)
        total = np.sum(np.asarray(terms, dtype=complex), axis=0) if len(terms) else np.zeros((4, 4))
        if np.max(np.abs(total - H)) > 1e-10:
            raise DecompositionError("terms do not sum to the Hamiltonian")
        constant, settings = measurement_settings(terms)
        return cls(constant, tuple(settings), tuple(np.linalg.eigh(O) for O in settings))

    def estimate(self, state, plan: ShotPlan | None = None, *, exact: bool = False) -> EnergyEstimate:
        energy = self.constant
        var = 0.0
        if exact or plan is None:
            energy += sum(exact_expectation(state, O) for O in self.observables)
        else:
            rho = _as_density(state)
            for k, (evals, evecs) in enumerate(self.eigensystems):
                m, se = _sample(rho, evals, evecs, plan.shots_per_setting, plan.substream(k))
                energy += m
                var += se * se
        return EnergyEstimate(float(energy), float(np.sqrt(var)), len(self.observables))


def term_by_term_energy(state, H: np.ndarray, terms: Sequence[np.ndarray], plan: ShotPlan | None = None,
                        *, exact: bool = False) -> EnergyEstimate:
    """Sum of per-setting sampled expectations; stderr combined in quadrature."""
    return TermSettings.build(H, terms).estimate(state, plan, exact=exact)


REFERENCE_TERM_MEASUREMENTS = 24
REFERENCE_TOMOGRAPHY_SETTINGS = 15


def term_accounting(ints) -> dict[str, int]:
    """Term and setting counts for the HeH+ Hamiltonian, next to the reference figures."""
    pauli = jw_transform(ints)
    blocks = [M for _, M in sector_terms(ints)]
    _, settings = measurement_settings(blocks)
    return {
        "pauli_terms": len(pauli),
        "pauli_non_identity": sum(1 for k, _ in pauli if set(k) != {"I"}),
        "fermionic_sector_terms": len(blocks),
        "term_by_term_settings": len(settings),
        "tomography_settings": len(gell_mann_basis(4)),
        "reference_term_measurements": REFERENCE_TERM_MEASUREMENTS,
        "reference_tomography_settings": REFERENCE_TOMOGRAPHY_SETTINGS,
    }
