"""Restricted Hartree-Fock and the spin-orbital integrals of the second-quantized Hamiltonian."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import fractional_matrix_power

from uccsim.integrals import AOIntegralSet

# Global spin-orbital order: index = 2 * spatial + spin, spin 0 = up, 1 = down,
# i.e. (1up, 1down, 2up, 2down).
N_SPIN_ORBITALS = 4


def spatial(p: int) -> int:
    return p // 2


def spin(p: int) -> int:
    return p % 2


class SCFConvergenceError(RuntimeError):
    def __init__(self, message, last):
        super().__init__(message)
        self.last = last


@dataclass(frozen=True)
class SCFOptions:
    max_iter: int = 200
    e_tol: float = 1e-10
    d_tol: float = 1e-8
    damping: float = 0.3


@dataclass(frozen=True)
class RhfSolution:
    C: np.ndarray
    eps: np.ndarray
    E_elec: float
    E_total: float
    iterations: int
    converged: bool
    energies: tuple[float, ...] = ()


@dataclass(frozen=True)
class MOIntegrals:
    hcore: np.ndarray
    eri: np.ndarray  # chemist (PQ|RS)
    dipole: np.ndarray  # (3, n, n)


@dataclass(frozen=True)
class SpinOrbitalIntegrals:
    """Coefficients of H = sum h1[p,q] a+_p a_q + 1/2 sum h2[p,q,r,s] a+_p a+_q a_r a_s.

    h2[p,q,r,s] = <pq|sr> = (ps|qr) with spin deltas; ``dipole`` holds the
    electron-position operator <p|r_c|q> in the same spin-orbital basis.
    """

    h1: np.ndarray
    h2: np.ndarray
    Enn: float
    dipole: np.ndarray | None = None


def _density(C: np.ndarray, n_occ: int) -> np.ndarray:
    Cocc = C[:, :n_occ]
    return 2.0 * Cocc @ Cocc.T


def _fock(hcore, eri, P):
    J = np.einsum("pqrs,rs->pq", eri, P)
    K = np.einsum("prqs,rs->pq", eri, P)
    return hcore + J - 0.5 * K


def rhf_scf(ao: AOIntegralSet, n_electrons: int, opts: SCFOptions | None = None) -> RhfSolution:
    """Damped fixed-point RHF with Loewdin orthogonalization and a core-Hamiltonian guess."""
    opts = opts or SCFOptions()
    if n_electrons <= 0 or n_electrons % 2:
        raise ValueError(f"RHF needs an even positive electron count, got {n_electrons}")
    if n_electrons > 2 * ao.nbasis:
        raise ValueError("more electrons than the basis can hold")
    n_occ = n_electrons // 2
    X = fractional_matrix_power(ao.S, -0.5).real
    hcore = ao.hcore

    def diagonalize(F):
        eps, Cp = np.linalg.eigh(X.T @ F @ X)
        return eps, X @ Cp

    eps, C = diagonalize(hcore)
    P = _density(C, n_occ)
    energies = []
    e_old = None
    for it in range(1, opts.max_iter + 1):
        F = _fock(hcore, ao.ERI, P)
        e_elec = 0.5 * float(np.sum(P * (hcore + F)))
        energies.append(e_elec)
        eps, C = diagonalize(F)
        P_new = _density(C, n_occ)
        dP = float(np.max(np.abs(P_new - P)))
        if e_old is not None and abs(e_elec - e_old) < opts.e_tol and dP < opts.d_tol:
            return RhfSolution(C, eps, e_elec, e_elec + ao.Enn, it, True, tuple(energies))
        e_old = e_elec
        P = (1.0 - opts.damping) * P_new + opts.damping * P
    last = RhfSolution(C, eps, e_elec, e_elec + ao.Enn, opts.max_iter, False, tuple(energies))
    raise SCFConvergenceError(f"RHF did not converge in {opts.max_iter} iterations", last)


def mo_transform(ao: AOIntegralSet, C: np.ndarray) -> MOIntegrals:
    if not np.allclose(C.T @ ao.S @ C, np.eye(C.shape[1]), atol=1e-10):
        raise ValueError("MO coefficients are not orthonormal in the AO metric")
    hcore = C.T @ ao.hcore @ C
    eri = np.einsum("pqrs,pi->iqrs", ao.ERI, C)
    eri = np.einsum("iqrs,qj->ijrs", eri, C)
    eri = np.einsum("ijrs,rk->ijks", eri, C)
    eri = np.einsum("ijks,sl->ijkl", eri, C)
    dipole = np.einsum("pi,cpq,qj->cij", C, ao.D, C)
    return MOIntegrals(hcore, eri, dipole)


def spin_orbital_integrals(mo: MOIntegrals, Enn: float) -> SpinOrbitalIntegrals:
    n = 2 * mo.hcore.shape[0]
    h1 = np.zeros((n, n))
    h2 = np.zeros((n, n, n, n))
    dip = np.zeros((3, n, n))
    for p in range(n):
        for q in range(n):
            if spin(p) == spin(q):
                h1[p, q] = mo.hcore[spatial(p), spatial(q)]
                dip[:, p, q] = mo.dipole[:, spatial(p), spatial(q)]
    # chemist (PS|QR) -> coefficient of a+_p a+_q a_r a_s; the only convention crossing
    for p, q, r, s in np.ndindex(n, n, n, n):
        if spin(p) == spin(s) and spin(q) == spin(r):
            h2[p, q, r, s] = mo.eri[spatial(p), spatial(s), spatial(q), spatial(r)]
    return SpinOrbitalIntegrals(h1, h2, float(Enn), dip)
