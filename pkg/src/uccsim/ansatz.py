"""
Unitary coupled-cluster state preparation, exp(T - T^dagger)|G>.

T = t11 a+_{2dn} a_{1dn} + t12 a+_{2up} a_{1up} + t2 a+_{2dn} a+_{2up} a_{1up} a_{1dn}.
In the determinant basis (|G>, |E11>, |E12>, |E2>) of ``uccsim.hamiltonian`` the
generator H_eff = i(T - T^dagger) is

    i t11 (|E11><G| + |E2><E12|) + i t12 (|E12><G| + |E2><E11|) + i t2 |E2><G| + h.c.

and the prepared state is exp(-i H_eff)|G>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from uccsim.hamiltonian import (PauliSum, jw_monomial, occupation_state, pauli_to_matrix,
                                sector_isometry)

FULL6 = "full6"
REDUCED2 = "reduced2"
MODES = (FULL6, REDUCED2)

G, E11, E12, E2 = range(4)

# (from, to) pairs each amplitude drives
_BLOCKS = {
    "t11": ((G, E11), (E12, E2)),
    "t12": ((G, E12), (E11, E2)),
    "t2": ((G, E2),),
}

# Excitation operators as (spin-orbital index, is_creation) strings.
_EXCITATIONS = {
    "t11": ((3, True), (1, False)),
    "t12": ((2, True), (0, False)),
    "t2": ((3, True), (2, True), (0, False), (1, False)),
}


@dataclass(frozen=True)
class ClusterAmplitudes:
    t11: complex = 0.0
    t12: complex = 0.0
    t2: complex = 0.0
    mode: str = FULL6

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown amplitude mode {self.mode!r}")
        if self.mode == REDUCED2:
            if self.t11 != self.t12 or np.imag(self.t11) != 0 or np.imag(self.t2) != 0:
                raise ValueError("reduced2 needs t11 == t12 and real amplitudes")

    @property
    def n_params(self) -> int:
        return 6 if self.mode == FULL6 else 2

    def as_dict(self) -> dict[str, complex]:
        return {"t11": complex(self.t11), "t12": complex(self.t12), "t2": complex(self.t2)}

    def to_vector(self) -> np.ndarray:
        if self.mode == REDUCED2:
            return np.array([np.real(self.t11), np.real(self.t2)], dtype=float)
        return np.array([np.real(self.t11), np.imag(self.t11), np.real(self.t12),
                         np.imag(self.t12), np.real(self.t2), np.imag(self.t2)], dtype=float)

    @classmethod
    def from_vector(cls, x, mode: str = FULL6) -> "ClusterAmplitudes":
        x = np.asarray(x, dtype=float)
        if mode == REDUCED2:
            if x.shape != (2,):
                raise ValueError("reduced2 takes 2 parameters")
            return cls(float(x[0]), float(x[0]), float(x[1]), REDUCED2)
        if x.shape != (6,):
            raise ValueError("full6 takes 6 parameters")
        return cls(complex(x[0], x[1]), complex(x[2], x[3]), complex(x[4], x[5]), FULL6)


@dataclass(frozen=True)
class QuditState:
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.shape != (4,):
            raise ValueError("qudit states have 4 amplitudes")
        if abs(np.linalg.norm(a) - 1.0) > 1e-12:
            raise ValueError("qudit state is not normalized")
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def reference(cls) -> "QuditState":
        return cls(np.array([1, 0, 0, 0], dtype=complex))

    def to_json(self) -> list[list[float]]:
        return [[float(z.real), float(z.imag)] for z in self.amplitudes]


def _generator(name: str) -> np.ndarray:
    K = np.zeros((4, 4))
    for a, b in _BLOCKS[name]:
        K[b, a] = 1.0
    return K


def effective_hamiltonian(t: ClusterAmplitudes) -> np.ndarray:
    H = np.zeros((4, 4), dtype=complex)
    for name, amp in t.as_dict().items():
        H += 1j * amp * _generator(name)
    return H + H.conj().T


def ucc_state_exact(t: ClusterAmplitudes) -> QuditState:
    psi = expm(-1j * effective_hamiltonian(t))[:, G]
    return QuditState(psi / np.linalg.norm(psi))


def _rotate(psi: np.ndarray, name: str, amp: complex, s: float) -> None:
    """In place: psi <- exp(s (amp K - amp* K^dagger)) psi for generator ``name``."""
    r = abs(amp)
    if r == 0.0:
        return
    c = math.cos(s * r)
    u = math.sin(s * r) / r
    for a, b in _BLOCKS[name]:
        pa, pb = psi[a], psi[b]
        psi[a] = c * pa - u * np.conj(amp) * pb
        psi[b] = c * pb + u * amp * pa


def ucc_state_trotter(t: ClusterAmplitudes, N: int = 2) -> QuditState:
    """Symmetric second-order splitting over the t11, t12, t2 generators, N steps."""
    if N < 1:
        raise ValueError("Trotter step count must be >= 1")
    amps = t.as_dict()
    psi = np.array([1, 0, 0, 0], dtype=complex)
    h = 1.0 / N
    for _ in range(N):
        _rotate(psi, "t11", amps["t11"], h / 2)
        _rotate(psi, "t12", amps["t12"], h / 2)
        _rotate(psi, "t2", amps["t2"], h)
        _rotate(psi, "t12", amps["t12"], h / 2)
        _rotate(psi, "t11", amps["t11"], h / 2)
    return QuditState(psi / np.linalg.norm(psi))


def prepare(t: ClusterAmplitudes, trotter_steps: int | None = 2) -> QuditState:
    """Trotterized preparation, or the exact exponential when ``trotter_steps`` is None."""
    return ucc_state_exact(t) if trotter_steps is None else ucc_state_trotter(t, trotter_steps)


def cluster_generator_qubits(t: ClusterAmplitudes, n_qubits: int = 4) -> PauliSum:
    """Jordan-Wigner image of T - T^dagger; every coefficient is purely imaginary."""
    out = PauliSum(n_qubits)
    scale = max(abs(a) for a in t.as_dict().values())
    for name, amp in t.as_dict().items():
        if amp == 0:
            continue
        ops = _EXCITATIONS[name]
        adj = tuple((j, not d) for j, d in reversed(ops))
        out = out + jw_monomial(ops, n_qubits, amp) - jw_monomial(adj, n_qubits, np.conj(amp))
    # cancellation residue is relative to the amplitudes, so prune relative to them too
    return out.simplify(tol=1e-14 * scale) if scale else out


@lru_cache(maxsize=None)
def _string_matrix(letters: str) -> np.ndarray:
    return pauli_to_matrix(PauliSum(len(letters), {letters: 1.0}))


def ucc_state_qubits(t: ClusterAmplitudes, N: int = 2) -> np.ndarray:
    """16-amplitude register state from Pauli-string rotations, symmetric ordering, N steps."""
    if N < 1:
        raise ValueError("Trotter step count must be >= 1")
    K = cluster_generator_qubits(t)
    rotations = []
    for letters, coef in K:
        theta = float(np.imag(coef)) / (2 * N)
        P = _string_matrix(letters)
        # exp(i theta P) = cos(theta) + i sin(theta) P
        rotations.append(math.cos(theta) * np.eye(16) + 1j * math.sin(theta) * P)
    psi = occupation_state([1, 1, 0, 0])
    for _ in range(N):
        for R in rotations:
            psi = R @ psi
        for R in reversed(rotations):
            psi = R @ psi
    return psi


def qubit_state_to_qudit(psi16: np.ndarray) -> QuditState:
    v = sector_isometry().conj().T @ psi16
    return QuditState(v / np.linalg.norm(v))


def cluster_term_count(M: int, n_occ: int, k: int) -> tuple[int, ...]:
    """Spin-preserving excitations of each level 1..k from the reference determinant.

    ``M`` counts spin orbitals and ``n_occ`` occupied spin orbitals, split evenly
    between the two spin channels (odd counts put the extra one in spin up).
    """
    if not (0 < n_occ <= M) or not (1 <= k <= n_occ):
        raise ValueError("need 0 < n_occ <= M and 1 <= k <= n_occ")
    occ_up = (n_occ + 1) // 2
    occ_dn = n_occ // 2
    vir_up = (M + 1) // 2 - occ_up
    vir_dn = M // 2 - occ_dn
    counts = []
    for level in range(1, k + 1):
        total = 0
        for n_up in range(level + 1):
            n_dn = level - n_up
            total += (math.comb(occ_up, n_up) * math.comb(occ_dn, n_dn)
                      * math.comb(vir_up, n_up) * math.comb(vir_dn, n_dn))
        counts.append(total)
    return tuple(counts)
