"""
Qubit and four-level (qudit) Hamiltonians for the two-electron, two-orbital problem.

Two independent routes produce the 4x4 Hamiltonian over the determinants
|G>, |E11>, |E12>, |E2>:

* Jordan-Wigner: fermionic terms -> PauliSum -> 16x16 matrix -> sector block.
* Slater-Condon: matrix elements between determinants directly, with the
  fermionic signs tracked by permutation parity.

Qubit j is spin orbital j in the order (1up, 1down, 2up, 2down); a qubit in
|1> is an occupied orbital and qubit 0 is the leftmost Kronecker factor.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from uccsim.integrals import AOIntegralSet, MoleculeGeometry, ao_integrals, heh_cation
from uccsim.scf import (N_SPIN_ORBITALS, RhfSolution, SCFOptions, SpinOrbitalIntegrals, mo_transform,
                        rhf_scf, spin_orbital_integrals)

PRUNE_TOL = 1e-12
MAX_DENSE_QUBITS = 14
SECTOR_TOL = 1e-10

# Each determinant is a creation string a+_{p1} a+_{p2} |vac> in the order written.
# |E12> = |2up 1down> carries a minus sign relative to the ascending bit pattern,
# which makes T - T^dagger act with all-positive signs in this basis.
SECTOR_LABELS = ("G", "E11", "E12", "E2")
SECTOR_DETERMINANTS = ((0, 1), (0, 3), (2, 1), (2, 3))

_PAULI_PRODUCT = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}

_PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class SectorViolationError(RuntimeError):
    pass


class ResourceError(ValueError):
    pass


@dataclass(frozen=True)
class PauliString:
    coefficient: complex
    letters: str

    def __post_init__(self):
        if set(self.letters) - set("IXYZ"):
            raise ValueError(f"invalid Pauli letters {self.letters!r}")


class PauliSum:
    """Weighted sum of Pauli strings on a fixed register, merged by letter pattern."""

    def __init__(self, n_qubits: int, terms=None):
        self.n_qubits = n_qubits
        self._terms: dict[str, complex] = {}
        for letters, coef in (terms or {}).items():
            self._add_term(letters, coef)

    def _add_term(self, letters: str, coef: complex):
        if len(letters) != self.n_qubits:
            raise ValueError(f"string {letters!r} does not fit {self.n_qubits} qubits")
        if set(letters) - set("IXYZ"):
            raise ValueError(f"invalid Pauli letters {letters!r}")
        self._terms[letters] = self._terms.get(letters, 0.0) + coef

    @classmethod
    def identity(cls, n_qubits: int, coef: complex = 1.0) -> "PauliSum":
        return cls(n_qubits, {"I" * n_qubits: coef})

    @classmethod
    def single(cls, n_qubits: int, letters: dict[int, str], coef: complex = 1.0) -> "PauliSum":
        s = ["I"] * n_qubits
        for q, ch in letters.items():
            s[q] = ch
        return cls(n_qubits, {"".join(s): coef})

    @property
    def terms(self) -> list[PauliString]:
        return [PauliString(c, k) for k, c in self._terms.items()]

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms.items())

    def coefficient(self, letters: str) -> complex:
        return self._terms.get(letters, 0.0)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        out = PauliSum(self.n_qubits, self._terms)
        for k, c in other:
            out._add_term(k, c)
        return out

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + other * -1.0

    def __mul__(self, other):
        if isinstance(other, PauliSum):
            out = PauliSum(self.n_qubits)
            for k1, c1 in self:
                for k2, c2 in other:
                    phase = 1
                    letters = []
                    for a, b in zip(k1, k2):
                        ph, ch = _PAULI_PRODUCT[a, b]
                        phase *= ph
                        letters.append(ch)
                    out._add_term("".join(letters), phase * c1 * c2)
            return out
        return PauliSum(self.n_qubits, {k: c * other for k, c in self})

    __rmul__ = __mul__

    def adjoint(self) -> "PauliSum":
        return PauliSum(self.n_qubits, {k: np.conj(c) for k, c in self})

    def simplify(self, tol: float = PRUNE_TOL) -> "PauliSum":
        return PauliSum(self.n_qubits, {k: c for k, c in self if abs(c) >= tol})

    def is_hermitian(self, tol: float = PRUNE_TOL) -> bool:
        return all(abs(np.imag(c)) < tol for _, c in self)

    def to_json(self) -> list[dict]:
        return [{"letters": k, "re": float(np.real(c)), "im": float(np.imag(c))} for k, c in self]

    def __repr__(self):
        return f"PauliSum({self.n_qubits}, {len(self)} terms)"


@dataclass(frozen=True)
class QuditHamiltonian:
    """4x4 operator over (|G>, |E11>, |E12>, |E2>); ``offset`` is already inside ``matrix``."""

    matrix: np.ndarray
    offset: float = 0.0
    label: str = "bare"

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.shape != (4, 4):
            raise ValueError("qudit Hamiltonian must be 4x4")
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise ValueError("qudit Hamiltonian is not Hermitian")

    def with_offset(self, shift: float) -> "QuditHamiltonian":
        return replace(self, matrix=self.matrix + shift * np.eye(4), offset=self.offset + shift)


def jw_ladder(j: int, dagger: bool, n_qubits: int) -> PauliSum:
    """a_j -> Z_0...Z_{j-1} (X_j + iY_j)/2, a+_j -> Z_0...Z_{j-1} (X_j - iY_j)/2."""
    z = {q: "Z" for q in range(j)}
    sign = -1j if dagger else 1j
    return PauliSum.single(n_qubits, {**z, j: "X"}, 0.5) + PauliSum.single(n_qubits, {**z, j: "Y"}, 0.5 * sign)


def jw_monomial(ops, n_qubits: int, coef: complex = 1.0) -> PauliSum:
    """Image of coef * prod(ops) where ops is a sequence of (index, is_creation)."""
    out = PauliSum.identity(n_qubits, coef)
    for j, dagger in ops:
        out = out * jw_ladder(j, dagger, n_qubits)
    return out


def jw_transform(ints: SpinOrbitalIntegrals, include_nuclear: bool = False) -> PauliSum:
    n = ints.h1.shape[0]
    out = PauliSum(n)
    for p, q in itertools.product(range(n), repeat=2):
        if ints.h1[p, q] != 0.0:
            out = out + jw_monomial([(p, True), (q, False)], n, ints.h1[p, q])
    for p, q, r, s in itertools.product(range(n), repeat=4):
        if ints.h2[p, q, r, s] != 0.0 and p != q and r != s:
            out = out + jw_monomial([(p, True), (q, True), (r, False), (s, False)], n,
                                    0.5 * ints.h2[p, q, r, s])
    if include_nuclear:
        out = out + PauliSum.identity(n, ints.Enn)
    out = out.simplify()
    # Hermitian input -> real coefficients; drop the rounding residue
    return PauliSum(n, {k: complex(c.real, 0.0) if abs(c.imag) < PRUNE_TOL else c for k, c in out})


def pauli_to_matrix(ps: PauliSum, n_qubits: int | None = None) -> np.ndarray:
    n = ps.n_qubits if n_qubits is None else n_qubits
    if n != ps.n_qubits:
        raise ValueError("register size does not match the PauliSum")
    if n > MAX_DENSE_QUBITS:
        raise ResourceError(f"dense expansion limited to {MAX_DENSE_QUBITS} qubits, got {n}")
    dim = 2 ** n
    out = np.zeros((dim, dim), dtype=complex)
    for letters, coef in ps:
        m = np.ones((1, 1), dtype=complex)
        for ch in letters:
            m = np.kron(m, _PAULI_MATRICES[ch])
        out += coef * m
    return out


@lru_cache(maxsize=None)
def _ladder_matrices(n_qubits: int = N_SPIN_ORBITALS):
    return tuple(pauli_to_matrix(jw_ladder(j, False, n_qubits)) for j in range(n_qubits))


def ladder_matrix(j: int, dagger: bool = False, n_qubits: int = N_SPIN_ORBITALS) -> np.ndarray:
    a = _ladder_matrices(n_qubits)[j]
    return a.conj().T if dagger else a


def occupation_state(bits) -> np.ndarray:
    """Computational-basis vector for an occupation pattern, qubit 0 most significant."""
    index = int("".join(str(int(b)) for b in bits), 2)
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[index] = 1.0
    return v


@lru_cache(maxsize=None)
def _sector_isometry() -> np.ndarray:
    vac = occupation_state([0] * N_SPIN_ORBITALS)
    cols = []
    for p1, p2 in SECTOR_DETERMINANTS:
        cols.append(ladder_matrix(p1, True) @ ladder_matrix(p2, True) @ vac)
    U = np.array(cols).T
    U.setflags(write=False)
    return U


def sector_isometry() -> np.ndarray:
    """16x4 matrix whose columns are |G>, |E11>, |E12>, |E2> in the qubit register."""
    return _sector_isometry()


def sector_project(H16: np.ndarray, label: str = "bare", tol: float = SECTOR_TOL) -> QuditHamiltonian:
    if np.max(np.abs(H16 - H16.conj().T)) > 1e-12:
        raise ValueError("16x16 input is not Hermitian")
    U = sector_isometry()
    block = U.conj().T @ H16 @ U
    leak = (np.eye(H16.shape[0]) - U @ U.conj().T) @ H16 @ U
    leakage = float(np.max(np.abs(leak)))
    if leakage > tol:
        raise SectorViolationError(f"operator couples the 2-electron Sz=0 sector outward ({leakage:.3e})")
    block = 0.5 * (block + block.conj().T)
    if np.max(np.abs(block.imag)) < 1e-14:
        block = block.real
    return QuditHamiltonian(block, 0.0, label)


def _align(bra, ket):
    """Reorder ket so orbitals shared with bra sit in bra's positions; return (aligned ket, parity)."""
    ket = list(ket)
    aligned = [None] * len(bra)
    spare = [o for o in ket if o not in bra]
    for k, o in enumerate(bra):
        if o in ket:
            aligned[k] = o
    for k in range(len(aligned)):
        if aligned[k] is None:
            aligned[k] = spare.pop(0)
    perm = [ket.index(o) for o in aligned]
    parity = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if not seen[i]:
            j, length = i, 0
            while not seen[j]:
                seen[j] = True
                j = perm[j]
                length += 1
            if length % 2 == 0:
                parity = -parity
    return aligned, parity


def _slater_condon_element(bra, ket, h1, h2):
    # <mn|pq> (physicist) = h2[m, n, q, p]
    def anti(m, n, p, q):
        return h2[m, n, q, p] - h2[m, n, p, q]

    aligned, phase = _align(bra, ket)
    diff = [k for k in range(len(bra)) if bra[k] != aligned[k]]
    if not diff:
        val = sum(h1[m, m] for m in bra)
        val += 0.5 * sum(anti(m, n, m, n) for m in bra for n in bra)
    elif len(diff) == 1:
        k = diff[0]
        m, p = bra[k], aligned[k]
        val = h1[m, p] + sum(anti(m, n, p, n) for n in bra if n != m)
    elif len(diff) == 2:
        k, l = diff
        val = anti(bra[k], bra[l], aligned[k], aligned[l])
    else:
        val = 0.0
    return phase * val


def slater_condon_matrix(h1: np.ndarray, h2: np.ndarray | None = None) -> np.ndarray:
    n = h1.shape[0]
    if h2 is None:
        h2 = np.zeros((n, n, n, n))
    out = np.zeros((4, 4), dtype=np.result_type(h1, h2))
    for i, bra in enumerate(SECTOR_DETERMINANTS):
        for j, ket in enumerate(SECTOR_DETERMINANTS):
            out[i, j] = _slater_condon_element(bra, ket, h1, h2)
    return out


def slater_condon_hamiltonian(ints: SpinOrbitalIntegrals, include_nuclear: bool = False) -> QuditHamiltonian:
    H = QuditHamiltonian(slater_condon_matrix(ints.h1, ints.h2), 0.0, "bare")
    return H.with_offset(ints.Enn) if include_nuclear else H


def qubit_hamiltonian_matrix(ints: SpinOrbitalIntegrals, include_nuclear: bool = False) -> np.ndarray:
    return pauli_to_matrix(jw_transform(ints, include_nuclear))


def field_operator(ints: SpinOrbitalIntegrals, geometry: MoleculeGeometry, field) -> np.ndarray:
    """Sector block of E.(r1 + r2) - E.(sum_A Z_A R_A)."""
    field = np.asarray(field, dtype=float)
    if field.shape != (3,) or not np.all(np.isfinite(field)):
        raise ValueError("field must be a finite 3-vector")
    if ints.dipole is None:
        raise ValueError("spin-orbital integrals carry no dipole block")
    one_body = np.einsum("c,cpq->pq", field, ints.dipole)
    V = slater_condon_matrix(one_body)
    return V - float(field @ geometry.dipole_origin_term()) * np.eye(4)


def field_dress(H: QuditHamiltonian, ints: SpinOrbitalIntegrals, geometry: MoleculeGeometry,
                field) -> QuditHamiltonian:
    V = field_operator(ints, geometry, field)
    return QuditHamiltonian(H.matrix + V, H.offset, "field-dressed")


def fold(H: QuditHamiltonian, lam: float) -> QuditHamiltonian:
    shifted = H.matrix - lam * np.eye(4)
    M = shifted @ shifted
    return QuditHamiltonian(0.5 * (M + M.conj().T), 0.0, "folded")


def number_operator(n_qubits: int = N_SPIN_ORBITALS) -> PauliSum:
    out = PauliSum(n_qubits)
    for j in range(n_qubits):
        out = out + jw_monomial([(j, True), (j, False)], n_qubits)
    return out.simplify()


def sz_operator(n_qubits: int = N_SPIN_ORBITALS) -> PauliSum:
    out = PauliSum(n_qubits)
    for j in range(n_qubits):
        out = out + jw_monomial([(j, True), (j, False)], n_qubits, 0.5 if j % 2 == 0 else -0.5)
    return out.simplify()


def sector_terms(ints: SpinOrbitalIntegrals) -> list[tuple[tuple[int, ...], np.ndarray]]:
    """Sector blocks of every individual term h_pq a+a and 1/2 h_pqrs a+a+aa, keyed by indices.

    Terms whose sector block vanishes are dropped. The blocks sum to the bare
    electronic Hamiltonian.
    """
    U = sector_isometry()
    n = ints.h1.shape[0]
    out = []
    for p, q in itertools.product(range(n), repeat=2):
        c = ints.h1[p, q]
        if c != 0.0:
            M = c * U.conj().T @ ladder_matrix(p, True) @ ladder_matrix(q) @ U
            if np.max(np.abs(M)) > PRUNE_TOL:
                out.append(((p, q), M))
    for p, q, r, s in itertools.product(range(n), repeat=4):
        c = ints.h2[p, q, r, s]
        if c != 0.0:
            op = ladder_matrix(p, True) @ ladder_matrix(q, True) @ ladder_matrix(r) @ ladder_matrix(s)
            M = 0.5 * c * U.conj().T @ op @ U
            if np.max(np.abs(M)) > PRUNE_TOL:
                out.append(((p, q, r, s), M))
    return out


def matrix_to_json(M: np.ndarray) -> list[list[list[float]]]:
    M = np.asarray(M, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


@dataclass(frozen=True)
class MolecularProblem:
    """Everything downstream code needs about HeH+ at one bond length."""

    geometry: MoleculeGeometry
    ao: AOIntegralSet
    rhf: RhfSolution
    ints: SpinOrbitalIntegrals
    H: QuditHamiltonian  # electronic, no nuclear repulsion

    @property
    def R(self) -> float:
        return self.geometry.R

    @property
    def Enn(self) -> float:
        return self.ints.Enn


def heh_problem(R: float, scf_options: SCFOptions | None = None) -> MolecularProblem:
    geometry = heh_cation(R)
    ao = ao_integrals(geometry)
    rhf = rhf_scf(ao, 2, scf_options)
    ints = spin_orbital_integrals(mo_transform(ao, rhf.C), ao.Enn)
    return MolecularProblem(geometry, ao, rhf, ints, slater_condon_hamiltonian(ints))
