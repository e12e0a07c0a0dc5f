"""
Closed-form integrals over contracted s-type Gaussians (STO-3G, H and He).

Primitive formulas follow from the Gaussian product theorem. For exponents
a, b on centers A, B with p = a + b, mu = a*b/p and P = (a*A + b*B)/p:

    S   = (pi/p)^(3/2) exp(-mu |A-B|^2)
    T   = mu (3 - 2 mu |A-B|^2) S
    V_C = -Z_C (2 pi/p) exp(-mu |A-B|^2) F0(p |P-C|^2)
    D   = P S                                   (electron position)

and for two pairs (ab| and |cd) with exponents p, q:

    (ab|cd) = 2 pi^(5/2) / (p q sqrt(p+q))
              exp(-mu_ab |A-B|^2 - mu_cd |C-D|^2) F0(p q/(p+q) |P-Q|^2)

All lengths in bohr, energies in hartree.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

ELEMENTS = {1: "H", 2: "He"}
SYMBOL_TO_Z = {v: k for k, v in ELEMENTS.items()}

_TAYLOR_CUTOFF = 1e-6


class UnsupportedElementError(ValueError):
    pass


class CoincidentNucleiError(ValueError):
    pass


@dataclass(frozen=True)
class MoleculeGeometry:
    """Point nuclei as (charge, position in bohr) pairs."""

    nuclei: tuple[tuple[int, tuple[float, float, float]], ...]

    def __post_init__(self):
        if not self.nuclei:
            raise ValueError("geometry needs at least one nucleus")
        for z, pos in self.nuclei:
            if int(z) != z or z < 1:
                raise ValueError(f"nuclear charge must be a positive integer, got {z}")
            if len(pos) != 3:
                raise ValueError("positions are 3-vectors")

    @property
    def charges(self) -> np.ndarray:
        return np.array([z for z, _ in self.nuclei], dtype=int)

    @property
    def positions(self) -> np.ndarray:
        return np.array([pos for _, pos in self.nuclei], dtype=float)

    @property
    def R(self) -> float:
        """Bond length of a diatomic."""
        if len(self.nuclei) != 2:
            raise ValueError("bond length is only defined for two nuclei")
        a, b = self.positions
        return float(np.linalg.norm(a - b))

    def dipole_origin_term(self) -> np.ndarray:
        """Sum_A Z_A R_A, the nuclear part of the dipole operator."""
        return self.charges @ self.positions


def heh_cation(R: float) -> MoleculeGeometry:
    """HeH+ with He at the origin and H at +R on the z axis."""
    if not R > 0:
        raise ValueError(f"bond length must be positive, got {R}")
    return MoleculeGeometry(((2, (0.0, 0.0, 0.0)), (1, (0.0, 0.0, float(R)))))


@dataclass(frozen=True)
class GaussianShell:
    center: np.ndarray
    exponents: np.ndarray
    coefficients: np.ndarray
    # per-primitive norm factors times contraction weights, rescaled so <chi|chi> = 1
    norms: np.ndarray = field(repr=False)

    @classmethod
    def contracted(cls, center, exponents, coefficients) -> "GaussianShell":
        exponents = np.asarray(exponents, dtype=float)
        coefficients = np.asarray(coefficients, dtype=float)
        if exponents.shape != coefficients.shape or exponents.size < 1:
            raise ValueError("exponents and coefficients must have equal length >= 1")
        if np.any(exponents <= 0):
            raise ValueError("exponents must be positive")
        prim = (2.0 * exponents / np.pi) ** 0.75
        w = coefficients * prim
        p = exponents[:, None] + exponents[None, :]
        self_overlap = w @ ((np.pi / p) ** 1.5) @ w
        norms = prim / math.sqrt(self_overlap)
        return cls(np.asarray(center, dtype=float), exponents, coefficients, norms)

    @property
    def weights(self) -> np.ndarray:
        """Coefficient multiplying each unnormalized primitive exp(-a r^2)."""
        return self.coefficients * self.norms

    def __call__(self, points: np.ndarray) -> np.ndarray:
        r2 = np.sum((np.asarray(points, dtype=float) - self.center) ** 2, axis=-1)
        return np.sum(self.weights * np.exp(-np.multiply.outer(r2, self.exponents)), axis=-1)


@dataclass(frozen=True)
class AOIntegralSet:
    S: np.ndarray
    Tkin: np.ndarray
    Vne: np.ndarray
    ERI: np.ndarray
    D: np.ndarray  # (3, n, n)
    Enn: float

    @property
    def hcore(self) -> np.ndarray:
        return self.Tkin + self.Vne

    @property
    def nbasis(self) -> int:
        return self.S.shape[0]


def boys_f0(x: float) -> float:
    """F0(x) = integral_0^1 exp(-x t^2) dt."""
    x = float(x)
    if not math.isfinite(x) or x < 0:
        raise ValueError(f"Boys F0 needs a finite non-negative argument, got {x}")
    if x < _TAYLOR_CUTOFF:
        # 1 - x/3 + x^2/10 - x^3/42
        return 1.0 - x / 3.0 + x * x / 10.0 - x ** 3 / 42.0
    s = math.sqrt(x)
    return 0.5 * math.sqrt(math.pi) / s * math.erf(s)


@lru_cache(maxsize=None)
def _basis_table() -> dict[str, tuple[tuple[float, float], ...]]:
    text = resources.files("uccsim").joinpath("data/sto-3g.dat").read_text()
    return parse_basis_file(text)


def parse_basis_file(text: str) -> dict[str, tuple[tuple[float, float], ...]]:
    """Parse records of an element symbol followed by three exponent/coefficient lines."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    table = {}
    i = 0
    while i < len(lines):
        symbol = lines[i]
        rows = lines[i + 1:i + 4]
        if len(rows) != 3:
            raise ValueError(f"truncated basis record for {symbol}")
        table[symbol] = tuple(tuple(float(v) for v in row.split()) for row in rows)
        i += 4
    return table


def build_sto3g_basis(geometry: MoleculeGeometry) -> list[GaussianShell]:
    table = _basis_table()
    shells = []
    for z, pos in geometry.nuclei:
        symbol = ELEMENTS.get(z)
        if symbol is None or symbol not in table:
            raise UnsupportedElementError(f"no STO-3G data for Z={z}")
        exps, coefs = zip(*table[symbol])
        shells.append(GaussianShell.contracted(pos, exps, coefs))
    return shells


def _pair(a: GaussianShell, b: GaussianShell):
    """Primitive-pair quantities: exponent sums, prefactors exp(-mu AB^2) * weights, centers."""
    p = a.exponents[:, None] + b.exponents[None, :]
    mu = a.exponents[:, None] * b.exponents[None, :] / p
    ab2 = float(np.sum((a.center - b.center) ** 2))
    k = np.exp(-mu * ab2) * np.outer(a.weights, b.weights)
    P = (a.exponents[:, None, None] * a.center + b.exponents[None, :, None] * b.center) / p[..., None]
    return p, mu, ab2, k, P


def one_electron_integrals(basis: list[GaussianShell], geometry: MoleculeGeometry):
    """Return (S, Tkin, Vne, D) over the contracted basis."""
    n = len(basis)
    S = np.zeros((n, n))
    T = np.zeros((n, n))
    V = np.zeros((n, n))
    D = np.zeros((3, n, n))
    charges = geometry.charges
    centers = geometry.positions
    for i in range(n):
        for j in range(i + 1):
            p, mu, ab2, k, P = _pair(basis[i], basis[j])
            s_prim = k * (np.pi / p) ** 1.5
            S[i, j] = s_prim.sum()
            T[i, j] = np.sum(mu * (3.0 - 2.0 * mu * ab2) * s_prim)
            D[:, i, j] = np.einsum("ab,abc->c", s_prim, P)
            v = 0.0
            for z, c in zip(charges, centers):
                pc2 = np.sum((P - c) ** 2, axis=-1)
                f0 = np.vectorize(boys_f0)(p * pc2)
                v -= z * np.sum(k * (2.0 * np.pi / p) * f0)
            V[i, j] = v
            S[j, i], T[j, i], V[j, i] = S[i, j], T[i, j], V[i, j]
            D[:, j, i] = D[:, i, j]
    return S, T, V, D


def _eri_contracted(a, b, c, d) -> float:
    p, _, _, kab, P = _pair(a, b)
    q, _, _, kcd, Q = _pair(c, d)
    p = p.reshape(-1, 1)
    q = q.reshape(1, -1)
    pq2 = np.sum((P.reshape(-1, 1, 3) - Q.reshape(1, -1, 3)) ** 2, axis=-1)
    f0 = np.vectorize(boys_f0)(p * q / (p + q) * pq2)
    pref = 2.0 * np.pi ** 2.5 / (p * q * np.sqrt(p + q))
    return float(np.sum(kab.reshape(-1, 1) * kcd.reshape(1, -1) * pref * f0))


def two_electron_integrals(basis: list[GaussianShell]) -> np.ndarray:
    """(pq|rs) in chemist order; one evaluation per permutational orbit."""
    n = len(basis)
    eri = np.zeros((n, n, n, n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1)]
    for (i, j), (k, l) in itertools.combinations_with_replacement(pairs, 2):
        val = _eri_contracted(basis[i], basis[j], basis[k], basis[l])
        for (a, b), (c, d) in (((i, j), (k, l)), ((k, l), (i, j))):
            for x, y in ((a, b), (b, a)):
                for u, w in ((c, d), (d, c)):
                    eri[x, y, u, w] = val
    return eri


def nuclear_repulsion(geometry: MoleculeGeometry) -> float:
    charges = geometry.charges
    pos = geometry.positions
    e = 0.0
    for a, b in itertools.combinations(range(len(charges)), 2):
        r = float(np.linalg.norm(pos[a] - pos[b]))
        if r == 0.0:
            raise CoincidentNucleiError(f"nuclei {a} and {b} coincide")
        e += charges[a] * charges[b] / r
    return e


def ao_integrals(geometry: MoleculeGeometry, basis: list[GaussianShell] | None = None) -> AOIntegralSet:
    if basis is None:
        basis = build_sto3g_basis(geometry)
    S, T, V, D = one_electron_integrals(basis, geometry)
    return AOIntegralSet(S, T, V, two_electron_integrals(basis), D, nuclear_repulsion(geometry))
