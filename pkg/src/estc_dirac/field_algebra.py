"""Dirac-matrix bookkeeping for the general electromagnetic lattice.

Lattice points, the fixed 16-element matrix basis, field amplitudes, the
matrix coefficients V(n, s) of the infinite linear system, their pairings
N(m, n) and the single-point projectors P(n).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

__all__ = [
    "LatticeIndex",
    "g4d",
    "shift_lists",
    "GammaBasis",
    "GAMMA",
    "DiracSet",
    "dset_to_matrix",
    "matrix_to_dset",
    "FieldAmplitudes",
    "FourVectorQ",
    "wave_index",
    "assemble_V",
    "v_matrices",
    "compute_N",
    "structural_params",
    "ProjectorData",
    "DegenerateLError",
    "build_projector",
    "projector_product",
]


class LatticeIndex(NamedTuple):
    n1: int
    n2: int
    n3: int
    n4: int

    def __add__(self, other):  # type: ignore[override]
        return LatticeIndex(*(int(a) + int(b) for a, b in zip(self, other)))

    def __sub__(self, other):
        return LatticeIndex(*(int(a) - int(b) for a, b in zip(self, other)))

    def __neg__(self):
        return LatticeIndex(-self.n1, -self.n2, -self.n3, -self.n4)

    @property
    def in_lattice(self) -> bool:
        return (self.n1 + self.n2 + self.n3 + self.n4) % 2 == 0

    @property
    def g4d(self) -> int:
        return g4d(self)


def g4d(s) -> int:
    """Truncation norm max(|s1|+|s2|+|s3|, |s4|)."""
    return max(abs(s[0]) + abs(s[1]) + abs(s[2]), abs(s[3]))


_S13 = [
    (0, 0, 0, 0),
    (0, 0, -1, -1), (0, -1, 0, -1), (-1, 0, 0, -1),
    (1, 0, 0, -1), (0, 1, 0, -1), (0, 0, 1, -1),
    (0, 0, -1, 1), (0, -1, 0, 1), (-1, 0, 0, 1),
    (1, 0, 0, 1), (0, 1, 0, 1), (0, 0, 1, 1),
]

_S69_TAIL = [
    (0, 0, 0, -2), (0, 0, 0, 2),
    (0, 0, -2, 0), (0, -1, -1, 0), (-1, 0, -1, 0),
    (1, 0, -1, 0), (0, 1, -1, 0), (0, -2, 0, 0),
    (-1, -1, 0, 0), (1, -1, 0, 0), (-2, 0, 0, 0),
    (2, 0, 0, 0), (-1, 1, 0, 0), (1, 1, 0, 0),
    (0, 2, 0, 0), (0, -1, 1, 0), (-1, 0, 1, 0),
    (1, 0, 1, 0), (0, 1, 1, 0), (0, 0, 2, 0),
    (0, 0, -2, -2), (0, -1, -1, -2), (-1, 0, -1, -2),
    (1, 0, -1, -2), (0, 1, -1, -2), (0, -2, 0, -2),
    (-1, -1, 0, -2), (1, -1, 0, -2), (-2, 0, 0, -2),
    (2, 0, 0, -2), (-1, 1, 0, -2), (1, 1, 0, -2),
    (0, 2, 0, -2), (0, -1, 1, -2), (-1, 0, 1, -2),
    (1, 0, 1, -2), (0, 1, 1, -2), (0, 0, 2, -2),
    (0, 0, -2, 2), (0, -1, -1, 2), (-1, 0, -1, 2),
    (1, 0, -1, 2), (0, 1, -1, 2), (0, -2, 0, 2),
    (-1, -1, 0, 2), (1, -1, 0, 2), (-2, 0, 0, 2),
    (2, 0, 0, 2), (-1, 1, 0, 2), (1, 1, 0, 2),
    (0, 2, 0, 2), (0, -1, 1, 2), (-1, 0, 1, 2),
    (1, 0, 1, 2), (0, 1, 1, 2), (0, 0, 2, 2),
]


def shift_lists() -> tuple[list[LatticeIndex], list[LatticeIndex]]:
    """Return the 13 first-generation shifts and the 69-element extended list.

    The short list is a prefix of the long one; entries 13..68 are the 56
    second-generation shifts.
    """
    s13 = [LatticeIndex(*s) for s in _S13]
    s69 = s13 + [LatticeIndex(*s) for s in _S69_TAIL]
    return s13, s69


# ---------------------------------------------------------------------------
# Matrix basis

_SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
_I2 = np.eye(2, dtype=complex)
_Z2 = np.zeros((2, 2), dtype=complex)


def _block(a, b, c, d):
    return np.block([[a, b], [c, d]])


@dataclass(frozen=True)
class GammaBasis:
    """Dirac-Pauli representation and the numbered 16-matrix basis.

    ``gamma[k]`` for k = 1..4 are the Hermitian Euclidean gammas with
    gamma_4 = beta and gamma_k = -i beta alpha_k.  ``alpha[k]`` for k = 1..3
    are the velocity matrices and ``alpha[4]`` is beta.  ``sigma[k]`` are the
    spin matrices Sigma_k.
    """

    gamma: dict = field(repr=False)
    alpha: dict = field(repr=False)
    sigma: dict = field(repr=False)
    basis: np.ndarray = field(repr=False)

    @classmethod
    def dirac_pauli(cls) -> "GammaBasis":
        beta = _block(_I2, _Z2, _Z2, -_I2)
        alpha = {k + 1: _block(_Z2, s, s, _Z2) for k, s in enumerate(_SIGMA)}
        alpha[4] = beta
        sigma = {k + 1: _block(s, _Z2, _Z2, s) for k, s in enumerate(_SIGMA)}
        g = {k: -1j * beta @ alpha[k] for k in (1, 2, 3)}
        g[4] = beta
        g1, g2, g3, g4 = g[1], g[2], g[3], g[4]
        mats = [
            np.eye(4, dtype=complex),
            -1j * g1 @ g2,
            -1j * g2 @ g3,
            -1j * g3 @ g1,
            g4,
            g1 @ g2 @ g3 @ g4,
            1j * g2 @ g3 @ g4,
            1j * g3 @ g1 @ g4,
            1j * g1 @ g2 @ g4,
            -1j * g3 @ g4,
            -1j * g1 @ g4,
            -1j * g2 @ g4,
            1j * g1 @ g2 @ g3,
            g3,
            g1,
            g2,
        ]
        return cls(gamma=g, alpha=alpha, sigma=sigma, basis=np.array(mats))


GAMMA = GammaBasis.dirac_pauli()


@dataclass(frozen=True)
class DiracSet:
    """Sixteen expansion coefficients of a 4x4 matrix in the fixed basis."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex).reshape(16)
        object.__setattr__(self, "coeffs", c)

    def to_matrix(self) -> np.ndarray:
        return dset_to_matrix(self)

    def is_zero(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coeffs) <= tol))


def dset_to_matrix(d: DiracSet) -> np.ndarray:
    return np.einsum("k,kij->ij", d.coeffs, GAMMA.basis)


def matrix_to_dset(m: np.ndarray) -> DiracSet:
    # every basis element is Hermitian and unitary, so tr(G_a G_b) = 4 delta_ab
    return DiracSet(np.einsum("kij,ij->k", GAMMA.basis.conj(), m) / 4.0)


# ---------------------------------------------------------------------------
# Field data


class FourVectorQ(NamedTuple):
    q1: float
    q2: float
    q3: float
    q4: float


@dataclass(frozen=True)
class FieldAmplitudes:
    """Complex amplitudes A_jk of the six plane waves (j = 1..6, k = 1..3)."""

    A: np.ndarray
    omega: float
    chiral: bool = False

    def __post_init__(self):
        A = np.array(self.A, dtype=complex).reshape(6, 3)
        for j in range(3):
            if A[j, j] != 0 or A[j + 3, j] != 0:
                raise ValueError("longitudinal amplitude A_jj / A_(j+3)j must vanish")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    @classmethod
    def chiral_field(cls, a_m: float, omega: float) -> "FieldAmplitudes":
        A = np.zeros((6, 3), dtype=complex)
        A[0, 1] = a_m
        A[0, 2] = 1j * a_m
        A[3, 1] = a_m
        A[3, 2] = -1j * a_m
        return cls(A, omega, chiral=True)

    @classmethod
    def random(cls, rng: np.random.Generator, omega: float, scale: float = 1.0):
        A = scale * (rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3)))
        for j in range(3):
            A[j, j] = 0
            A[j + 3, j] = 0
        return cls(A, omega)

    def amp(self, j: int, k: int) -> complex:
        """A_jk with 1-based indices as in the lattice formulas."""
        return complex(self.A[j - 1, k - 1])


def wave_index(j: int) -> LatticeIndex:
    """Lattice index of the wave vector K_j (j = 1..6)."""
    e = [0, 0, 0]
    if j <= 3:
        e[j - 1] = 1
    else:
        e[j - 4] = -1
    return LatticeIndex(e[0], e[1], e[2], 1)


def _shift_to_wave():
    # shift -> (wave number j, conjugated amplitude?)
    out = {}
    for j in range(1, 7):
        k = wave_index(j)
        out[-k] = (j, False)
        out[k] = (j, True)
    return out


_SHIFT_WAVE = _shift_to_wave()


def _check_lattice(n) -> LatticeIndex:
    n = LatticeIndex(*(int(x) for x in n))
    if not n.in_lattice:
        raise ValueError(f"{tuple(n)} is not an even-parity lattice point")
    return n


def assemble_V(n, Q: FourVectorQ, f: FieldAmplitudes) -> list[DiracSet]:
    """D-sets of V(n, s) for the 13 shifts, in the canonical shift order."""
    n = _check_lattice(n)
    om = f.omega
    w = [Q[k] + n[k] * om for k in range(4)]
    s13, _ = shift_lists()
    out = []
    for s in s13:
        d = np.zeros(16, dtype=complex)
        if s == (0, 0, 0, 0):
            d[0] = 1.0
            d[4] = -w[3]
            d[13] = 1j * w[2]
            d[14] = 1j * w[0]
            d[15] = 1j * w[1]
        else:
            j, conj = _SHIFT_WAVE[s]
            amp = f.A[j - 1].conj() if conj else f.A[j - 1]
            # -i gamma . A  ->  gamma_1, gamma_2, gamma_3 sit at 14, 15, 13
            d[14] = -1j * amp[0]
            d[15] = -1j * amp[1]
            d[13] = -1j * amp[2]
        out.append(DiracSet(d))
    return out


def v_matrices(n, Q: FourVectorQ, f: FieldAmplitudes) -> np.ndarray:
    """Array (13, 4, 4) of V(n, s) in matrix form."""
    return np.array([d.to_matrix() for d in assemble_V(n, Q, f)])


def compute_N(m, n, Q: FourVectorQ, f: FieldAmplitudes) -> np.ndarray:
    """Pairing N(m, n) = sum of V(m, s) V(n, s')^dagger over m + s = n + s'."""
    m = _check_lattice(m)
    n = _check_lattice(n)
    s13, _ = shift_lists()
    d = n - m
    out = np.zeros((4, 4), dtype=complex)
    if g4d(d) > 2:
        return out
    Vm = v_matrices(m, Q, f)
    Vn = v_matrices(n, Q, f)
    index = {s: i for i, s in enumerate(s13)}
    for i, s in enumerate(s13):
        sp = s - d
        k = index.get(sp)
        if k is not None:
            out += Vm[i] @ Vn[k].conj().T
    return out


# ---------------------------------------------------------------------------
# Closed-form structural parameters (transcribed validation data)


def _n1_table(A, w, om):
    """Twelve D-sets N1[m, s_h(i)], i = 1..12, as 16-vectors."""

    def a(j, k, c=False):
        v = A[j - 1, k - 1]
        return np.conj(v) if c else v

    w1, w2, w3, w4 = w
    om_m = -om + 2 * w4
    om_p = om + 2 * w4
    I = 1j
    rows = []

    def row(p0, p1, p2, p3, p9, p10, p11):
        d = np.zeros(16, dtype=complex)
        d[0], d[1], d[2], d[3] = p0, p1, p2, p3
        d[9], d[10], d[11] = p9, p10, p11
        rows.append(d)

    # first-generation shifts with s4 = -1
    row(-2 * (a(3, 1) * w1 + a(3, 2) * w2), 0, I * a(3, 2) * om, -I * a(3, 1) * om,
        0, -a(3, 1) * om_m, -a(3, 2) * om_m)
    row(-2 * (a(2, 1) * w1 + a(2, 3) * w3), I * a(2, 1) * om, -I * a(2, 3) * om, 0,
        -a(2, 3) * om_m, -a(2, 1) * om_m, 0)
    row(-2 * (a(1, 2) * w2 + a(1, 3) * w3), -I * a(1, 2) * om, 0, I * a(1, 3) * om,
        -a(1, 3) * om_m, 0, -a(1, 2) * om_m)
    row(-2 * (a(4, 2) * w2 + a(4, 3) * w3), I * a(4, 2) * om, 0, -I * a(4, 3) * om,
        -a(4, 3) * om_m, 0, -a(4, 2) * om_m)
    row(-2 * (a(5, 1) * w1 + a(5, 3) * w3), -I * a(5, 1) * om, I * a(5, 3) * om, 0,
        -a(5, 3) * om_m, -a(5, 1) * om_m, 0)
    row(-2 * (a(6, 1) * w1 + a(6, 2) * w2), 0, -I * a(6, 2) * om, I * a(6, 1) * om,
        0, -a(6, 1) * om_m, -a(6, 2) * om_m)
    # s4 = +1
    row(-2 * (a(6, 1, 1) * w1 + a(6, 2, 1) * w2), 0, I * a(6, 2, 1) * om, -I * a(6, 1, 1) * om,
        0, -a(6, 1, 1) * om_p, -a(6, 2, 1) * om_p)
    row(-2 * (a(5, 1, 1) * w1 + a(5, 3, 1) * w3), I * a(5, 1, 1) * om, -I * a(5, 3, 1) * om, 0,
        -a(5, 3, 1) * om_p, -a(5, 1, 1) * om_p, 0)
    row(-2 * (a(4, 2, 1) * w2 + a(4, 3, 1) * w3), -I * a(4, 2, 1) * om, 0, I * a(4, 3, 1) * om,
        -a(4, 3, 1) * om_p, 0, -a(4, 2, 1) * om_p)
    row(-2 * (a(1, 2, 1) * w2 + a(1, 3, 1) * w3), I * a(1, 2, 1) * om, 0, -I * a(1, 3, 1) * om,
        -a(1, 3, 1) * om_p, 0, -a(1, 2, 1) * om_p)
    row(-2 * (a(2, 1, 1) * w1 + a(2, 3, 1) * w3), -I * a(2, 1, 1) * om, I * a(2, 3, 1) * om, 0,
        -a(2, 3, 1) * om_p, -a(2, 1, 1) * om_p, 0)
    row(-2 * (a(3, 1, 1) * w1 + a(3, 2, 1) * w2), 0, -I * a(3, 2, 1) * om, I * a(3, 1, 1) * om,
        0, -a(3, 1, 1) * om_p, -a(3, 2, 1) * om_p)
    return rows


# Second-generation scalars, in list order 13..68.  ("p", [...]) is twice a
# sum of pairwise products; ("q", a) is (A_a1 + i A_a2)(A_a1 - i A_a2) for the
# two named components.  A term is (j, k, conj, j', k', conj').
_N2_SPEC = [
    ("p", [(1, 2, 0, 4, 2, 0), (1, 3, 0, 4, 3, 0), (2, 1, 0, 5, 1, 0),
           (2, 3, 0, 5, 3, 0), (3, 1, 0, 6, 1, 0), (3, 2, 0, 6, 2, 0)]),
    ("p", [(1, 2, 1, 4, 2, 1), (1, 3, 1, 4, 3, 1), (2, 1, 1, 5, 1, 1),
           (2, 3, 1, 5, 3, 1), (3, 1, 1, 6, 1, 1), (3, 2, 1, 6, 2, 1)]),
    ("p", [(3, 1, 0, 6, 1, 1), (3, 2, 0, 6, 2, 1)]),
    ("p", [(3, 1, 0, 5, 1, 1), (2, 1, 0, 6, 1, 1)]),
    ("p", [(3, 2, 0, 4, 2, 1), (1, 2, 0, 6, 2, 1)]),
    ("p", [(1, 2, 1, 3, 2, 0), (4, 2, 0, 6, 2, 1)]),
    ("p", [(2, 1, 1, 3, 1, 0), (5, 1, 0, 6, 1, 1)]),
    ("p", [(2, 1, 0, 5, 1, 1), (2, 3, 0, 5, 3, 1)]),
    ("p", [(2, 3, 0, 4, 3, 1), (1, 3, 0, 5, 3, 1)]),
    ("p", [(1, 3, 1, 2, 3, 0), (4, 3, 0, 5, 3, 1)]),
    ("p", [(1, 2, 0, 4, 2, 1), (1, 3, 0, 4, 3, 1)]),
    ("p", [(1, 2, 1, 4, 2, 0), (1, 3, 1, 4, 3, 0)]),
    ("p", [(1, 3, 0, 2, 3, 1), (4, 3, 1, 5, 3, 0)]),
    ("p", [(2, 3, 1, 4, 3, 0), (1, 3, 1, 5, 3, 0)]),
    ("p", [(2, 1, 1, 5, 1, 0), (2, 3, 1, 5, 3, 0)]),
    ("p", [(2, 1, 0, 3, 1, 1), (5, 1, 1, 6, 1, 0)]),
    ("p", [(1, 2, 0, 3, 2, 1), (4, 2, 1, 6, 2, 0)]),
    ("p", [(3, 2, 1, 4, 2, 0), (1, 2, 1, 6, 2, 0)]),
    ("p", [(3, 1, 1, 5, 1, 0), (2, 1, 1, 6, 1, 0)]),
    ("p", [(3, 1, 1, 6, 1, 0), (3, 2, 1, 6, 2, 0)]),
    # s4 = -2
    ("q", (3, 1, 2, 0)), ("p", [(2, 1, 0, 3, 1, 0)]), ("p", [(1, 2, 0, 3, 2, 0)]),
    ("p", [(3, 2, 0, 4, 2, 0)]), ("p", [(3, 1, 0, 5, 1, 0)]), ("q", (2, 1, 3, 0)),
    ("p", [(1, 3, 0, 2, 3, 0)]), ("p", [(2, 3, 0, 4, 3, 0)]), ("q", (1, 2, 3, 0)),
    ("q", (4, 2, 3, 0)), ("p", [(1, 3, 0, 5, 3, 0)]), ("p", [(4, 3, 0, 5, 3, 0)]),
    ("q", (5, 1, 3, 0)), ("p", [(2, 1, 0, 6, 1, 0)]), ("p", [(1, 2, 0, 6, 2, 0)]),
    ("p", [(4, 2, 0, 6, 2, 0)]), ("p", [(5, 1, 0, 6, 1, 0)]), ("q", (6, 1, 2, 0)),
    # s4 = +2
    ("q", (6, 1, 2, 1)), ("p", [(5, 1, 1, 6, 1, 1)]), ("p", [(4, 2, 1, 6, 2, 1)]),
    ("p", [(1, 2, 1, 6, 2, 1)]), ("p", [(2, 1, 1, 6, 1, 1)]), ("q", (5, 1, 3, 1)),
    ("p", [(4, 3, 1, 5, 3, 1)]), ("p", [(1, 3, 1, 5, 3, 1)]), ("q", (4, 2, 3, 1)),
    ("q", (1, 2, 3, 1)), ("p", [(2, 3, 1, 4, 3, 1)]), ("p", [(1, 3, 1, 2, 3, 1)]),
    ("q", (2, 1, 3, 1)), ("p", [(3, 1, 1, 5, 1, 1)]), ("p", [(3, 2, 1, 4, 2, 1)]),
    ("p", [(1, 2, 1, 3, 2, 1)]), ("p", [(2, 1, 1, 3, 1, 1)]), ("q", (3, 1, 2, 1)),
]


def _n2_table(A):
    def a(j, k, c):
        v = A[j - 1, k - 1]
        return np.conj(v) if c else v

    out = []
    for kind, spec in _N2_SPEC:
        if kind == "p":
            out.append(2 * sum(a(j, k, c) * a(jj, kk, cc) for j, k, c, jj, kk, cc in spec))
        else:
            j, k1, k2, c = spec
            x, y = a(j, k1, c), a(j, k2, c)
            out.append((x + 1j * y) * (x - 1j * y))
    return np.array(out, dtype=complex)


def structural_params(f: FieldAmplitudes, m, Q: FourVectorQ) -> tuple[list[DiracSet], np.ndarray]:
    """Closed-form N1[m, s] (12 D-sets) and N2[s] (56 scalars)."""
    m = _check_lattice(m)
    w = [Q[k] + m[k] * f.omega for k in range(4)]
    n1 = [DiracSet(r) for r in _n1_table(f.A, w, f.omega)]
    return n1, _n2_table(f.A)


# ---------------------------------------------------------------------------
# Projectors


class DegenerateLError(ArithmeticError):
    """L(n) = N(n, n) is numerically singular."""

    def __init__(self, center, cond):
        super().__init__(f"L{tuple(center)} is singular (condition number {cond:.3e})")
        self.center = center
        self.cond = cond


COND_LIMIT = 1e12


@dataclass(frozen=True)
class ProjectorData:
    center: LatticeIndex
    stencil: tuple
    F: np.ndarray = field(repr=False)
    L: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)
    cond: float = 1.0

    @property
    def index(self) -> list[tuple[LatticeIndex, int]]:
        """Row/column labels (lattice point, spinor component) of ``matrix``."""
        return [(p, k) for p in self.stencil for k in range(4)]

    @property
    def matrix(self) -> np.ndarray:
        return self.F.conj().T @ self.a @ self.F

    def apply(self, c: dict) -> dict:
        """Apply P(n) to a multispinor given as {LatticeIndex: bispinor}."""
        vec = np.concatenate([np.asarray(c.get(p, np.zeros(4)), dtype=complex) for p in self.stencil])
        out = self.matrix @ vec
        return {p: out[4 * i:4 * i + 4] for i, p in enumerate(self.stencil)}


def build_projector(n, Q: FourVectorQ, f: FieldAmplitudes) -> ProjectorData:
    n = _check_lattice(n)
    s13, _ = shift_lists()
    V = v_matrices(n, Q, f)
    F = np.concatenate(list(V), axis=1)  # F[beta, 4 i + k] = V(n, s_i)[beta, k]
    L = F @ F.conj().T
    cond = float(np.linalg.cond(L))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise DegenerateLError(n, cond)
    a = np.linalg.inv(L)
    a = 0.5 * (a + a.conj().T)
    stencil = tuple(n + s for s in s13)
    return ProjectorData(n, stencil, F, L, a, cond)


def projector_product(pm: ProjectorData, pn: ProjectorData):
    """Dense P(m) P(n) on the union of both stencils.

    Returns (labels, matrix) where labels are (lattice point, component) pairs.
    """
    pts = sorted(set(pm.stencil) | set(pn.stencil))
    pos = {p: i for i, p in enumerate(pts)}

    def embed(P: ProjectorData):
        E = np.zeros((4, 4 * len(pts)), dtype=complex)
        for i, p in enumerate(P.stencil):
            E[:, 4 * pos[p]:4 * pos[p] + 4] = P.F[:, 4 * i:4 * i + 4]
        return E

    Fm, Fn = embed(pm), embed(pn)
    Pm = Fm.conj().T @ pm.a @ Fm
    Pn = Fn.conj().T @ pn.a @ Fn
    labels = [(p, k) for p in pts for k in range(4)]
    return labels, Pm @ Pn
