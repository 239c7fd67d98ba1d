"""Basic bispinor states, their lattice amplitudes, scalar products and the
Dirac-operator residual."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chiral_core import DispersionBranch, evaluate_z
from .field_algebra import GAMMA, FieldAmplitudes, FourVectorQ, LatticeIndex, wave_index

__all__ = [
    "U_BASIS",
    "PlaneState",
    "Multispinor",
    "SectorMismatchError",
    "basic_states",
    "assemble_psi",
    "to_multispinor",
    "inner",
    "apply_dirac",
    "apply_hamiltonian",
    "residual_R",
]

_R2 = 1.0 / np.sqrt(2.0)
U_BASIS = (
    np.array([1, 1, 0, 0]) * _R2,
    np.array([1, -1, 0, 0]) * _R2,
    np.array([0, 0, 1, 1]) * _R2,
    np.array([0, 0, 1, -1]) * _R2,
)

# (j, sign) -> (even spinors with signs, odd spinors, n1 of odd harmonics)
_LAYOUT = {
    (1, 1): ((1, 3), 1.0, (0, 2), 1),
    (1, -1): ((0, 2), -1.0, (1, 3), -1),
    (2, 1): ((0, 2), 1.0, (1, 3), -1),
    (2, -1): ((1, 3), -1.0, (0, 2), 1),
}


class SectorMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class PlaneState:
    """Psi_j(q_sign): branch j travelling in direction ``sign`` with |q1|."""

    branch: DispersionBranch
    sign: int

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def j(self) -> int:
        return self.branch.j

    @property
    def q1(self) -> float:
        return abs(self.branch.q1)

    @property
    def omega(self) -> float:
        return self.branch.params.omega

    @property
    def K(self) -> FourVectorQ:
        return FourVectorQ(self.sign * self.q1, 0.0, 0.0, self.branch.q4)

    @property
    def odd_n1(self) -> int:
        return _LAYOUT[(self.j, self.sign)][3]


def basic_states(b1: DispersionBranch, b2: DispersionBranch) -> dict:
    """The four states keyed by (j, sign)."""
    return {(b.j, s): PlaneState(b, s) for b in (b1, b2) for s in (1, -1)}


@dataclass(frozen=True)
class Multispinor:
    K: FourVectorQ
    omega: float
    amps: dict = field(repr=False)

    def norm2(self) -> float:
        return float(sum(np.vdot(c, c).real for c in self.amps.values()))

    def norm(self) -> float:
        return float(np.sqrt(self.norm2()))

    def support(self) -> list:
        return sorted(self.amps)

    def evaluate(self, X1, X4, periodic: bool = False, weights=None) -> np.ndarray:
        """Bispinor field on (X1, X4) (broadcast), shape (..., 4).

        ``weights`` maps a lattice point to a scalar multiplying c(n).
        ``periodic`` drops the common plane-wave factor.
        """
        X1 = np.asarray(X1, float)
        X4 = np.asarray(X4, float)
        p1, p4 = 2 * np.pi * X1, 2 * np.pi * X4
        out = np.zeros(np.broadcast(p1, p4).shape + (4,), dtype=complex)
        for n, c in self.amps.items():
            w = 1.0 if weights is None else weights(n)
            ph = np.exp(1j * (n.n1 * p1 - n.n4 * p4))
            out += w * ph[..., None] * c
        if not periodic:
            out *= np.exp(1j * (self.K.q1 * p1 - self.K.q4 * p4) / self.omega)[..., None]
        return out


def to_multispinor(state: PlaneState) -> Multispinor:
    Zt = state.branch.table
    ls = state.branch.Z.harmonics
    ev, sgn, od, n1 = _LAYOUT[(state.j, state.sign)]
    amps = {}
    for i, l in enumerate(ls):
        if l % 2 == 0:
            c = sgn * (U_BASIS[ev[0]] * Zt[i, 0] + U_BASIS[ev[1]] * Zt[i, 1])
            n = LatticeIndex(0, 0, 0, -int(l))
        else:
            c = 1j * (U_BASIS[od[0]] * Zt[i, 2] + U_BASIS[od[1]] * Zt[i, 3])
            n = LatticeIndex(n1, 0, 0, -int(l))
        amps[n] = c.astype(complex)
    return Multispinor(state.K, state.omega, amps)


def assemble_psi(state: PlaneState, X1, X4) -> np.ndarray:
    """Psi_{j sign} exp(i Phi) from the structural functions, shape (..., 4)."""
    X1 = np.asarray(X1, float)
    X4 = np.asarray(X4, float)
    p1, p4 = 2 * np.pi * X1, 2 * np.pi * X4
    z = evaluate_z(state.branch.Z, p4)
    j = state.j
    ev, sgn, od, n1 = _LAYOUT[(j, state.sign)]
    if j == 1:
        ze, zo = (z[(1, 2)], z[(1, 4)]), (z[(1, 1)], z[(1, 3)])
    else:
        ze, zo = (z[(2, 1)], z[(2, 3)]), (z[(2, 2)], z[(2, 4)])
    e1 = np.exp(1j * n1 * p1)
    shape = np.broadcast(p1, p4).shape
    psi = np.zeros(shape + (4,), dtype=complex)
    psi += sgn * (U_BASIS[ev[0]] * np.broadcast_to(ze[0], shape)[..., None]
                  + U_BASIS[ev[1]] * np.broadcast_to(ze[1], shape)[..., None])
    psi += (1j * e1)[..., None] * (U_BASIS[od[0]] * np.broadcast_to(zo[0], shape)[..., None]
                                    + U_BASIS[od[1]] * np.broadcast_to(zo[1], shape)[..., None])
    phase = np.exp(1j * (state.sign * state.q1 * p1 - state.branch.q4 * p4) / state.omega)
    return psi * phase[..., None]


def _as_multi(x) -> Multispinor:
    return to_multispinor(x) if isinstance(x, PlaneState) else x


def inner(a, b, cross_sector: str | None = None, tol: float = 1e-12) -> complex:
    """Scalar product sum_n a(n)^dagger b(n).

    States with different Floquet vectors K need ``cross_sector``:
    ``"periodic"`` pairs the periodic parts only (all plane-wave factors
    dropped); ``"cell"`` averages over the joint X1 period, so the result is
    zero unless (K1_b - K1_a)/Omega is an integer d, in which case a(n) pairs
    with b(n - d e1), and the slow X4 phase is held constant.
    """
    A, B = _as_multi(a), _as_multi(b)
    same = np.allclose(A.K, B.K, rtol=0, atol=tol)
    shift = LatticeIndex(0, 0, 0, 0)
    if not same:
        if cross_sector is None:
            raise SectorMismatchError("states lie in different Floquet sectors")
        if cross_sector == "cell":
            d = (B.K.q1 - A.K.q1) / A.omega
            if abs(d - round(d)) > 1e-9:
                return 0j
            shift = LatticeIndex(int(round(d)), 0, 0, 0)
        elif cross_sector != "periodic":
            raise ValueError(f"unknown cross-sector mode {cross_sector!r}")
    total = 0j
    for n, c in A.amps.items():
        other = B.amps.get(n - shift)
        if other is not None:
            total += np.vdot(c, other)
    return complex(total)


def _alpha_dot(v) -> np.ndarray:
    return sum(GAMMA.alpha[k + 1] * v[k] for k in range(3))


def _field_terms(f: FieldAmplitudes):
    """(lattice shift, matrix) pairs: the field moves c(n) to n + shift."""
    out = []
    for j in range(1, 7):
        k = wave_index(j)
        a = f.A[j - 1]
        if np.any(a != 0):
            out.append((k, -_alpha_dot(a)))
            out.append((-k, -_alpha_dot(a.conj())))
    return out


def apply_hamiltonian(m: Multispinor, f: FieldAmplitudes) -> dict:
    """(H c)(n) with H = alpha.(p - A') + beta in lattice space."""
    K, om = m.K, m.omega
    beta = GAMMA.alpha[4]
    out: dict = {}
    terms = _field_terms(f)
    for n, c in m.amps.items():
        w = np.array([K[k] + n[k] * om for k in range(3)])
        out[n] = out.get(n, 0) + (_alpha_dot(w) + beta) @ c
        for k, M in terms:
            p = n + k
            out[p] = out.get(p, 0) + M @ c
    return out


def apply_dirac(m: Multispinor, f: FieldAmplitudes) -> dict:
    """Fourier amplitudes of D Psi, D = H - i Omega d/dphi4."""
    out = apply_hamiltonian(m, f)
    for n, c in m.amps.items():
        out[n] = out[n] - (m.K.q4 + n.n4 * m.omega) * c
    return out


def residual_R(m, f: FieldAmplitudes) -> float:
    """Relative Dirac residual ||D Psi|| / ||Psi|| in the Fourier norm."""
    m = _as_multi(m)
    nrm = m.norm()
    if nrm == 0:
        raise ValueError("zero multispinor")
    out = apply_dirac(m, f)
    return float(np.sqrt(sum(np.vdot(c, c).real for c in out.values())) / nrm)
