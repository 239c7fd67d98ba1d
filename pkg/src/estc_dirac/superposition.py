"""Two-state superpositions of the basic states.

Unidirectional: Psi_+- = Psi_1(q+-) e^{i delta} cos(alpha) + Psi_2(q+-) sin(alpha)
(same quasimomentum, different spin; precesses at nu_pr = dxi).

Bidirectional: Psi_j = Psi_j(q+) e^{i delta} cos(alpha) + Psi_j(q-) sin(alpha)
(same branch, opposite quasimomenta; q_m = 2|q1|/Omega).

Vector fields v = Psi^dag alpha_k Psi and s = Psi^dag Sigma_k Psi are
available in closed form (structural functions and rotating frame vectors)
and by direct pointwise evaluation of the bispinor; the latter is the
oracle for the former.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .chiral_core import DEFAULT_PARAMS, ChiralParams, DispersionBranch, evaluate_z, solve_dispersion
from .field_algebra import GAMMA, FieldAmplitudes
from .observables import sigma10
from .wavefunction import Multispinor, PlaneState, apply_hamiltonian, assemble_psi, to_multispinor

__all__ = [
    "MODES",
    "SuperpositionSpec",
    "PrecessionReport",
    "VectorFieldSample",
    "UniMeans",
    "BiMeans",
    "e_A",
    "e_B",
    "precession_params",
    "uni_fields",
    "uni_means",
    "bi_periods",
    "bi_fields",
    "bi_means",
    "direct_fields",
    "default_grid",
    "hermitian_form",
]

MODES = ("uni+", "uni-", "bi1", "bi2")
_MODE_ALIASES = {"uni−": "uni-"}


def e_A(t) -> np.ndarray:
    """e2 cos t - e3 sin t, shape (..., 3)."""
    t = np.asarray(t, float)
    return np.stack([np.zeros_like(t), np.cos(t), -np.sin(t)], axis=-1)


def e_B(t) -> np.ndarray:
    """e1 x e_A(t) = e2 sin t + e3 cos t."""
    t = np.asarray(t, float)
    return np.stack([np.zeros_like(t), np.sin(t), np.cos(t)], axis=-1)


_E1 = np.array([1.0, 0.0, 0.0])


@dataclass(frozen=True)
class SuperpositionSpec:
    mode: str
    alpha: float
    delta: float
    q1: float
    params: ChiralParams = DEFAULT_PARAMS

    def __post_init__(self):
        mode = _MODE_ALIASES.get(self.mode, self.mode)
        if mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        object.__setattr__(self, "mode", mode)
        if not 0.0 <= self.alpha <= np.pi / 2:
            raise ValueError("alpha must lie in [0, pi/2]")
        if not 0.0 <= self.delta <= 2 * np.pi:
            raise ValueError("delta must lie in [0, 2 pi]")

    @classmethod
    def from_qm(cls, mode: str, q_m: float, alpha: float, delta: float, params: ChiralParams = DEFAULT_PARAMS):
        if q_m < 0:
            raise ValueError("q_m must be nonnegative")
        return cls(mode, alpha, delta, 0.5 * q_m * params.omega, params)

    @property
    def q_m(self) -> float:
        return 2.0 * abs(self.q1) / self.params.omega

    @property
    def unidirectional(self) -> bool:
        return self.mode.startswith("uni")

    @property
    def sign(self) -> int:
        """Direction of a unidirectional state."""
        return 1 if self.mode == "uni+" else -1

    @property
    def j(self) -> int:
        return int(self.mode[-1]) if not self.unidirectional else 0

    def branches(self):
        return solve_dispersion(abs(self.q1), self.params)

    def components(self, branches=None) -> tuple:
        """((weight, PlaneState), (weight, PlaneState)) of the superposition."""
        b1, b2 = branches if branches is not None else self.branches()
        ca = np.exp(1j * self.delta) * np.cos(self.alpha)
        sb = np.sin(self.alpha)
        if self.unidirectional:
            s = self.sign
            return (ca, PlaneState(b1, s)), (sb, PlaneState(b2, s))
        b = b1 if self.j == 1 else b2
        return (ca, PlaneState(b, 1)), (sb, PlaneState(b, -1))


@dataclass(frozen=True)
class VectorFieldSample:
    """v (units of c) and s (units of hbar/2) on a grid of (X1, X4)."""

    X1: np.ndarray
    X4: np.ndarray
    v: np.ndarray
    s: np.ndarray
    norm: np.ndarray | None = None

    def rows(self):
        """Long-format records (X1, X4, v1, v2, v3, s1, s2, s3)."""
        X1, X4 = np.broadcast_arrays(self.X1, self.X4)
        v = self.v.reshape(-1, 3)
        s = self.s.reshape(-1, 3)
        for i, (a, b) in enumerate(zip(X1.ravel(), X4.ravel())):
            yield (float(a), float(b), *map(float, v[i]), *map(float, s[i]))


def _grid(grid) -> tuple:
    X1, X4 = grid
    return np.broadcast_arrays(np.asarray(X1, float), np.asarray(X4, float))


# ---------------------------------------------------------------------------
# direct oracle


def direct_fields(spec: SuperpositionSpec, grid, branches=None) -> VectorFieldSample:
    """v and s from the pointwise bispinor Psi(X1, X4)."""
    X1, X4 = _grid(grid)
    psi = sum(w * assemble_psi(st, X1, X4) for w, st in spec.components(branches))
    v = np.stack([np.einsum("...i,ij,...j->...", psi.conj(), GAMMA.alpha[k], psi).real for k in (1, 2, 3)], -1)
    s = np.stack([np.einsum("...i,ij,...j->...", psi.conj(), GAMMA.sigma[k], psi).real for k in (1, 2, 3)], -1)
    norm = np.einsum("...i,...i->...", psi.conj(), psi).real
    return VectorFieldSample(X1, X4, v, s, norm)


def hermitian_form(spec: SuperpositionSpec, op: str, grid, branches=None) -> np.ndarray:
    """Re Psi^dag O Psi pointwise for O = 'p1' or 'H' (lattice action of O)."""
    X1, X4 = _grid(grid)
    f = FieldAmplitudes.chiral_field(spec.params.a_m, spec.params.omega)
    psi = 0j
    opsi = 0j
    for w, st in spec.components(branches):
        m = to_multispinor(st)
        if op == "p1":
            amps = _p1_op(m)
        elif op == "H":
            amps = apply_hamiltonian(m, f)
        else:
            raise ValueError(f"unknown operator {op!r}")
        psi = psi + w * m.evaluate(X1, X4)
        opsi = opsi + w * Multispinor(m.K, m.omega, amps).evaluate(X1, X4)
    return np.einsum("...i,...i->...", np.conj(psi), opsi).real


# ---------------------------------------------------------------------------
# structural-function forms


class _Z:
    """z_jk on an X4 grid with the R/I shorthand."""

    def __init__(self, b1: DispersionBranch, b2: DispersionBranch, X4):
        self.z = evaluate_z(b1.Z.merged(b2.Z), 2 * np.pi * np.asarray(X4, float))

    def __call__(self, j, k):
        return self.z[(j, k)]

    def R(self, i, k, j, l):
        return 2 * np.real(np.conj(self(i, k)) * self(j, l))

    def I(self, i, k, j, l):  # noqa: E743
        return 2 * np.imag(np.conj(self(i, k)) * self(j, l))

    def Rj(self, j):
        return self.R(j, 1, j, 4) + self.R(j, 2, j, 3)

    def Ij(self, j):
        return self.I(j, 1, j, 2) + self.I(j, 3, j, 4)

    def v1(self, j):
        return self.R(j, 1, j, 3) - self.R(j, 2, j, 4)

    def CD(self):
        c = lambda a, b: np.conj(self(*a)) * self(*b)  # noqa: E731
        C1 = c((1, 1), (2, 3)) + c((1, 2), (2, 4)) + c((1, 3), (2, 1)) + c((1, 4), (2, 2))
        C2 = c((1, 2), (2, 3)) + c((1, 4), (2, 1))
        C3 = c((2, 2), (1, 3)) + c((2, 4), (1, 1))
        D1 = c((1, 1), (2, 1)) + c((1, 2), (2, 2)) + c((1, 3), (2, 3)) + c((1, 4), (2, 4))
        D2 = c((1, 2), (2, 1)) + c((1, 4), (2, 3))
        D3 = c((2, 2), (1, 1)) + c((2, 4), (1, 3))
        return C1, C2, C3, D1, D2, D3


def _col(x):
    return np.asarray(x)[..., None]


def slow_phase(spec: SuperpositionSpec, X4, branches=None) -> np.ndarray:
    """phi = 2 pi dxi X4 / Omega + delta."""
    b1, b2 = branches if branches is not None else spec.branches()
    return 2 * np.pi * (b2.xi - b1.xi) * np.asarray(X4, float) / spec.params.omega + spec.delta


def uni_fields(spec: SuperpositionSpec, grid, branches=None) -> VectorFieldSample:
    if not spec.unidirectional:
        raise ValueError("uni_fields needs mode uni+ or uni-")
    branches = branches if branches is not None else spec.branches()
    X1, X4 = _grid(grid)
    z = _Z(*branches, X4)
    pm = spec.sign
    c2, s2 = np.cos(spec.alpha) ** 2, np.sin(spec.alpha) ** 2
    sin2a, cos2a = np.sin(2 * spec.alpha), np.cos(2 * spec.alpha)
    phi = slow_phase(spec, X4, branches)
    p1 = 2 * np.pi * X1
    C1, C2, C3, D1, D2, D3 = z.CD()
    s10 = sigma10(branches[0]).value

    def transverse(X2, X3):
        return sin2a * (
            _col(pm * X2.imag) * e_A(-pm * phi)
            + _col(X2.real) * e_B(-pm * phi)
            + _col(pm * X3.imag) * e_A(2 * p1 + pm * phi)
            + _col(X3.real) * e_B(2 * p1 + pm * phi)
        )

    def longitudinal(X1c):
        return sin2a * (X1c.imag * np.cos(phi + pm * p1) - X1c.real * np.sin(phi + pm * p1))

    v = _col(pm * (z.v1(1) * c2 + z.v1(2) * s2) + longitudinal(C1)) * _E1
    v = v + _col(z.Rj(1) * c2 - z.Rj(2) * s2) * e_A(p1) + transverse(C2, C3)
    s = _col(-pm * s10 * cos2a + longitudinal(D1)) * _E1
    s = s + _col(pm * (z.Ij(1) * c2 - z.Ij(2) * s2)) * e_B(p1) + transverse(D2, D3)
    return VectorFieldSample(X1, X4, v, s)


def bi_fields(spec: SuperpositionSpec, grid, branches=None) -> VectorFieldSample:
    if spec.unidirectional:
        raise ValueError("bi_fields needs mode bi1 or bi2")
    branches = branches if branches is not None else spec.branches()
    X1, X4 = _grid(grid)
    z = _Z(*branches, X4)
    qm, d = spec.q_m, spec.delta
    sin2a, cos2a = np.sin(2 * spec.alpha), np.cos(2 * spec.alpha)
    p1 = 2 * np.pi * X1
    s10 = sigma10(branches[0]).value

    def g0(pm):
        return cos2a * _E1 - pm * sin2a * e_B(pm * (qm * p1 + d))

    def g1(pm):
        return _col(sin2a * np.cos((1 + pm * qm) * p1 + pm * d)) * _E1 - pm * cos2a * e_B(p1)

    def g2(pm):
        return cos2a * _E1 + pm * sin2a * e_B((2 + pm * qm) * p1 + pm * d)

    if spec.j == 1:
        v = _col(z.Rj(1)) * e_A(p1) - _col(z.R(1, 2, 1, 4)) * g0(-1) + _col(z.R(1, 1, 1, 3)) * g2(1)
        s = -0.5 * (1 + s10) * g0(-1) - _col(z.Ij(1)) * g1(1) + 0.5 * (1 - s10) * g2(1)
    else:
        v = -_col(z.Rj(2)) * e_A(p1) + _col(z.R(2, 1, 2, 3)) * g0(1) - _col(z.R(2, 2, 2, 4)) * g2(-1)
        s = 0.5 * (1 + s10) * g0(1) - _col(z.Ij(2)) * g1(-1) - 0.5 * (1 - s10) * g2(-1)
    shape = np.broadcast(X1, X4).shape + (3,)
    return VectorFieldSample(X1, X4, np.broadcast_to(v, shape).copy(), np.broadcast_to(s, shape).copy())


# ---------------------------------------------------------------------------
# precession


@dataclass(frozen=True)
class PrecessionReport:
    q1: float
    Rv: float
    Rs: float
    nu_pr: float
    imag_residue: float

    def phase(self, t, delta: float = 0.0):
        """Precession angle delta + 2 pi nu_pr t (t in units h / m c^2)."""
        return delta + 2 * np.pi * self.nu_pr * np.asarray(t, float)


def precession_params(q1: float, params: ChiralParams = DEFAULT_PARAMS, branches=None) -> PrecessionReport:
    """R_v = -<C_2>, R_s = -<D_2> over X4 by Parseval; nu_pr = dxi."""
    b1, b2 = branches if branches is not None else solve_dispersion(abs(q1), params)
    Z1 = b1.table.astype(complex)
    Z2 = b2.table.astype(complex)
    # storage columns: j=1 -> (z12, z14, z11, z13); j=2 -> (z21, z23, z22, z24)
    c2 = np.vdot(Z1[:, 0], Z2[:, 1]) + np.vdot(Z1[:, 1], Z2[:, 0])
    d2 = np.vdot(Z1[:, 0], Z2[:, 0]) + np.vdot(Z1[:, 1], Z2[:, 1])
    return PrecessionReport(float(q1), float(-c2.real), float(-d2.real), b2.xi - b1.xi,
                            float(max(abs(c2.imag), abs(d2.imag))))


# ---------------------------------------------------------------------------
# means


def _diag_op(m: Multispinor, mats) -> dict:
    return {n: [M @ c for M in mats] for n, c in m.amps.items()}


def _p1_op(m: Multispinor) -> dict:
    # A' has no e1 component, so p1 is diagonal on the lattice
    return {n: (m.K.q1 + n.n1 * m.omega) * c for n, c in m.amps.items()}


def _spectrum(a: Multispinor, ob: dict, k1b: float, omega: float) -> dict:
    """X4-averaged <a| O b> resolved by X1 frequency (units of 1/lambda)."""
    out: dict = defaultdict(complex)
    base = (k1b - a.K.q1) / omega
    for nb, vb in ob.items():
        for na, va in a.amps.items():
            if na.n4 == nb.n4 and na.n2 == nb.n2 and na.n3 == nb.n3:
                out[round(base + nb.n1 - na.n1, 12)] += np.vdot(va, vb)
    return dict(out)


def _window_mean(spec_: dict, period: float) -> complex:
    total = 0j
    for f, c in spec_.items():
        if f == 0:
            total += c
        elif np.isfinite(period):
            x = f * period
            if abs(x - round(x)) > 1e-12:
                total += c * (np.exp(2j * np.pi * x) - 1) / (2j * np.pi * x)
    return total


@dataclass(frozen=True)
class UniMeans:
    v: tuple
    s: tuple
    P1: float
    E: float
    E_minus_one: float
    v1_printed: float
    norm: float


@dataclass(frozen=True)
class BiMeans:
    P1: float
    E: float
    E_minus_one: float
    P1_expected: float
    period: float


def _cross_ops(ma, mb, f):
    """<a|O b> (same-n pairing) for O in (1, p1, H - 1, alpha_k, Sigma_k)."""
    Hb = apply_hamiltonian(mb, f)
    out = defaultdict(complex)
    for n, ca in ma.amps.items():
        cb = mb.amps.get(n)
        if cb is not None:
            out["1"] += np.vdot(ca, cb)
            out["p1"] += (mb.K.q1 + n.n1 * mb.omega) * np.vdot(ca, cb)
            out["H-1"] += np.vdot(ca, Hb.get(n, 0 * cb) - cb)
            for k in (1, 2, 3):
                out[f"a{k}"] += np.vdot(ca, GAMMA.alpha[k] @ cb)
                out[f"S{k}"] += np.vdot(ca, GAMMA.sigma[k] @ cb)
        elif n in Hb:
            out["H-1"] += np.vdot(ca, Hb[n])
    return out


def uni_means(spec: SuperpositionSpec, branches=None, X4: float = 0.0) -> UniMeans:
    """Cell means with the slow phase frozen at its value at X4.

    ``v1_printed`` is the closed form +-(J_- cos 2a + J_+ sin 2a); the
    direct longitudinal mean is v[0].
    """
    if not spec.unidirectional:
        raise ValueError("uni_means needs mode uni+ or uni-")
    branches = branches if branches is not None else spec.branches()
    (wa, sa), (wb, sb) = spec.components(branches)
    f = FieldAmplitudes.chiral_field(spec.params.a_m, spec.params.omega)
    ma, mb = to_multispinor(sa), to_multispinor(sb)
    ca, cb = np.cos(spec.alpha), np.sin(spec.alpha)
    phi = float(slow_phase(spec, X4, branches))
    aa, bb, ab = _cross_ops(ma, ma, f), _cross_ops(mb, mb, f), _cross_ops(ma, mb, f)

    def mean(key):
        return (ca * ca * aa[key].real + cb * cb * bb[key].real
                + 2 * ca * cb * (np.exp(-1j * phi) * ab[key]).real)

    v = tuple(float(mean(f"a{k}")) for k in (1, 2, 3))
    s = tuple(float(mean(f"S{k}")) for k in (1, 2, 3))
    e1 = float(mean("H-1"))
    # J_- belongs to Psi_1 (energy E_1 = E_-), J_+ to Psi_2
    j_minus, j_plus = spec.sign * aa["a1"].real, spec.sign * bb["a1"].real
    printed = spec.sign * (j_minus * np.cos(2 * spec.alpha) + j_plus * np.sin(2 * spec.alpha))
    return UniMeans(v, s, float(mean("p1")), 1.0 + e1, e1, float(printed), float(mean("1")))


def bi_periods(q_m: float) -> tuple:
    """X1 periods (dX11, dX12) = 1/|1 -+ q_m|; inf marks an X1-independent form."""
    if q_m < 0:
        raise ValueError("q_m must be nonnegative")
    out = []
    for j in (1, 2):
        den = abs(1 - (-1) ** j * q_m)
        out.append(np.inf if den == 0 else 1.0 / den)
    return tuple(out)


def bi_means(spec: SuperpositionSpec, branches=None) -> BiMeans:
    """Means of p1 and H over one X1 period dX1j and one X4 period.

    Cross terms between the two directions are resolved by X1 frequency and
    averaged exactly over the window; with an infinite period only the
    stationary component survives.
    """
    if spec.unidirectional:
        raise ValueError("bi_means needs mode bi1 or bi2")
    branches = branches if branches is not None else spec.branches()
    (wa, sa), (wb, sb) = spec.components(branches)
    f = FieldAmplitudes.chiral_field(spec.params.a_m, spec.params.omega)
    ma, mb = to_multispinor(sa), to_multispinor(sb)
    period = bi_periods(spec.q_m)[spec.j - 1]
    om = spec.params.omega

    def op(m, which):
        if which == "p1":
            d = _p1_op(m)
        elif which == "H-1":
            d = apply_hamiltonian(m, f)
            d = {n: v - m.amps[n] if n in m.amps else v for n, v in d.items()}
        else:
            d = dict(m.amps)
        return d

    def mean(which):
        total = 0j
        for (w1, m1), (w2, m2) in [((wa, ma), (wa, ma)), ((wb, mb), (wb, mb)), ((wa, ma), (wb, mb))]:
            val = _window_mean(_spectrum(m1, op(m2, which), m2.K.q1, om), period)
            term = np.conj(w1) * w2 * val
            total += term if m1 is m2 else 2 * term.real
        return float(total.real)

    norm = mean("1")
    p1 = mean("p1") / norm
    e1 = mean("H-1") / norm
    b = sa.branch
    p10 = 0.5 * om * (1.0 - sigma10(b).value)
    expected = (abs(spec.q1) - (-1) ** spec.j * p10) * np.cos(2 * spec.alpha)
    return BiMeans(p1, 1.0 + e1, e1, float(expected), period)


def default_grid(spec: SuperpositionSpec, n: int = 64) -> tuple:
    """n x n grid over one joint period (unit cell for uni and degenerate bi)."""
    if spec.unidirectional:
        span = 1.0
    else:
        span = bi_periods(spec.q_m)[spec.j - 1]
        qm = spec.q_m
        # the frame vectors g carry q_m phi1, so close the cell on that too
        if qm > 0 and abs(qm - round(qm)) > 1e-12:
            span = max(span if np.isfinite(span) else 1.0, 1.0 / qm)
        elif not np.isfinite(span):
            span = 1.0
    x1 = np.arange(n) * span / n
    x4 = np.arange(n) / n
    return np.meshgrid(x1, x4, indexing="ij")
