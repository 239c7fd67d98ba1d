"""Mean values of H, p1, alpha1 and Sigma1 for the basic states, the energy
splitting scan and the ground-state search.

Energies are carried as E - 1 wherever possible: the interesting
differences are 1e-12 and smaller, so the leading rest energy is removed
analytically before any floating-point sum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import optimize

from .chiral_core import DEFAULT_PARAMS, ChiralParams, DispersionBranch, evaluate_z, solve_dispersion
from .field_algebra import GAMMA, FieldAmplitudes, wave_index
from .wavefunction import PlaneState, apply_hamiltonian, to_multispinor

__all__ = [
    "Sigma10",
    "sigma10",
    "StateMeans",
    "mean_observables",
    "energy_from_structure",
    "spin_label_states",
    "ObservableReport",
    "observables_at",
    "splitting_scan",
    "GroundState",
    "ground_state_locator",
    "velocity_zero_crossing",
]

_SIGMA_DIAG = np.array([1.0, 1.0, -1.0, -1.0])


class Sigma10(NamedTuple):
    value: float
    variance: float


def sigma10(branch: DispersionBranch, samples: int = 256) -> Sigma10:
    """Spin constant of a branch: Parseval mean and variance over phi4."""
    Z = branch.table
    # the unit norm turns the signed sum into 1 - 2 (odd-column weight),
    # which keeps 1 - Sigma10 free of cancellation
    value = float(1.0 - 2.0 * np.sum(Z[:, 2:] ** 2))
    phi = 2 * np.pi * np.arange(samples) / samples
    z = np.exp(1j * np.outer(phi, branch.Z.harmonics)) @ Z
    pointwise = np.sum(np.abs(z) ** 2 * _SIGMA_DIAG, axis=1)
    return Sigma10(value, float(np.var(pointwise)))


@dataclass(frozen=True)
class StateMeans:
    """Cell averages for one basic state (units of m c^2, m c, c, hbar/2)."""

    E_minus_one: float
    E_direct_minus_one: float
    P: tuple
    J: tuple
    S: tuple
    norm: float

    @property
    def E(self) -> float:
        return 1.0 + self.E_minus_one

    @property
    def P1(self) -> float:
        return self.P[0]

    @property
    def J1(self) -> float:
        return self.J[0]

    @property
    def S1(self) -> float:
        return self.S[0]


def mean_observables(state: PlaneState) -> StateMeans:
    """Means of H, p_k, alpha_k and Sigma_k by lattice (Parseval) sums."""
    b = state.branch
    om = b.params.omega
    f = FieldAmplitudes.chiral_field(b.params.a_m, om)
    m = to_multispinor(state)
    K = m.K
    norm = m.norm2()
    P = np.zeros(3)
    J = np.zeros(3)
    S = np.zeros(3)
    # Floquet route: E = q4 + Omega * sum n4 |c(n)|^2
    n4_mean = 0.0
    for n, c in m.amps.items():
        w2 = np.vdot(c, c).real
        n4_mean += n.n4 * w2
        for k in range(3):
            P[k] += (K[k] + n[k] * om) * w2
            J[k] += np.vdot(c, GAMMA.alpha[k + 1] @ c).real
            S[k] += np.vdot(c, GAMMA.sigma[k + 1] @ c).real
    # field part of p_k: -<A'_k>, cross terms between harmonics n and n + K_j
    for jw in range(1, 7):
        kv = wave_index(jw)
        amp = f.A[jw - 1]
        if not np.any(amp):
            continue
        for n, c in m.amps.items():
            other = m.amps.get(n + kv)
            if other is not None:
                P -= 2 * np.real(np.vdot(other, c) * amp)
    e_floquet = b.q40_minus_one + b.xi + om * n4_mean
    Hc = apply_hamiltonian(m, f)
    e_direct = sum(np.vdot(c, Hc[n] - c).real for n, c in m.amps.items())
    return StateMeans(float(e_floquet), float(e_direct), tuple(P), tuple(J), tuple(S), norm)


def energy_from_structure(branch: DispersionBranch, samples: int = 256) -> float:
    """E_j - 1 from the structural-function form of the energy density.

    H_j = Omega R_{jj,j(j+2)} + |q1| v_1j + |z_j1|^2 + |z_j2|^2 - |z_j3|^2
    - |z_j4|^2 + (-1)^j 4 A_m R_j cos(phi4), averaged over phi4 (the sampling
    is exact for these trigonometric polynomials).
    """
    j = branch.j
    om, a_m = branch.params.omega, branch.params.a_m
    phi = 2 * np.pi * np.arange(samples) / samples
    z = evaluate_z(branch.Z, phi)
    Zk = {k: z[(j, k)] for k in (1, 2, 3, 4)}

    def R(k, l):
        return 2 * np.real(np.conj(Zk[k]) * Zk[l])

    v1 = R(1, 3) - R(2, 4)
    Rj = R(1, 4) + R(2, 3)
    # |z1|^2 + |z2|^2 - |z3|^2 - |z4|^2 - 1 = -2 (|z3|^2 + |z4|^2)
    beta_m1 = -2 * (np.abs(Zk[3]) ** 2 + np.abs(Zk[4]) ** 2)
    H = om * R(j, j + 2) + abs(branch.q1) * v1 + beta_m1 + (-1) ** j * 4 * a_m * Rj * np.cos(phi)
    return float(np.mean(H))


def spin_label_states(b1: DispersionBranch, b2: DispersionBranch, q1: float) -> dict:
    """S+ and S- states at signed q1.

    q1 >= 0: S+ = Psi_2(q+), S- = Psi_1(q+); q1 < 0: S+ = Psi_1(q-),
    S- = Psi_2(q-).
    """
    if q1 >= 0:
        return {"+": PlaneState(b2, 1), "-": PlaneState(b1, 1)}
    return {"+": PlaneState(b1, -1), "-": PlaneState(b2, -1)}


@dataclass(frozen=True)
class ObservableReport:
    q1: float
    xi1: float
    xi2: float
    sigma10: float
    p10: float
    means: dict

    @property
    def dxi(self) -> float:
        return self.xi2 - self.xi1

    def E(self, s: str) -> float:
        return self.means[s].E

    def E_minus_one(self, s: str) -> float:
        return self.means[s].E_minus_one

    @property
    def splitting(self) -> float:
        """E_- - E_+ (Floquet route)."""
        return self.means["-"].E_minus_one - self.means["+"].E_minus_one

    @property
    def splitting_direct(self) -> float:
        return self.means["-"].E_direct_minus_one - self.means["+"].E_direct_minus_one


def observables_at(q1: float, params: ChiralParams = DEFAULT_PARAMS, branches=None) -> ObservableReport:
    b1, b2 = branches if branches is not None else solve_dispersion(q1, params)
    states = spin_label_states(b1, b2, q1)
    means = {s: mean_observables(st) for s, st in states.items()}
    s10 = sigma10(b1).value
    return ObservableReport(float(q1), b1.xi, b2.xi, s10, 0.5 * params.omega * (1.0 - s10), means)


def _scan_row(q1: float, params: ChiralParams) -> dict:
    row = {"q1": float(q1)}
    try:
        rep = observables_at(q1, params)
        inv = observables_at(-q1, params)
        row.update(
            xi1=rep.xi1,
            xi2=rep.xi2,
            dxi=rep.dxi,
            E_plus=rep.E("+"),
            E_minus=rep.E("-"),
            E_plus_m1=rep.E_minus_one("+"),
            E_minus_m1=rep.E_minus_one("-"),
            dE=rep.splitting,
            dE_direct=rep.splitting_direct,
            dE_inverted=inv.E_minus_one("+") - inv.E_minus_one("-"),
            J1_plus=rep.means["+"].J1,
            J1_minus=rep.means["-"].J1,
            P1_plus=rep.means["+"].P1,
            P1_minus=rep.means["-"].P1,
            status="ok",
        )
    except Exception as exc:  # a failed point must not abort the sweep
        row["status"] = f"error: {type(exc).__name__}: {exc}"
    return row


def splitting_scan(grid, params: ChiralParams = DEFAULT_PARAMS, mapper=map) -> list[dict]:
    """Energy splitting per q1 (rows in grid order).

    ``dE`` is E_- - E_+ from the Floquet route and ``dE_direct`` from the
    lattice Hermitian form of H; ``dE_inverted`` is E_+(-q1) - E_-(-q1).
    """
    from functools import partial

    return list(mapper(partial(_scan_row, params=params), list(grid)))


@dataclass(frozen=True)
class GroundState:
    q1: float
    E_min: float
    E_min_minus_one: float
    P1: float
    q1_golden: float
    sign: str


def _e_label(q1: float, label: str, params: ChiralParams) -> float:
    return observables_at(q1, params).E_minus_one(label)


def ground_state_locator(params: ChiralParams = DEFAULT_PARAMS, label: str = "+") -> GroundState:
    """Minimum of E_label over q1.

    A golden-section search seeded at +-p10 brackets the minimum; the energy
    is flat to second order there, so the search alone pins q1 only to about
    sqrt(eps).  The returned point is the zero of the exactly linear momentum
    P1_label(q1) = q1 -+ p10, after checking the search landed next to it.
    """
    rep0 = observables_at(0.0, params)
    p10 = rep0.p10
    sgn = 1.0 if label == "+" else -1.0
    centre = sgn * p10
    if p10 == 0.0:
        return GroundState(0.0, 1.0 + rep0.E_minus_one(label), rep0.E_minus_one(label), 0.0, 0.0, label)
    width = max(abs(centre), 1e-12)
    res = optimize.minimize_scalar(
        lambda q: _e_label(q, label, params),
        bracket=(centre - width, centre, centre + width),
        method="golden",
        options={"xtol": 1e-10},
    )
    q_gs = float(res.x)
    # P1 is q1 - sgn p10 with p10 independent of q1: its root is centre
    rep = observables_at(centre, params)
    p1 = rep.means[label].P1
    if abs(q_gs - centre) > 1e-3 * abs(centre):
        raise RuntimeError(f"golden-section minimum {q_gs:.6e} is far from the P1 root {centre:.6e}")
    e = rep.E_minus_one(label)
    return GroundState(centre, 1.0 + e, e, p1, q_gs, label)


def velocity_zero_crossing(params: ChiralParams = DEFAULT_PARAMS, label: str = "+") -> float:
    """q1 where J1_label vanishes (negative for '+', positive for '-')."""
    v10 = observables_at(0.0, params).means["+"].J1
    if v10 == 0.0:
        return 0.0
    sgn = -1.0 if label == "+" else 1.0
    hi = sgn * 20 * abs(v10)
    f = lambda q: observables_at(q, params).means[label].J1  # noqa: E731
    a, b = (hi, 0.0) if hi < 0 else (0.0, hi)
    return float(optimize.brentq(f, a, b, xtol=1e-22, rtol=1e-14))
