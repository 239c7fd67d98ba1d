"""Machine-checkable invariants of the field algebra and the chiral solver."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .chiral_core import DEFAULT_PARAMS, ChiralParams, ode_residual, solve_dispersion
from .field_algebra import (
    GAMMA,
    FieldAmplitudes,
    FourVectorQ,
    LatticeIndex,
    build_projector,
    compute_N,
    shift_lists,
    structural_params,
)
from .wavefunction import basic_states, inner, residual_R

__all__ = ["CheckResult", "run_checks", "random_even_point"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    tol: float
    count: int = 1

    def as_dict(self) -> dict:
        return asdict(self)


def _check(name, value, tol, count=1) -> CheckResult:
    value = float(value)
    return CheckResult(name, bool(value <= tol), value, tol, count)


def random_even_point(rng: np.random.Generator, span: int = 3) -> LatticeIndex:
    while True:
        n = LatticeIndex(*(int(x) for x in rng.integers(-span, span + 1, 4)))
        if n.in_lattice:
            return n


def _algebra_checks(rng) -> list[CheckResult]:
    B = GAMMA.basis
    out = [
        _check("gamma_basis_hermitian", max(np.abs(b - b.conj().T).max() for b in B), 1e-15, 16),
        _check("gamma_basis_trace_orthonormal",
               max(abs(np.trace(B[a] @ B[b]) - 4 * (a == b)) for a in range(16) for b in range(16)), 1e-14, 256),
    ]
    f = FieldAmplitudes.random(rng, float(rng.uniform(0.05, 0.5)))
    Q = FourVectorQ(*rng.standard_normal(4))
    m = random_even_point(rng)
    _, s69 = shift_lists()
    n1, n2 = structural_params(f, m, Q)
    e1 = max(np.abs(compute_N(m, m + s69[i], Q, f) - n1[i - 1].to_matrix()).max() for i in range(1, 13))
    e2 = max(np.abs(compute_N(m, m + s69[i], Q, f) - n2[i - 13] * np.eye(4)).max() for i in range(13, len(s69)))
    out.append(_check("n1_table", e1, 1e-12, 12))
    out.append(_check("n2_table", e2, 1e-12, len(s69) - 13))
    herm = 0.0
    for _ in range(8):
        a = random_even_point(rng)
        b = a + s69[int(rng.integers(0, len(s69)))]
        herm = max(herm, np.abs(compute_N(a, b, Q, f) - compute_N(b, a, Q, f).conj().T).max())
    out.append(_check("n_pairing_hermitian", herm, 1e-12, 8))
    P = build_projector(m, Q, f)
    M = P.matrix
    out.append(_check("projector_idempotent", np.abs(M @ M - M).max(), 1e-10))
    out.append(_check("projector_hermitian", np.abs(M - M.conj().T).max(), 1e-10))
    out.append(_check("projector_trace", abs(np.trace(M) - 4), 1e-10))
    return out


def _chiral_counts(params: ChiralParams) -> list[CheckResult]:
    f = FieldAmplitudes.chiral_field(params.a_m, params.omega)
    n1, n2 = structural_params(f, LatticeIndex(0, 0, 0, 0), FourVectorQ(0.3, 0.0, 0.0, 1.1))
    nz1 = sum(not d.is_zero(1e-15) for d in n1)
    nz2 = [v for v in n2 if abs(v) > 1e-15]
    target = 4 * params.a_m ** 2
    dev = max((abs(v - target) for v in nz2), default=np.inf)
    return [
        _check("chiral_nonzero_n1_is_4", abs(nz1 - 4), 0),
        _check("chiral_nonzero_n2_is_2", abs(len(nz2) - 2), 0),
        _check("chiral_n2_equals_4am2", dev, 1e-15),
    ]


def _solver_checks(params: ChiralParams) -> list[CheckResult]:
    f = FieldAmplitudes.chiral_field(params.a_m, params.omega)
    q1 = params.omega
    b1, b2 = solve_dispersion(q1, params)
    states = basic_states(b1, b2)
    res = max(residual_R(s, f) for s in states.values())
    keys = sorted(states)
    gram = np.array([[inner(states[a], states[b], cross_sector="cell") for b in keys] for a in keys])
    drift = max(ode_residual(b.Z, b.j, b.q1, b.q4, params, return_drift=True)[1] for b in (b1, b2))
    return [
        _check("residual_R", res, 1e-10, 4),
        _check("orthonormality", np.abs(gram - np.eye(4)).max(), 1e-10, 16),
        _check("norm_conservation", drift, 1e-12, 2),
    ]


def run_checks(seed: int = 0, params: ChiralParams = DEFAULT_PARAMS) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    return _algebra_checks(rng) + _chiral_counts(params) + _solver_checks(params)
