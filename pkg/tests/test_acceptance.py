"""Acceptance criteria 1-10, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v``; the lines go straight to the
terminal (capture is bypassed) so they show up in the log.
"""

import numpy as np
import pytest

from estc_dirac.chiral_core import (
    DEFAULT_PARAMS,
    ChiralParams,
    RecurrenceInstability,
    evaluate_z,
    recurrence_extend,
    seeds_from_starting_coefficients,
    solve_branch,
    solve_dispersion,
)
from estc_dirac.field_algebra import (
    DegenerateLError,
    FieldAmplitudes,
    FourVectorQ,
    build_projector,
    compute_N,
    shift_lists,
    structural_params,
)
from estc_dirac.observables import (
    ground_state_locator,
    observables_at,
    sigma10,
    velocity_zero_crossing,
)
from estc_dirac.superposition import MODES, SuperpositionSpec, bi_fields, direct_fields, uni_fields
from estc_dirac.validation import random_even_point
from estc_dirac.wavefunction import basic_states, inner, residual_R

OMEGA = DEFAULT_PARAMS.omega
AM = DEFAULT_PARAMS.a_m
L = DEFAULT_PARAMS.l_max
GRID = [OMEGA * 2.0 ** m for m in range(-10, 16)]


def _report(capsys, n, checks):
    """checks: list of (label, value, limit, ok)."""
    ok = all(c[3] for c in checks)
    failed = [c for c in checks if not c[3]]
    shown = failed if failed else checks
    detail = "; ".join(f"{lab} = {val:.3g} (limit {lim:.3g})" for lab, val, lim, _ in shown)
    with capsys.disabled():
        print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def _abs(label, value, expected, tol):
    d = abs(value - expected)
    return label, d, tol, d < tol


def _below(label, value, tol):
    return label, value, tol, value < tol


@pytest.fixture(scope="module")
def rest():
    return observables_at(0.0)


def test_criterion_1_dispersion_constant(capsys):
    b1, b2 = solve_dispersion(0.0)
    _report(capsys, 1, [
        _abs("|xi1 - 0.000199970011|", b1.xi, 0.000199970011, 1e-11),
        _abs("|xi2 - 0.000199970011|", b2.xi, 0.000199970011, 1e-11),
        _below("|xi1 - xi2|", abs(b1.xi - b2.xi), 1e-11),
    ])


def test_criterion_2_spin_constant(capsys):
    vals, var = [], 0.0
    for q1 in GRID:
        for b in solve_dispersion(q1):
            s = sigma10(b)
            vals.append(s.value)
            var = max(var, s.variance)
    _report(capsys, 2, [
        _abs("|Sigma10 - 0.99960023984|", vals[0], 0.99960023984, 1e-10),
        _below("max variance over phi4", var, 1e-20),
        _below("spread over q1 grid", max(vals) - min(vals), 1e-10),
    ])


def test_criterion_3_rest_observables(capsys, rest):
    v10 = rest.means["+"].J1
    _report(capsys, 3, [
        _abs("|E0 - 1.000199970009|", rest.E("+"), 1.000199970009, 1e-11),
        _below("v10 relative error", abs(v10 / 1.99820142893e-10 - 1), 1e-3),
        _below("p10 relative error", abs(rest.p10 / 1.99880079944e-6 - 1), 1e-9),
    ])


def test_criterion_4_p10_identity(capsys, rest):
    from_means = -rest.means["+"].P1
    from_sigma = OMEGA * (1 - sigma10(solve_branch(0.0, 1)).value) / 2
    _report(capsys, 4, [_below("|p10(means) - Omega(1 - Sigma10)/2|", abs(from_means - from_sigma), 1e-12)])


def test_criterion_5_ground_state(capsys, rest):
    checks = []
    for label, sgn in (("+", 1), ("-", -1)):
        gs = ground_state_locator(label=label)
        checks += [
            _abs(f"|E_min({label}) - 1.000199970007|", gs.E_min, 1.000199970007, 1e-11),
            _below(f"q1_min({label}) relative offset from {'+' if sgn > 0 else '-'}p10",
                   abs(gs.q1 / (sgn * rest.p10) - 1), 1e-9),
            _below(f"|P1| at minimizer ({label})", abs(gs.P1), 1e-14),
        ]
    _report(capsys, 5, checks)


def test_criterion_6_velocity_zero_crossing(capsys):
    q10 = 1.99860096936e-10
    checks = [
        _below("q10(-) relative error", abs(velocity_zero_crossing(label="-") / q10 - 1), 1e-3),
        _below("q10(+) relative error", abs(-velocity_zero_crossing(label="+") / q10 - 1), 1e-3),
    ]
    rep = observables_at(q10 / 2)
    for s in "+-":
        m = rep.means[s]
        same = float(np.sign(m.J1) == np.sign(m.P1))
        checks.append((f"sign(J1) == sign(P1) at q10/2 ({s})", same, 0.5, same < 0.5))
    _report(capsys, 6, checks)


def test_criterion_7_starting_coefficients(capsys):
    b1, b2 = solve_dispersion(0.0)
    Z = b1.Z.merged(b2.Z)
    x, y = Z.x, Z.y
    _report(capsys, 7, [
        _abs("|x120 - 0.999875|", x(1, 2, 0), 0.999875, 1e-6),
        _abs("|x140 + 4.99594e-7|", x(1, 4, 0), -4.99594e-7, 1e-11),
        _abs("|y111 - 0.0141368|", y(1, 1, 1), 0.0141368, 1e-7),
        _abs("|y131 - 0.0000706745|", y(1, 3, 1), 0.0000706745, 1e-10),
        _below("|x120 + x210|", abs(x(1, 2, 0) + x(2, 1, 0)), 1e-12),
        _below("|x140 + x230|", abs(x(1, 4, 0) + x(2, 3, 0)), 1e-12),
        _below("|y111 - y221|", abs(y(1, 1, 1) - y(2, 2, 1)), 1e-12),
        _below("|y131 - y241|", abs(y(1, 3, 1) - y(2, 4, 1)), 1e-12),
    ])


def test_criterion_8_residual(capsys):
    f = FieldAmplitudes.chiral_field(AM, OMEGA)
    worst = max(residual_R(s, f) for m in (-10, -3, 0, 5, 15)
                for s in basic_states(*solve_dispersion(OMEGA * 2.0 ** m)).values())
    Rs = []
    for g in (4, 6, 8, 10, 12):
        st = basic_states(*solve_dispersion(OMEGA, ChiralParams(g_max=g), edge_tol=1.0))
        Rs.append(max(residual_R(s, f) for s in st.values()))
    rises = max(b / a for a, b in zip(Rs, Rs[1:]))
    _report(capsys, 8, [
        _below("max R over 4 states x 5 grid points", worst, 1e-10),
        # the last step sits on the rounding floor; allow 10% jitter there
        _below("max R(g+2)/R(g) for g_max 4..12", rises, 1.1),
    ])


def _recurrence_worst(q1, j):
    b = solve_branch(q1, j)
    t = b.table
    seeds = seeds_from_starting_coefficients(t[L, :2], t[L + 1, 2:] - t[L - 1, 2:], j, q1, b.xi)
    try:
        r = recurrence_extend(*seeds, j, q1, b.xi, L // 2)
    except RecurrenceInstability:
        r = recurrence_extend(*seeds, j, q1, b.xi, L // 2, growth_check=False)
    return float(np.abs(r.table - t[L - L // 2:L + L // 2 + 1]).max())


def test_criterion_9_property_suite(capsys):
    rng = np.random.default_rng(9)
    checks = []

    proj = 0.0
    for _ in range(100):
        f = FieldAmplitudes.random(rng, float(rng.uniform(0.05, 0.5)), scale=float(rng.uniform(0.05, 1)))
        try:
            P = build_projector(random_even_point(rng), FourVectorQ(*rng.uniform(-2, 2, 4)), f).matrix
        except DegenerateLError:
            continue
        proj = max(proj, np.linalg.norm(P @ P - P), abs(np.trace(P) - 4))
    checks.append(_below("projector idempotency/trace", proj, 1e-10))

    _, s69 = shift_lists()
    herm = 0.0
    for _ in range(100):
        f = FieldAmplitudes.random(rng, float(rng.uniform(0.01, 0.5)))
        Q = FourVectorQ(*rng.standard_normal(4))
        m = random_even_point(rng)
        n = m + s69[int(rng.integers(0, 69))]
        herm = max(herm, np.abs(compute_N(m, n, Q, f) - compute_N(n, m, Q, f).conj().T).max())
    checks.append(_below("N Hermitian pairing", herm, 1e-12))

    chiral = FieldAmplitudes.chiral_field(AM, OMEGA)
    n1, n2 = structural_params(chiral, random_even_point(rng), FourVectorQ(0.3, -0.1, 0.2, 1.1))
    nz1 = sum(not d.is_zero(1e-15) for d in n1)
    nz2 = n2[np.abs(n2) > 1e-15]
    bad = float(nz1 != 4) + float(len(nz2) != 2) + float(np.abs(nz2 - 4 * AM ** 2).max(initial=0.0) > 1e-18)
    checks.append(("chiral reduction mismatches", bad, 0.5, bad < 0.5))

    states = basic_states(*solve_dispersion(OMEGA))
    keys = sorted(states)
    G = np.array([[inner(states[a], states[b], cross_sector="cell") for b in keys] for a in keys])
    checks.append(_below("orthonormality |G - I|", np.abs(G - np.eye(4)).max(), 1e-10))

    phi = 2 * np.pi * np.arange(256) / 256
    drift = 0.0
    for q1 in GRID[::5]:
        b1, b2 = solve_dispersion(q1)
        z = evaluate_z(b1.Z.merged(b2.Z), phi)
        for j in (1, 2):
            drift = max(drift, np.abs(sum(np.abs(z[(j, k)]) ** 2 for k in range(1, 5)) - 1).max())
    checks.append(_below("norm conservation on 256 samples", drift, 1e-12))

    rec = {q1: max(_recurrence_worst(q1, j) for j in (1, 2)) for q1 in GRID}
    worst_q1 = max(rec, key=rec.get)
    over = [q for q, e in rec.items() if e >= 1e-9]
    where = f"{len(over)}/{len(rec)} points above limit from q1 = {min(over):.4g}" if over else "all points"
    checks.append(_below(f"recurrence vs eigensolve over the q1 grid ({where}; worst at q1 = {worst_q1:.4g})",
                         rec[worst_q1], 1e-9))

    field = 0.0
    for mode in MODES:
        for q1 in (OMEGA * 2.0 ** -10, OMEGA, OMEGA * 2.0 ** 5):
            spec = SuperpositionSpec(mode, float(rng.uniform(0, np.pi / 2)), float(rng.uniform(0, 2 * np.pi)), q1)
            br = spec.branches()
            pts = (rng.uniform(-1, 2, 100), rng.uniform(-1, 2, 100))
            d = direct_fields(spec, pts, br)
            c = (uni_fields if spec.unidirectional else bi_fields)(spec, pts, br)
            field = max(field, np.abs(d.v - c.v).max(), np.abs(d.s - c.s).max())
    checks.append(_below("closed form vs direct fields", field, 1e-10))

    inv = 0.0
    for q1 in GRID:
        a, b = observables_at(q1), observables_at(-q1)
        for s, t in (("+", "-"), ("-", "+")):
            for f in ("J1", "P1", "S1"):
                inv = max(inv, abs(getattr(a.means[s], f) + getattr(b.means[t], f)))
            inv = max(inv, abs(a.E_minus_one(s) - b.E_minus_one(t)))
    checks.append(_below("inversion symmetry of means", inv, 1e-12))

    _report(capsys, 9, checks)


def _s_long_amplitude(delta, grid, br):
    s1 = direct_fields(SuperpositionSpec.from_qm("bi2", 1.0, np.pi / 4, delta), grid, br).s[..., 0]
    return float(((s1.max(axis=1) - s1.min(axis=1)) / 2).max())


def test_criterion_10_bidirectional_example(capsys):
    g = np.arange(256) / 256
    grid = np.meshgrid(g, g, indexing="ij")
    spec = SuperpositionSpec.from_qm("bi2", 1.0, np.pi / 4, 0.0)
    br = spec.branches()
    closed = bi_fields(spec, grid, br)
    direct = direct_fields(spec, grid, br)
    v1 = max(np.abs(closed.v[..., 0]).max(), np.abs(direct.v[..., 0]).max())
    vmin = float(np.linalg.norm(closed.v, axis=-1).min())
    a0 = _s_long_amplitude(0.0, grid, br)
    a90 = _s_long_amplitude(np.pi / 2, grid, br)
    others = max(_s_long_amplitude(d, grid, br) for d in np.linspace(0, 2 * np.pi, 13)[1:-1])
    _report(capsys, 10, [
        _below("max |v1| on 256^2 grid", v1, 1e-12),
        ("min |v| on 256^2 grid", vmin, 0.005, vmin >= 0.005),
        _below("s longitudinal amplitude at delta = pi/2", a90, 1e-12),
        ("amplitude(delta) - amplitude(0), max over delta", others - a0, 1e-15, others - a0 <= 1e-15),
    ])
