import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from estc_dirac.chiral_core import DEFAULT_PARAMS, ChiralParams, solve_dispersion
from estc_dirac.field_algebra import GAMMA, FieldAmplitudes, FourVectorQ, LatticeIndex
from estc_dirac.wavefunction import (
    U_BASIS,
    Multispinor,
    PlaneState,
    SectorMismatchError,
    assemble_psi,
    basic_states,
    inner,
    residual_R,
    to_multispinor,
)

OMEGA = DEFAULT_PARAMS.omega
CHIRAL = FieldAmplitudes.chiral_field(DEFAULT_PARAMS.a_m, OMEGA)


@pytest.fixture(scope="module")
def states_at_omega():
    return basic_states(*solve_dispersion(OMEGA))


def test_u_basis_orthonormal():
    U = np.array(U_BASIS)
    assert np.allclose(U @ U.T, np.eye(4), atol=1e-15)


@pytest.mark.parametrize("q1", [0.0, OMEGA, 1.5])
def test_pointwise_norm(q1):
    states = basic_states(*solve_dispersion(q1))
    g = np.linspace(0, 1, 64, endpoint=False)
    X1, X4 = np.meshgrid(g, g, indexing="ij")
    for s in states.values():
        psi = assemble_psi(s, X1, X4)
        assert np.abs(np.sum(np.abs(psi) ** 2, axis=-1) - 1).max() < 1e-12


def test_orthonormality(states_at_omega):
    keys = sorted(states_at_omega)
    G = np.array([[inner(states_at_omega[a], states_at_omega[b], cross_sector="cell") for b in keys]
                  for a in keys])
    assert np.abs(G - np.eye(4)).max() < 1e-10


def test_same_branch_opposite_direction_orthogonal(states_at_omega):
    for j in (1, 2):
        v = inner(states_at_omega[(j, 1)], states_at_omega[(j, -1)], cross_sector="periodic")
        assert abs(v) < 1e-12
    for s in (1, -1):
        v = inner(states_at_omega[(1, s)], states_at_omega[(2, s)], cross_sector="periodic")
        assert abs(v) < 1e-12


def test_sector_mismatch(states_at_omega):
    with pytest.raises(SectorMismatchError):
        inner(states_at_omega[(1, 1)], states_at_omega[(1, -1)])
    with pytest.raises(ValueError):
        inner(states_at_omega[(1, 1)], states_at_omega[(1, -1)], cross_sector="bogus")


def test_small_momentum_limit_of_cross_overlap():
    prev = None
    for m in (-10, -12, -14):
        states = basic_states(*solve_dispersion(OMEGA * 2.0 ** m))
        for s in (1, -1):
            v = abs(inner(states[(1, s)], states[(2, -s)], cross_sector="periodic"))
            assert abs(v - 1) < 1e-4
        dev = 1 - v
        if prev is not None:
            assert dev < prev
        prev = dev


def _periodic_part(state, X1, X4):
    p1, p4 = 2 * np.pi * X1, 2 * np.pi * X4
    ph = np.exp(1j * (state.sign * state.q1 * p1 - state.branch.q4 * p4) / state.omega)
    return assemble_psi(state, X1, X4) / ph[..., None]


def test_limit_of_crossed_states():
    # Psi_1(q+) - Psi_2(q-) is linear in q1; extrapolate to q1 = 0
    X1, X4 = np.meshgrid(np.linspace(0, 1, 9), np.linspace(0, 1, 9), indexing="ij")
    qs, diffs = [], []
    for m in (-10, -11, -12):
        q1 = OMEGA * 2.0 ** m
        st_ = basic_states(*solve_dispersion(q1))
        for s in (1, -1):
            d = np.abs(_periodic_part(st_[(1, s)], X1, X4) - _periodic_part(st_[(2, -s)], X1, X4)).max()
            if s == 1:
                qs.append(q1)
                diffs.append(d)
    slope, intercept = np.polyfit(qs, diffs, 1)
    assert abs(intercept) < 1e-9
    assert diffs[-1] < 1e-5


@pytest.mark.parametrize("q1", [0.0, OMEGA, 0.7])
def test_to_multispinor_support_and_norm(q1):
    for s in basic_states(*solve_dispersion(q1)).values():
        m = to_multispinor(s)
        assert abs(m.norm() - 1) < 1e-12
        for n in m.support():
            assert n.n2 == 0 and n.n3 == 0
            if n.n4 % 2 == 0:
                assert n.n1 == 0
            else:
                assert abs(n.n1) == 1
            assert n.in_lattice


def test_multispinor_matches_pointwise_field(states_at_omega):
    rng = np.random.default_rng(4)
    X1, X4 = rng.uniform(-2, 2, 30), rng.uniform(-2, 2, 30)
    for s in states_at_omega.values():
        assert np.abs(to_multispinor(s).evaluate(X1, X4) - assemble_psi(s, X1, X4)).max() < 1e-12


def test_rest_amplitude():
    states = basic_states(*solve_dispersion(0.0))
    c = to_multispinor(states[(1, 1)]).amps[LatticeIndex(0, 0, 0, 0)]
    b1 = states[(1, 1)].branch
    x120, x140 = b1.Z.x(1, 2, 0), b1.Z.x(1, 4, 0)
    assert abs(x120 - 0.999875) < 1e-6
    expected = x120 * U_BASIS[1] + x140 * U_BASIS[3]
    assert np.allclose(np.abs(c), np.abs(expected), atol=1e-15)


def test_free_rest_spinor_positive_energy():
    params = ChiralParams(a_m=0.0)
    states = basic_states(*solve_dispersion(0.0, params))
    s = states[(2, 1)]
    g = np.linspace(0, 1, 5)
    X1, X4 = np.meshgrid(g, g, indexing="ij")
    psi = _periodic_part(s, X1, X4)
    assert np.abs(psi - psi[0, 0]).max() < 1e-15
    beta = GAMMA.alpha[4]
    c = psi[0, 0]
    assert np.allclose(beta @ c, c)  # energy +1 at rest


@pytest.mark.parametrize("m", [-10, -3, 0, 5, 15])
def test_residual_converged(m):
    for s in basic_states(*solve_dispersion(OMEGA * 2.0 ** m)).values():
        assert residual_R(s, CHIRAL) < 1e-10


def test_residual_decreases_with_model_size():
    prev = None
    for g in (4, 6, 8, 10, 12):
        params = ChiralParams(g_max=g)
        st_ = basic_states(*solve_dispersion(OMEGA, params, edge_tol=1.0))
        R = max(residual_R(s, CHIRAL) for s in st_.values())
        if prev is not None:
            assert R <= 1.1 * prev
        prev = R
    assert prev < 1e-10


def test_residual_free_exact():
    params = ChiralParams(a_m=0.0)
    zero = FieldAmplitudes.chiral_field(0.0, OMEGA)
    for q1 in (0.0, 0.3):
        for s in basic_states(*solve_dispersion(q1, params)).values():
            assert residual_R(s, zero) < 1e-15


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_residual_of_random_multispinor(seed):
    rng = np.random.default_rng(seed)
    amps = {}
    for l in range(-6, 7):
        n = LatticeIndex(0, 0, 0, l) if l % 2 == 0 else LatticeIndex(int(rng.choice([-1, 1])), 0, 0, l)
        amps[n] = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    m = Multispinor(FourVectorQ(rng.uniform(-1, 1), 0, 0, rng.uniform(0.5, 2)), OMEGA, amps)
    scale = 1 / m.norm()
    m = Multispinor(m.K, OMEGA, {n: c * scale for n, c in amps.items()})
    assert abs(m.norm() - 1) < 1e-12
    assert residual_R(m, CHIRAL) > 0.1


def test_residual_rejects_zero():
    m = Multispinor(FourVectorQ(0, 0, 0, 1), OMEGA, {LatticeIndex(0, 0, 0, 0): np.zeros(4)})
    with pytest.raises(ValueError):
        residual_R(m, CHIRAL)


def test_plane_state_validation(states_at_omega):
    with pytest.raises(ValueError):
        PlaneState(states_at_omega[(1, 1)].branch, 0)
