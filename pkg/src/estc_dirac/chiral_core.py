"""Floquet harmonics of the chiral two-wave lattice.

The four structural functions of branch j are collected in
Z_j = (z_12, z_14, z_11, z_13) for j = 1 and (z_21, z_23, z_22, z_24) for
j = 2, expanded as Z_j(phi4) = sum_l Z_{j,l} exp(i l phi4).  Substituting
into the evolution equation gives the block-tridiagonal system

    (N_j - l Omega) Z_l = (-1)^j 2 A_m alpha1 (Z_{l-1} + Z_{l+1}),

which is linear in q4 and is solved here as a real symmetric eigenproblem.
Only the parity sector with even harmonics in components 0, 1 and odd
harmonics in components 2, 3 carries the physical branch.

Accuracy note.  The dense matrix has norm of order 2 sqrt(1 + q1^2), so a
direct eigensolve loses absolute accuracy as |q1| grows while the splitting
of interest shrinks.  The default solver therefore rotates each harmonic
block into its free-particle eigenbasis (with cancellation-free diagonal
entries) and eliminates the negative-energy amplitudes by a Schur
complement, iterating on the weak energy dependence of the effective
operator.  The dense path is kept as an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ChiralParams",
    "DEFAULT_PARAMS",
    "ALPHA1",
    "COMPONENT_LABELS",
    "EvolutionMatrices",
    "build_evolution",
    "TruncatedSystem",
    "build_truncated_system",
    "StructuralCoefficients",
    "DispersionBranch",
    "TruncationError",
    "BranchAmbiguityError",
    "RecurrenceInstability",
    "solve_branch",
    "solve_dispersion",
    "EDGE_TOL",
    "evaluate_z",
    "ode_residual",
    "RecurrenceResult",
    "seeds_from_starting_coefficients",
    "recurrence_extend",
]

ALPHA1 = np.fliplr(np.eye(4))
ALPHA1.setflags(write=False)

# component k of Z_j, in storage order
COMPONENT_LABELS = {1: (2, 4, 1, 3), 2: (1, 3, 2, 4)}


@dataclass(frozen=True)
class ChiralParams:
    omega: float = 0.01
    a_m: float = float(np.sqrt(2.0) / 200.0)
    g_max: int = 12

    def __post_init__(self):
        if self.g_max < 2:
            raise ValueError("g_max must be >= 2")
        if self.a_m < 0:
            raise ValueError("a_m must be nonnegative")
        if not self.omega > 0:
            raise ValueError("omega must be positive")

    @property
    def l_max(self) -> int:
        return self.g_max


DEFAULT_PARAMS = ChiralParams()


class TruncationError(RuntimeError):
    pass


class BranchAmbiguityError(RuntimeError):
    pass


class RecurrenceInstability(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Evolution matrices


def _n0(q1: float, j: int, omega: float) -> np.ndarray:
    q = (-1) ** j * q1
    return np.array([
        [-1.0, -q, 0.0, 0.0],
        [-q, 1.0, 0.0, 0.0],
        [0.0, 0.0, -1.0, q - omega],
        [0.0, 0.0, q - omega, 1.0],
    ])


@dataclass(frozen=True)
class EvolutionMatrices:
    q1: float
    q4: float
    j: int
    omega: float
    a_m: float
    N: np.ndarray = field(repr=False)
    alpha1: np.ndarray = field(repr=False, default=ALPHA1)

    def M(self, phi4: float) -> np.ndarray:
        return self.N - (-1) ** self.j * 4.0 * self.a_m * np.cos(phi4) * self.alpha1


def build_evolution(q1: float, q4: float, j: int, omega: float, a_m: float) -> EvolutionMatrices:
    if j not in (1, 2):
        raise ValueError("j must be 1 or 2")
    N = q4 * np.eye(4) + _n0(q1, j, omega)
    return EvolutionMatrices(float(q1), float(q4), j, float(omega), float(a_m), N)


@dataclass(frozen=True)
class TruncatedSystem:
    """T with (q4 I + T) Z = 0 on harmonics l = -L..L (4 rows per harmonic)."""

    q1: float
    j: int
    l_max: int
    T: np.ndarray = field(repr=False)

    @property
    def harmonics(self) -> np.ndarray:
        return np.arange(-self.l_max, self.l_max + 1)

    @property
    def sector(self) -> np.ndarray:
        """Row indices of the physical parity sector."""
        idx = []
        for i, l in enumerate(self.harmonics):
            idx += [4 * i, 4 * i + 1] if l % 2 == 0 else [4 * i + 2, 4 * i + 3]
        return np.array(idx)


def build_truncated_system(q1: float, j: int, params: ChiralParams = DEFAULT_PARAMS) -> TruncatedSystem:
    L = params.l_max
    ls = np.arange(-L, L + 1)
    n = len(ls)
    T = np.zeros((4 * n, 4 * n))
    base = _n0(q1, j, params.omega)
    off = -((-1) ** j) * 2.0 * params.a_m * ALPHA1
    for i, l in enumerate(ls):
        T[4 * i:4 * i + 4, 4 * i:4 * i + 4] = base - l * params.omega * np.eye(4)
        if i + 1 < n:
            T[4 * i:4 * i + 4, 4 * i + 4:4 * i + 8] = off
            T[4 * i + 4:4 * i + 8, 4 * i:4 * i + 4] = off
    return TruncatedSystem(float(q1), j, L, T)


# ---------------------------------------------------------------------------
# Coefficient tables


@dataclass(frozen=True)
class StructuralCoefficients:
    """Harmonic amplitudes Z_{j,l} for one or both branches.

    ``tables[j]`` has shape (2L+1, 4) with rows l = -L..L and columns in the
    storage order of ``COMPONENT_LABELS[j]``.  The cosine/sine coefficients
    are x_{jkl} = Z_l + Z_{-l} and y_{jkl} = Z_l - Z_{-l} (x_{jk0} = Z_0).
    """

    tables: dict
    l_max: int

    @property
    def harmonics(self) -> np.ndarray:
        return np.arange(-self.l_max, self.l_max + 1)

    @property
    def p_m(self) -> int:
        return self.l_max // 2

    def _col(self, j: int, k: int) -> np.ndarray:
        return self.tables[j][:, COMPONENT_LABELS[j].index(k)]

    def x(self, j: int, k: int, l: int) -> float:
        c = self._col(j, k)
        L = self.l_max
        if l == 0:
            return float(c[L])
        return float(c[L + l] + c[L - l])

    def y(self, j: int, k: int, l: int) -> float:
        c = self._col(j, k)
        L = self.l_max
        return float(c[L + l] - c[L - l]) if l else 0.0

    def merged(self, other: "StructuralCoefficients") -> "StructuralCoefficients":
        if other.l_max != self.l_max:
            raise ValueError("harmonic ranges differ")
        return StructuralCoefficients({**self.tables, **other.tables}, self.l_max)


def evaluate_z(Z: StructuralCoefficients, phi4) -> dict:
    """Structural functions z_jk at phi4 (scalar or array), keyed by (j, k)."""
    phi4 = np.asarray(phi4, dtype=float)
    ph = np.exp(1j * np.multiply.outer(phi4, Z.harmonics))
    out = {}
    for j, tab in sorted(Z.tables.items()):
        vals = ph @ tab
        for c, k in enumerate(COMPONENT_LABELS[j]):
            out[(j, k)] = vals[..., c]
    return out


@dataclass(frozen=True)
class DispersionBranch:
    q1: float
    j: int
    xi: float
    q4: float
    Z: StructuralCoefficients
    overlap: float
    residual: float
    params: ChiralParams = DEFAULT_PARAMS
    method: str = "schur"

    @property
    def table(self) -> np.ndarray:
        return self.Z.tables[self.j]

    @property
    def q40(self) -> float:
        return float(np.hypot(1.0, self.q1))

    @property
    def q40_minus_one(self) -> float:
        q = self.q1
        return q * q / (1.0 + self.q40)


# ---------------------------------------------------------------------------
# Solvers


def _free_rotations(q: float, omega: float, ls: np.ndarray, q40: float):
    """Per-harmonic free eigenbasis of the sector blocks.

    Returns (c, s, d_plus, d_minus): rotation cosines/sines and the diagonal
    entries of the shifted operator (eigenvalue minus q40) in that basis.
    """
    even = ls % 2 == 0
    p = np.where(even, q, omega - q)
    e = np.hypot(1.0, p)
    c = np.sqrt((e + 1.0) / (2.0 * e))
    s = p / np.sqrt(2.0 * e * (e + 1.0))
    # e - q40 without cancellation: zero for even harmonics
    de = np.where(even, 0.0, omega * (omega - 2.0 * q) / (e + q40))
    d_plus = ls * omega + de
    d_minus = ls * omega - e - q40
    return c, s, d_plus, d_minus


def _rotated_operator(q1: float, j: int, params: ChiralParams):
    L = params.l_max
    ls = np.arange(-L, L + 1)
    q = (-1) ** j * q1
    q40 = float(np.hypot(1.0, q1))
    c, s, dp, dm = _free_rotations(q, params.omega, ls, q40)
    kappa = (-1) ** j * 2.0 * params.a_m
    n = len(ls)
    Hpp = np.diag(dp)
    Hqq = np.diag(dm)
    Hpq = np.zeros((n, n))
    X = np.array([[0.0, 1.0], [1.0, 0.0]])
    for i in range(n - 1):
        Ra = np.array([[c[i], -s[i]], [s[i], c[i]]])
        Rb = np.array([[c[i + 1], -s[i + 1]], [s[i + 1], c[i + 1]]])
        C = kappa * Ra.T @ X @ Rb
        Hpp[i, i + 1] = Hpp[i + 1, i] = C[0, 0]
        Hqq[i, i + 1] = Hqq[i + 1, i] = C[1, 1]
        Hpq[i, i + 1] = C[0, 1]
        Hpq[i + 1, i] = C[1, 0]
    return ls, c, s, Hpp, Hpq, Hqq, q40


def _select(vals, vecs, overlap_of, omega):
    ov = np.array([overlap_of(vecs[:, k]) for k in range(vecs.shape[1])])
    near = np.flatnonzero(np.abs(vals) < omega)
    if near.size == 0:
        near = np.argsort(np.abs(vals))[:3]
    order = sorted(near, key=lambda k: (-ov[k], abs(vals[k])))
    best = order[0]
    if len(order) > 1 and abs(ov[order[1]] - ov[best]) <= 1e-12:
        raise BranchAmbiguityError(
            f"two candidates share overlap {ov[best]:.3e} (xi = {vals[best]:.6e}, {vals[order[1]]:.6e})"
        )
    return best, ov[best]


def _schur_solve(q1: float, j: int, params: ChiralParams, max_iter: int = 60):
    ls, c, s, Hpp, Hpq, Hqq, q40 = _rotated_operator(q1, j, params)
    L = params.l_max
    n = len(ls)
    xi = 0.0
    xp = None
    for _ in range(max_iter):
        G = xi * np.eye(n) - Hqq
        Heff = Hpp + Hpq @ np.linalg.solve(G, Hpq.T)
        Heff = 0.5 * (Heff + Heff.T)
        vals, vecs = np.linalg.eigh(Heff)
        k, _ = _select(vals, vecs, lambda v: v[L] ** 2, params.omega)
        xp = vecs[:, k]
        # Rayleigh quotient: second-order accurate and free of the
        # eps * ||Heff|| floor of the eigenvalue itself
        new = float(xp @ Heff @ xp / (xp @ xp))
        done = abs(new - xi) <= 1e-18 + 4e-16 * abs(new)
        xi = new
        if done:
            break
    G = xi * np.eye(n) - Hqq
    xq = np.linalg.solve(G, Hpq.T @ xp)
    norm = np.sqrt(xp @ xp + xq @ xq)
    xp, xq = xp / norm, xq / norm
    if (xp[L] < 0) == (j == 1):
        xp, xq = -xp, -xq
    a = c * xp - s * xq
    b = s * xp + c * xq
    Z = np.zeros((n, 4))
    even = ls % 2 == 0
    Z[even, 0], Z[even, 1] = a[even], b[even]
    Z[~even, 2], Z[~even, 3] = a[~even], b[~even]
    # overlap with the free l = 0, +-1 content
    overlap = float(xp[L - 1] ** 2 + xp[L] ** 2 + xp[L + 1] ** 2)
    return xi, q40, Z, overlap


def _dense_solve(q1: float, j: int, params: ChiralParams):
    sysm = build_truncated_system(q1, j, params)
    sec = sysm.sector
    A = -sysm.T[np.ix_(sec, sec)]
    vals, vecs = np.linalg.eigh(A)
    q40 = float(np.hypot(1.0, q1))
    L = params.l_max
    q = (-1) ** j * q1
    f = np.array([q40 + 1.0, -q])
    f /= np.linalg.norm(f)
    p0 = list(sec).index(4 * L)
    k, _ = _select(vals - q40, vecs, lambda v: float(f @ v[p0:p0 + 2]) ** 2, params.omega)
    v = vecs[:, k]
    if (f @ v[p0:p0 + 2] < 0) == (j == 1):
        v = -v
    Z = np.zeros((2 * L + 1, 4))
    Z.reshape(-1)[sec] = v
    ls = sysm.harmonics
    fr = np.zeros(2 * L + 1)
    for i, l in enumerate(ls):
        if abs(l) <= 1:
            # overlap with the free positive-energy state of each block
            p = q if l % 2 == 0 else params.omega - q
            e = np.hypot(1.0, p)
            g = np.array([e + 1.0, p]) / np.sqrt(2 * e * (e + 1))
            comp = Z[i, :2] if l % 2 == 0 else Z[i, 2:]
            fr[i] = (g @ comp) ** 2
    return float(vals[k] - q40), q40, Z, float(fr.sum())


EDGE_TOL = 1e-8


def solve_branch(q1: float, j: int, params: ChiralParams = DEFAULT_PARAMS, method: str = "schur",
                 edge_tol: float = EDGE_TOL) -> DispersionBranch:
    """Physical dispersion branch j at quasimomentum q1.

    The evolution equations depend on |q1| only; the sign is kept as a label
    of the travelling direction.  ``edge_tol`` bounds the squared weight of
    the outermost harmonics before the truncation is declared too short.
    """
    if j not in (1, 2):
        raise ValueError("j must be 1 or 2")
    qa = abs(float(q1))
    if method == "schur":
        xi, q40, Z, overlap = _schur_solve(qa, j, params)
    elif method == "dense":
        xi, q40, Z, overlap = _dense_solve(qa, j, params)
    else:
        raise ValueError(f"unknown method {method!r}")
    edge = float(np.sum(Z[0] ** 2) + np.sum(Z[-1] ** 2))
    if edge > edge_tol:
        raise TruncationError(f"edge harmonic weight {edge:.2e} exceeds {edge_tol:.1e}; increase g_max")
    coeffs = StructuralCoefficients({j: Z}, params.l_max)
    res = ode_residual(coeffs, j, qa, q40 + xi, params)
    return DispersionBranch(float(q1), j, xi, q40 + xi, coeffs, overlap, res, params, method)


def solve_dispersion(q1: float, params: ChiralParams = DEFAULT_PARAMS, method: str = "schur",
                     edge_tol: float = EDGE_TOL):
    """Both branches (j = 1, 2) at q1."""
    return (solve_branch(q1, 1, params, method, edge_tol),
            solve_branch(q1, 2, params, method, edge_tol))


# ---------------------------------------------------------------------------
# Validators


def _spectral_residual(Zt: np.ndarray, j: int, q1: float, q4: float, params: ChiralParams) -> np.ndarray:
    """Fourier coefficients of Omega Z' - i M Z on l = -L-1..L+1."""
    L = (Zt.shape[0] - 1) // 2
    pad = np.zeros((Zt.shape[0] + 4, 4), dtype=complex)
    pad[2:-2] = Zt
    ls = np.arange(-L - 2, L + 3)
    ev = build_evolution(q1, q4, j, params.omega, params.a_m)
    kappa = (-1) ** j * 2.0 * params.a_m
    r = 1j * params.omega * ls[:, None] * pad - 1j * pad @ ev.N.T
    r[1:-1] += 1j * kappa * (pad[:-2] + pad[2:]) @ ALPHA1.T
    return r[1:-1]


def ode_residual(Z: StructuralCoefficients, j: int, q1: float, q4: float,
                 params: ChiralParams = DEFAULT_PARAMS, return_drift: bool = False):
    """L2 norm (mean over one period) of Omega dZ/dphi4 - i M_j Z.

    With ``return_drift`` also returns max |d(Z^T Z)/dphi4| on 256 samples.
    """
    Zt = Z.tables[j]
    r = _spectral_residual(Zt, j, q1, q4, params)
    res = float(np.sqrt(np.sum(np.abs(r) ** 2)))
    if not return_drift:
        return res
    ls = Z.harmonics
    phi = 2 * np.pi * np.arange(256) / 256
    E = np.exp(1j * np.outer(phi, ls))
    z = E @ Zt
    dz = E @ (1j * ls[:, None] * Zt)
    drift = float(np.max(np.abs(2 * np.real(np.sum(z.conj() * dz, axis=1)))))
    return res, drift


@dataclass(frozen=True)
class RecurrenceResult:
    table: np.ndarray
    l_max: int
    central_residual: float


def _evolution_ext(q1: float, xi: float, j: int, params: ChiralParams, dtype):
    """N in ``dtype`` with q4 = sqrt(1 + q1^2) + xi formed at that precision."""
    one = dtype(1)
    q1e = dtype(abs(float(q1)))
    q4 = np.sqrt(one + q1e * q1e) + dtype(xi)
    q = (-1) ** j * q1e
    om = dtype(params.omega)
    N = np.array([
        [q4 - one, -q, 0, 0],
        [-q, q4 + one, 0, 0],
        [0, 0, q4 - one, q - om],
        [0, 0, q - om, q4 + one],
    ], dtype=dtype)
    return N


def seeds_from_starting_coefficients(x0, y1, j: int, q1: float, xi: float,
                                     params: ChiralParams = DEFAULT_PARAMS, dtype=np.longdouble):
    """Complete (Z_0, Z_1, Z_-1) from the four starting coefficients.

    ``x0`` holds the two l = 0 amplitudes (x_{120}, x_{140} for j = 1) and
    ``y1`` the two odd differences (y_{111}, y_{131}); the sums Z_1 + Z_-1
    follow from the central equation.  Arrays come back in ``dtype``.
    """
    if params.a_m == 0:
        raise ValueError("recurrences need a_m > 0")
    N = _evolution_ext(q1, xi, j, params, dtype)
    Z0 = np.array([x0[0], x0[1], 0, 0], dtype=dtype)
    S = (-1) ** j / (2 * dtype(params.a_m)) * (N @ Z0)[::-1]
    D = np.array([0, 0, y1[0], y1[1]], dtype=dtype)
    return Z0, (S + D) / 2, (S - D) / 2


def recurrence_extend(Z0, Z1, Zm1, j: int, q1: float, xi: float, l_max: int,
                      params: ChiralParams = DEFAULT_PARAMS, growth_check: bool = True,
                      dtype=np.longdouble) -> RecurrenceResult:
    """Run the three-term recurrence outward from l = 0, +-1 up to |l| = l_max.

    The outward direction amplifies any admixture of the growing solution, so
    the arithmetic runs in ``dtype`` (extended precision by default) with the
    spectral parameter xi kept separate from sqrt(1 + q1^2).  Raises
    RecurrenceInstability when |Z_l| starts growing with |l|.
    """
    if params.a_m == 0:
        raise ValueError("recurrences need a_m > 0")
    N = _evolution_ext(q1, xi, j, params, dtype)
    g = (-1) ** j / (2 * dtype(params.a_m))
    om = dtype(params.omega)
    I = np.eye(4, dtype=dtype)
    Z = {0: np.asarray(Z0, dtype), 1: np.asarray(Z1, dtype), -1: np.asarray(Zm1, dtype)}
    for l in range(1, l_max):
        Z[l + 1] = -Z[l - 1] + g * ((N - l * om * I) @ Z[l])[::-1]
        Z[-l - 1] = -Z[-l + 1] + g * ((N + l * om * I) @ Z[-l])[::-1]
    if growth_check:
        for sgn in (1, -1):
            for l in range(2, l_max + 1):
                if np.linalg.norm(Z[sgn * l].astype(float)) > np.linalg.norm(Z[sgn * (l - 1)].astype(float)) > 0:
                    raise RecurrenceInstability(f"|Z_l| grows at l = {sgn * l}")
    central = N @ Z[0] - (-1) ** j * 2 * dtype(params.a_m) * (Z[1] + Z[-1])[::-1]
    table = np.array([Z[l] for l in range(-l_max, l_max + 1)]).astype(float)
    return RecurrenceResult(table, l_max, float(np.linalg.norm(central.astype(float))))
