"""JSON round-trip of dispersion branches and a content-addressed solution cache."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .chiral_core import (
    DEFAULT_PARAMS,
    EDGE_TOL,
    ChiralParams,
    DispersionBranch,
    StructuralCoefficients,
    TruncationError,
    solve_branch,
)

__all__ = [
    "CACHE_ENV",
    "branch_to_dict",
    "branch_from_dict",
    "dump_branches",
    "load_branches",
    "SolutionCache",
    "solve_cached",
]

CACHE_ENV = "ESTC_CACHE_DIR"


def branch_to_dict(b: DispersionBranch) -> dict:
    # json writes floats with repr, which round-trips binary64 exactly
    return {
        "q1": b.q1,
        "j": b.j,
        "xi": b.xi,
        "q4": b.q4,
        "overlap": b.overlap,
        "residual": b.residual,
        "method": b.method,
        "params": {"omega": b.params.omega, "a_m": b.params.a_m, "g_max": b.params.g_max},
        "table": b.table.tolist(),
    }


def branch_from_dict(d: dict) -> DispersionBranch:
    params = ChiralParams(**d["params"])
    table = np.array(d["table"], dtype=float)
    if table.shape != (2 * params.l_max + 1, 4):
        raise ValueError(f"table shape {table.shape} does not match g_max = {params.g_max}")
    Z = StructuralCoefficients({int(d["j"]): table}, params.l_max)
    return DispersionBranch(float(d["q1"]), int(d["j"]), float(d["xi"]), float(d["q4"]), Z,
                            float(d["overlap"]), float(d["residual"]), params, d.get("method", "schur"))


def dump_branches(branches, path) -> None:
    Path(path).write_text(json.dumps([branch_to_dict(b) for b in branches], indent=1))


def load_branches(path) -> list[DispersionBranch]:
    return [branch_from_dict(d) for d in json.loads(Path(path).read_text())]


class SolutionCache:
    """Branches stored under a hash of (Omega, A_m, g_max, q1, j, method)."""

    def __init__(self, root):
        self.root = Path(root)

    @classmethod
    def from_env(cls, default=None):
        root = os.environ.get(CACHE_ENV) or default
        return cls(root) if root else None

    @staticmethod
    def key(params: ChiralParams, q1: float, j: int, method: str = "schur") -> str:
        ident = [float(params.omega).hex(), float(params.a_m).hex(), int(params.g_max),
                 float(q1).hex(), int(j), method]
        return hashlib.sha256(json.dumps(ident).encode()).hexdigest()

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def get(self, params: ChiralParams, q1: float, j: int, method: str = "schur"):
        path = self._path(self.key(params, q1, j, method))
        try:
            d = json.loads(path.read_text())
        except (OSError, ValueError):
            return None
        b = branch_from_dict(d)
        if b.params != params or b.q1 != float(q1) or b.j != j or b.method != method:
            return None
        return b

    def put(self, b: DispersionBranch) -> None:
        path = self._path(self.key(b.params, b.q1, b.j, b.method))
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        with os.fdopen(fd, "w") as fh:
            json.dump(branch_to_dict(b), fh)
        os.replace(tmp, path)


def solve_cached(q1: float, params: ChiralParams = DEFAULT_PARAMS, cache: SolutionCache | None = None,
                 method: str = "schur", edge_tol: float = EDGE_TOL):
    """(branch 1, branch 2) at q1, read from or written to ``cache``."""
    out = []
    for j in (1, 2):
        b = cache.get(params, q1, j, method) if cache is not None else None
        if b is None:
            b = solve_branch(q1, j, params, method, edge_tol)
            if cache is not None:
                cache.put(b)
        else:
            edge = float(np.sum(b.table[0] ** 2) + np.sum(b.table[-1] ** 2))
            if edge > edge_tol:
                raise TruncationError(f"edge harmonic weight {edge:.2e} exceeds {edge_tol:.1e}; increase g_max")
        out.append(b)
    return tuple(out)
