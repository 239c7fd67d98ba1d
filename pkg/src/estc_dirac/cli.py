"""Command-line sweeps: dispersion, coeffs, observables, precession, fields, check.

Settings come from built-in defaults, then an optional ``key = value`` file
(``--config``), then command-line flags.  Every table starts with the
effective configuration as '#' comment lines; numbers are written as the
shortest decimal string that round-trips the binary64 value.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__
from .chiral_core import EDGE_TOL, ChiralParams
from .observables import observables_at, sigma10
from .store import CACHE_ENV, SolutionCache, solve_cached
from .superposition import MODES, SuperpositionSpec, bi_fields, default_grid, direct_fields, precession_params, uni_fields
from .validation import run_checks

__all__ = ["RunConfig", "parse_config_file", "build_parser", "main", "COMMANDS"]

COMMANDS = ("dispersion", "coeffs", "observables", "precession", "fields", "check")


@dataclass(frozen=True)
class RunConfig:
    omega: float = 0.01
    am: float = math.sqrt(2.0) / 200.0
    gmax: int = 12
    q1_grid: tuple = (None, -10, 15)  # (base, m_min, m_max); base None means Omega
    q1: tuple | None = None  # explicit values override the grid
    format: str = "csv"
    out: str | None = None
    jobs: int = 1
    cache_dir: str | None = None
    edge_tol: float = EDGE_TOL
    method: str = "schur"
    mode: str = "bi2"
    qm: float = 1.0
    alpha: float = math.pi / 4
    delta: float = 0.0
    grid: int = 64
    field_method: str = "closed"
    seed: int = 0

    # settings that change how, not what, is computed stay out of the header
    _EXECUTION = ("out", "jobs", "cache_dir")

    def validate(self) -> None:
        if self.gmax < 4 or self.gmax % 2:
            raise ValueError("gmax must be even and >= 4")
        if self.am < 0:
            raise ValueError("am must be >= 0")
        if not self.omega > 0:
            raise ValueError("omega must be > 0")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        if self.format not in ("csv", "json"):
            raise ValueError("format must be csv or json")
        if not self.grid_points():
            raise ValueError("q1 grid is empty")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not 0 <= self.alpha <= math.pi / 2:
            raise ValueError("alpha must lie in [0, pi/2]")
        if not 0 <= self.delta <= 2 * math.pi:
            raise ValueError("delta must lie in [0, 2 pi]")
        if self.qm < 0:
            raise ValueError("qm must be >= 0")
        if self.grid < 1:
            raise ValueError("grid must be >= 1")

    @property
    def params(self) -> ChiralParams:
        return ChiralParams(self.omega, self.am, self.gmax)

    def grid_points(self) -> list[float]:
        if self.q1 is not None:
            return [float(x) for x in self.q1]
        base, lo, hi = self.q1_grid
        base = self.omega if base is None else float(base)
        return [math.ldexp(base, m) for m in range(int(lo), int(hi) + 1)]

    def header(self, command: str) -> dict:
        out = {"program": f"estc_dirac {__version__}", "command": command}
        for f in fields(self):
            if f.name in self._EXECUTION:
                continue
            v = getattr(self, f.name)
            if f.name == "q1_grid":
                base = self.omega if v[0] is None else v[0]
                v = (float(base), int(v[1]), int(v[2]))
            out[f.name] = v
        return out


# ---------------------------------------------------------------------------
# config parsing


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _grid_spec(text: str) -> tuple:
    parts = text.replace(",", " ").split()
    if len(parts) != 3:
        raise ValueError("q1 grid needs base, m_min, m_max")
    base = None if parts[0].lower() in ("omega", "none") else float(parts[0])
    return base, int(parts[1]), int(parts[2])


_CONVERT = {
    "omega": float, "am": float, "gmax": int, "q1_grid": _grid_spec, "q1": _floats,
    "format": str, "out": str, "jobs": int, "cache_dir": str, "edge_tol": float, "method": str,
    "mode": str, "qm": float, "alpha": float, "delta": float, "grid": int, "field_method": str, "seed": int,
}


def parse_config_file(path) -> dict:
    """Flat ``key = value`` lines; '#' starts a comment; keys as the long flags."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in _CONVERT:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _CONVERT[key](value)
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="estc", description="Dirac electron in a chiral electromagnetic space-time crystal")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="key = value settings file")
    p.add_argument("--omega", type=float)
    p.add_argument("--am", type=float, help="field amplitude A_m")
    p.add_argument("--gmax", type=int, help="harmonic truncation order")
    p.add_argument("--q1-grid", dest="q1_grid", type=_grid_spec, metavar="BASE,MMIN,MMAX",
                   help="q1 = BASE * 2**m for integer m in [MMIN, MMAX]; BASE may be 'omega'")
    p.add_argument("--q1", type=_floats, metavar="Q[,Q...]", help="explicit q1 values (override the grid)")
    p.add_argument("--qm", type=float, help="2|q1|/Omega for the fields command")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--alpha", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--grid", type=int, help="samples per axis for the fields command")
    p.add_argument("--field-method", dest="field_method", choices=("closed", "direct"))
    p.add_argument("--method", choices=("schur", "dense"))
    p.add_argument("--edge-tol", dest="edge_tol", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--out")
    p.add_argument("--jobs", type=int)
    p.add_argument("--cache-dir", dest="cache_dir", help=f"solution cache (default: ${CACHE_ENV})")
    return p


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = parse_config_file(args.config) if args.config else {}
    for name in _CONVERT:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    cfg = replace(RunConfig(), **values)
    if cfg.cache_dir is None:
        cache = SolutionCache.from_env()
        if cache is not None:
            cfg = replace(cfg, cache_dir=str(cache.root))
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# per-point rows (module level so worker processes can import them)


@dataclass(frozen=True)
class _Ctx:
    params: ChiralParams
    cache_dir: str | None
    method: str
    edge_tol: float

    def branches(self, q1):
        cache = SolutionCache(self.cache_dir) if self.cache_dir else None
        return solve_cached(q1, self.params, cache, self.method, self.edge_tol)


def _guard(columns):
    def wrap(fn):
        def run(q1, ctx):
            try:
                row = fn(q1, ctx)
                row.setdefault("status", "ok")
            except Exception as exc:  # recorded per point, reflected in the exit code
                row = {c: math.nan for c in columns}
                row["q1"] = float(q1)
                row["status"] = f"error: {type(exc).__name__}: {exc}"
            return row

        run.columns = columns
        run.__name__ = fn.__name__
        return run

    return wrap


DISPERSION_COLUMNS = ("q1", "xi1", "xi2", "dxi", "residual1", "residual2", "status")


def _dispersion_row(q1, ctx):
    b1, b2 = ctx.branches(q1)
    row = {"q1": float(q1), "xi1": b1.xi, "xi2": b2.xi, "dxi": b2.xi - b1.xi,
           "residual1": b1.residual, "residual2": b2.residual}
    if row["dxi"] < 0:
        # the splitting has fallen below what binary64 resolves at this q1
        row["status"] = "unresolved: xi2 < xi1"
    return row


COEFF_COLUMNS = ("q1", "x210", "x230", "x210+x120", "x230-x140", "y111", "y131",
                 "y221-y111", "y241+y131", "status")


def _coeffs_row(q1, ctx):
    b1, b2 = ctx.branches(q1)
    Z = b1.Z.merged(b2.Z)
    x, y = Z.x, Z.y
    return {
        "q1": float(q1),
        "x210": x(2, 1, 0),
        "x230": x(2, 3, 0),
        "x210+x120": x(2, 1, 0) + x(1, 2, 0),
        "x230-x140": x(2, 3, 0) - x(1, 4, 0),
        "y111": y(1, 1, 1),
        "y131": y(1, 3, 1),
        "y221-y111": y(2, 2, 1) - y(1, 1, 1),
        "y241+y131": y(2, 4, 1) + y(1, 3, 1),
    }


OBS_COLUMNS = ("q1", "E_plus", "E_minus", "E_plus_m1", "E_minus_m1", "J1_plus", "J1_minus",
               "P1_plus", "P1_minus", "S1_plus", "S1_minus", "dE", "dE_direct", "dxi", "sigma10", "p10", "status")


def _observables_row(q1, ctx):
    rep = observables_at(q1, ctx.params, ctx.branches(q1))
    m = rep.means
    return {
        "q1": float(q1),
        "E_plus": m["+"].E, "E_minus": m["-"].E,
        "E_plus_m1": m["+"].E_minus_one, "E_minus_m1": m["-"].E_minus_one,
        "J1_plus": m["+"].J1, "J1_minus": m["-"].J1,
        "P1_plus": m["+"].P1, "P1_minus": m["-"].P1,
        "S1_plus": m["+"].S1, "S1_minus": m["-"].S1,
        "dE": rep.splitting, "dE_direct": rep.splitting_direct, "dxi": rep.dxi,
        "sigma10": rep.sigma10, "p10": rep.p10,
    }


PREC_COLUMNS = ("q1", "Rv", "Rs", "nu_pr", "sigma10", "status")


def _precession_row(q1, ctx):
    b1, b2 = ctx.branches(q1)
    pr = precession_params(q1, ctx.params, (b1, b2))
    return {"q1": float(q1), "Rv": pr.Rv, "Rs": pr.Rs, "nu_pr": pr.nu_pr, "sigma10": sigma10(b1).value}


_ROWS = {
    "dispersion": _guard(DISPERSION_COLUMNS)(_dispersion_row),
    "coeffs": _guard(COEFF_COLUMNS)(_coeffs_row),
    "observables": _guard(OBS_COLUMNS)(_observables_row),
    "precession": _guard(PREC_COLUMNS)(_precession_row),
}


def _call_row(command, ctx, q1):
    return _ROWS[command](q1, ctx)


def sweep(command: str, cfg: RunConfig) -> tuple[tuple, list[dict]]:
    ctx = _Ctx(cfg.params, cfg.cache_dir, cfg.method, cfg.edge_tol)
    fn = partial(_call_row, command, ctx)
    grid = cfg.grid_points()
    if cfg.jobs > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(fn, grid))  # map keeps grid order
    else:
        rows = [fn(q) for q in grid]
    return _ROWS[command].columns, rows


FIELD_COLUMNS = ("X1", "X4", "v1", "v2", "v3", "s1", "s2", "s3")


def field_table(cfg: RunConfig) -> tuple[tuple, list[dict]]:
    spec = SuperpositionSpec.from_qm(cfg.mode, cfg.qm, cfg.alpha, cfg.delta, cfg.params)
    ctx = _Ctx(cfg.params, cfg.cache_dir, cfg.method, cfg.edge_tol)
    branches = ctx.branches(abs(spec.q1))
    grid = default_grid(spec, cfg.grid)
    if cfg.field_method == "direct":
        sample = direct_fields(spec, grid, branches)
    else:
        sample = (uni_fields if spec.unidirectional else bi_fields)(spec, grid, branches)
    return FIELD_COLUMNS, [dict(zip(FIELD_COLUMNS, r)) for r in sample.rows()]


CHECK_COLUMNS = ("name", "passed", "value", "tol", "count")


def check_table(cfg: RunConfig) -> tuple[tuple, list[dict]]:
    return CHECK_COLUMNS, [r.as_dict() for r in run_checks(cfg.seed, cfg.params)]


# ---------------------------------------------------------------------------
# output


def _plain(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    return v


def _cell(v) -> str:
    v = _plain(v)
    if isinstance(v, float):
        return repr(v)  # shortest round-trip form, '.' separator
    if isinstance(v, list):
        return " ".join(_cell(x) for x in v)
    return str(v)


def render(command: str, cfg: RunConfig, columns, rows) -> str:
    header = {k: _plain(v) for k, v in cfg.header(command).items()}
    if cfg.format == "json":
        doc = {"config": header, "rows": [{c: _plain(r.get(c)) for c in columns} for r in rows]}
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    for k, v in header.items():
        buf.write(f"# {k} = {_cell(v) if v is not None else 'none'}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def run(command: str, cfg: RunConfig) -> tuple[str, bool]:
    """(rendered table, success flag)."""
    if command == "fields":
        columns, rows = field_table(cfg)
        ok = True
    elif command == "check":
        columns, rows = check_table(cfg)
        ok = all(r["passed"] for r in rows)
    else:
        columns, rows = sweep(command, cfg)
        ok = all(r["status"] == "ok" for r in rows)
    return render(command, cfg, columns, rows), ok


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
    except (ValueError, OSError) as exc:
        parser.error(str(exc))
    text, ok = run(args.command, cfg)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    if not ok:
        print(f"estc {args.command}: one or more points failed", file=sys.stderr)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
