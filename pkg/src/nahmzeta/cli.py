"""Command-line front end for the Nahm background and its one-loop zeta function.

Every command builds a :class:`RunConfig`, runs one route family and emits
a report with a top-level ``"schema": 1`` field.  Exit status is ``0`` iff
all checks of the command pass.  Defaults can be supplied as a JSON file
through ``--config`` or the ``NAHM_ZETA_CONFIG`` environment variable;
command-line flags win over the file.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import classical, hermite, riemann, spectral, zeta
from .classical import NahmParams
from .quadrature import QuadratureSpec

SCHEMA = 1
COMMANDS = ("verify-classical", "solve-hermite", "band-structure", "zeta", "mass", "theta-check")
ROUTES = ("hyperelliptic", "spectral", "both")


@dataclass
class RunConfig:
    """Validated settings shared by all commands.

    ``tol`` is the pass threshold of the command's main check; ``None``
    selects the command default.  ``theta_n`` is the truncation radius of
    the genus-2 theta series (``None`` picks it from the tail bound).
    """

    b: float = 1.0
    hbar: float = 1.0
    d: int = 1
    route: str = "both"
    s: list = field(default_factory=lambda: [1.5, 2.0, 3.0])
    tol: float | None = None
    panels: int = 4
    fourier_n: int = 64
    theta_n: int | None = None
    out: str | None = None
    format: str = "json"
    free: bool = False
    b_sweep: list | None = None
    mutate: str | None = None
    plot_dir: str | None = None

    def __post_init__(self):
        self.params  # validates b, hbar, d
        if self.route not in ROUTES:
            raise ValueError(f"route must be one of {ROUTES}")
        if self.format not in ("json", "csv"):
            raise ValueError("format must be 'json' or 'csv'")
        if self.panels < 1 or self.fourier_n < 16:
            raise ValueError("panels >= 1 and fourier_n >= 16 required")
        if self.theta_n is not None and self.theta_n < 1:
            raise ValueError("theta_n >= 1 required")
        if self.tol is not None and not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.mutate not in (None, "P1", "P2"):
            raise ValueError("mutate must be P1 or P2")
        self.s = [float(v) for v in self.s]
        if self.b_sweep is not None:
            self.b_sweep = [float(v) for v in self.b_sweep]
            if any(not v > 0 for v in self.b_sweep):
                raise ValueError("b-sweep values must be positive")

    @property
    def params(self) -> NahmParams:
        return NahmParams(b=self.b, hbar=self.hbar, d=self.d, coupling=0.0 if self.free else 1.0)

    @property
    def quad(self) -> QuadratureSpec:
        return QuadratureSpec(panels=self.panels)

    def tol_or(self, default: float) -> float:
        return default if self.tol is None else self.tol

    def to_dict(self) -> dict:
        return asdict(self)


# -- output ------------------------------------------------------------------------

def _plain(obj):
    """Convert numpy scalars, complex numbers and tuples to JSON-friendly values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k in sorted(obj):
            yield from _flatten(obj[k], f"{prefix}.{k}" if prefix else k)
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj


def render(report: dict, fmt: str) -> str:
    """Serialize a report; both formats print floats with ``repr``."""
    plain = _plain(report)
    if fmt == "json":
        return json.dumps(plain, sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for k, v in _flatten(plain):
        w.writerow([k, repr(v) if isinstance(v, float) else json.dumps(v)])
    return buf.getvalue()


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def _check(name, value, tol):
    value = float(value)
    return {"name": name, "value": value, "tol": tol, "pass": bool(value < tol)}


def _report(command, cfg, checks, results):
    return {
        "schema": SCHEMA,
        "command": command,
        "config": cfg.to_dict(),
        "checks": checks,
        "pass": all(c["pass"] for c in checks),
        "failed": [c["name"] for c in checks if not c["pass"]],
        "results": results,
    }


# -- commands ----------------------------------------------------------------------

def cmd_verify_classical(cfg: RunConfig) -> dict:
    """Matrix constraint, first integral, Lagrangian and lemniscate round trip."""
    tol = cfg.tol_or(1e-10)
    P = cfg.params
    L = classical.period(P)
    xs = np.linspace(0.0, L, 17)[1:-1]
    first = max(max(classical.first_integral_residual(float(x), P)) for x in xs) / P.b ** 4
    lag = max(abs(np.subtract(*classical.lagrangian_density(float(x), P))) for x in xs)
    # measured in field space: x(phi) is ill-conditioned where phi' = 0
    roundtrip = 0.0
    for x in xs:
        f = classical.field(float(x), P)
        back = classical.invert_lemniscate(f.phi, P, dphi=f.dphi)
        roundtrip = max(roundtrip, abs(classical.field(back, P).phi - f.phi) / P.b)
    constraint = [str(classical.check_matrix_constraint(s)) for s in ("0", "1/2", "1")]
    checks = [
        {"name": "matrix_constraint", "value": constraint, "tol": 0,
         "pass": constraint == ["0", "0", "6"]},
        _check("first_integral", first, tol),
        _check("lagrangian_matrix_vs_closed", lag / P.b ** 4, tol),
        _check("lemniscate_roundtrip", roundtrip, tol),
    ]
    table = [{"x": float(x), "u": float(classical.potential(float(x), P)),
              "first_integral": float(classical.first_integral_residual(float(x), P)[0]),
              "second_order": float(classical.first_integral_residual(float(x), P)[1])}
             for x in xs]
    return _report("verify-classical", cfg, checks, {"period": L, "residuals": table})


def cmd_solve_hermite(cfg: RunConfig) -> dict:
    """Exact ansatz, exact roots and the comparison with the published values."""
    sol = hermite.nahm_solution(0.0 if cfg.free else 1.0)
    if cfg.mutate:
        sol = hermite.perturb(sol, cfg.mutate)
    b = cfg.b
    exact = not sol.residual_identity()
    rng = np.random.default_rng(0)
    pts = [(complex(rng.uniform(0.5, 4.0), rng.uniform(0.1, 2.0)) * b * b,
            float(rng.uniform(0.0, classical.period(cfg.params)))) for _ in range(20)]
    bil = max(abs(hermite.bilinear_residual(p, x, cfg.params, sol)) for p, x in pts)
    mism = hermite.compare_solutions(sol) if not cfg.free else []
    results = {
        "P": [repr(P) for P in sol.P],
        "q": {f"q{sol.degree * 2 - i}": repr(c) for i, c in enumerate(sol.q)},
        "published_mismatch": mism,
        "matches_published": not mism,
        "bilinear_residual_max": bil,
    }
    try:
        roots = hermite.quintic_roots(sol)
        results["roots_exact"] = [repr(r) for r in roots.roots]
        results["roots"] = roots.values(b).tolist()
    except ValueError as exc:
        results["roots_error"] = str(exc)
    checks = [
        {"name": "identity_exact", "value": exact, "tol": 0, "pass": exact},
        _check("bilinear_residual", bil, cfg.tol_or(1e-9)),
    ]
    return _report("solve-hermite", cfg, checks, results)


def cmd_band_structure(cfg: RunConfig) -> dict:
    """Hill's method edges against the exact branch points."""
    P = cfg.params
    bs = spectral.hill_band_edges(P, N=cfg.fourier_n)
    exact = zeta.band_edges(P)
    results = {"hill": bs.to_json(), "exact": [float(e) for e in exact]}
    checks = []
    if len(bs.edges) == len(exact):
        diff = float(np.max(np.abs(np.array(bs.edges) - exact))) / max(1.0, P.b ** 2)
        checks.append(_check("edges_vs_exact", diff, cfg.tol_or(1e-8)))
    else:
        checks.append({"name": "edge_count", "value": len(bs.edges), "tol": len(exact),
                       "pass": False})
    if cfg.plot_dir:
        th = np.linspace(0.0, math.pi, 65)
        ev = spectral.band_functions(th, P, cfg.fourier_n)[:, :6]
        _write_csv(Path(cfg.plot_dir) / "band_functions.csv",
                   ["theta"] + [f"band{j}" for j in range(ev.shape[1])],
                   [[t, *row] for t, row in zip(th, ev)])
    return _report("band-structure", cfg, checks, results)


def _zeta_rows(cfg, P):
    rows, checks = [], []
    for s in cfg.s:
        row = {"s": s}
        if cfg.route in ("hyperelliptic", "both"):
            row["hyperelliptic"] = zeta.zeta_s(s, P, quad=cfg.quad).to_json()
        spectral_ok = cfg.d == 1
        if cfg.route in ("spectral", "both"):
            if spectral_ok:
                row["spectral"] = spectral.zeta_oracle(s, P, N=cfg.fourier_n).to_json()
            else:
                row["spectral_skipped"] = "the band-function oracle covers d = 1 only"
        if cfg.route == "both" and spectral_ok:
            a = zeta.zeta_s(s, P, quad=cfg.quad)
            o = spectral.zeta_oracle(s, P, N=cfg.fourier_n)
            rel = zeta.cross_route_difference(a, o)
            row["relative_difference"] = rel
            checks.append(_check(f"cross_route_s={s!r}", rel, cfg.tol_or(1e-3)))
        rows.append(row)
    return rows, checks


def _scaling_fit(cfg):
    """Fit ``zeta'(0; b) = b (alpha - 2 ln b beta)`` over the sweep and predict ``b = 4``."""
    bs = cfg.b_sweep
    vals = [zeta.zeta_prime_zero(NahmParams(b=b, d=cfg.d), cfg.quad).value for b in bs]
    A = np.array([[b, -2.0 * b * math.log(b)] for b in bs], dtype=complex)
    (alpha, beta), *_ = np.linalg.lstsq(A, np.array(vals), rcond=None)
    pred = 4.0 * (alpha - 2.0 * math.log(4.0) * beta)
    direct = zeta.zeta_prime_zero(NahmParams(b=4.0, d=cfg.d), cfg.quad).value
    rel = abs(pred - direct) / abs(direct)
    return {"b": bs, "zeta_prime": vals, "alpha": alpha, "beta": beta,
            "predicted_b4": pred, "direct_b4": direct, "relative_error": rel}


def cmd_zeta(cfg: RunConfig) -> dict:
    """Zeta values per route, cross-route differences, zeta'(0) and Delta S."""
    P = cfg.params
    rows, checks = _zeta_rows(cfg, P)
    zp = zeta.zeta_prime_zero(P, cfg.quad)
    ds = zeta.mass_correction(P, cfg.quad)
    results = {"zeta": rows, "zeta_prime_zero": zp.to_json(), "delta_S": ds.to_json()}
    if cfg.free:
        worst = max([abs(complex(zp.value))] + [
            math.hypot(r[k]["value_re"], r[k]["value_im"])
            for r in rows for k in ("hyperelliptic", "spectral") if k in r])
        checks.append(_check("free_is_zero", worst, 1e-10))
    if cfg.b_sweep:
        fit = _scaling_fit(cfg)
        results["scaling"] = fit
        checks.append(_check("scaling_fit_b4", fit["relative_error"], 1e-5))
    if cfg.plot_dir:
        d = Path(cfg.plot_dir)
        s_grid = np.linspace(0.6, 4.0, 35)
        _write_csv(d / "zeta_s.csv", ["s", "re", "im"],
                   [[s, v.real, v.imag] for s in s_grid for v in [zeta.zeta_s(s, P, quad=cfg.quad).value]])
        # cell midpoints never land on a band edge, where the density diverges
        lam = (np.arange(240) + 0.5) / 20.0 - 4.0
        lam = lam * P.b ** 2
        rho = zeta.spectral_density(lam, P)
        _write_csv(d / "density.csv", ["lambda", "rho"], zip(lam, np.real(rho)))
        ts = np.geomspace(1e-3, 2.0, 40)
        _write_csv(d / "heat_trace.csv", ["t", "gamma"],
                   [[t, spectral.heat_trace(t, P, N=cfg.fourier_n)] for t in ts])
    return _report("zeta", cfg, checks, results)


def cmd_mass(cfg: RunConfig) -> dict:
    """One-loop correction with its error estimate and a panel-doubling check."""
    P = cfg.params
    ds = zeta.mass_correction(P, cfg.quad)
    ds2 = zeta.mass_correction(P, cfg.quad.refined())
    scale = max(abs(ds.value), 1e-300)
    rel = abs(ds.value - ds2.value) / scale if ds.value else abs(ds2.value)
    checks = [_check("panel_doubling", rel, cfg.tol_or(1e-4))]
    return _report("mass", cfg, checks, {"delta_S": ds.to_json(), "delta_S_refined": ds2.to_json()})


def cmd_theta(cfg: RunConfig) -> dict:
    """Period matrix, potential recovery, theta truncation and Its-Matveev residuals."""
    curve = riemann.HyperellipticCurve(riemann.lame_curve().points, 3.0 * cfg.b ** 2)
    rec = riemann.recover_U_D(curve, quad=cfg.quad)
    pm = rec.tau
    z = np.array([0.1 + 0.2j, -0.3 + 0.1j])
    th = riemann.theta_g2(riemann.ThetaArgs(z, pm, cfg.theta_n, tol=1e-12), full=True)
    hill = spectral.hill_band_edges(NahmParams(), N=cfg.fourier_n)
    per = np.array(hill.periodic)
    L = classical.period(NahmParams())
    edges = []
    worst = 0.0
    floquet_ok = True
    for h in riemann.lame_curve().lam_points:
        P = riemann.CurvePoint(float(h))
        res = max(riemann.im_psi_residual(P), riemann.im_psi_residual(P.involution()))
        y = np.array([0.3, 0.3 + L])
        psi = riemann.im_psi(y, P)
        mult = (psi[1] / psi[0]).real
        expected = 1.0 if np.min(np.abs(per - h)) < 1e-6 else -1.0
        floquet_ok &= abs(mult - expected) < 1e-4
        worst = max(worst, res)
        edges.append({"h": float(h), "residual": res, "multiplier": mult, "expected": expected})
    checks = [
        _check("tau_symmetry", pm.symmetry_error(), 1e-10),
        {"name": "tau_positive", "value": pm.min_imag_eig(), "tol": 0.0,
         "pass": pm.min_imag_eig() > 0},
        _check("recovery_mismatch", rec.mismatch, cfg.tol_or(1e-5)),
        _check("period_vs_2K", abs(rec.period - classical.period(cfg.params)), 1e-6),
        _check("theta_tail", th.tail, 1e-12),
        _check("im_psi_edge_residual", worst, 1e-4),
        {"name": "floquet_vs_hill", "value": floquet_ok, "tol": 0, "pass": bool(floquet_ok)},
    ]
    results = {"recovery": rec.to_json(), "theta_sample": {"N": th.N, "tail": th.tail,
                                                          "value": th.value}, "edges": edges}
    if cfg.plot_dir:
        y = np.linspace(0.0, classical.period(cfg.params), 129)
        u = riemann.im_potential(rec.U, rec.D, y, pm.tau) - rec.c_star
        lame = classical.potential(y, cfg.params)
        _write_csv(Path(cfg.plot_dir) / "theta_potential.csv", ["y", "recovered", "lame"],
                   zip(y, u, lame))
    return _report("theta-check", cfg, checks, results)


HANDLERS = {
    "verify-classical": cmd_verify_classical,
    "solve-hermite": cmd_solve_hermite,
    "band-structure": cmd_band_structure,
    "zeta": cmd_zeta,
    "mass": cmd_mass,
    "theta-check": cmd_theta,
}


# -- argument handling --------------------------------------------------------------

def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nahm-zeta", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON file with defaults (else $NAHM_ZETA_CONFIG)")
    ap.add_argument("--b", type=float, help="scale b > 0 (default 1)")
    ap.add_argument("--hbar", type=float, help="hbar > 0 in the mass correction (default 1)")
    ap.add_argument("--d", type=int, help="dimension d >= 1; d - 1 flat transverse directions (default 1)")
    ap.add_argument("--route", choices=ROUTES, help="zeta routes to run (default both)")
    ap.add_argument("--s", type=_floats, help="comma-separated s values")
    ap.add_argument("--tol", type=float, help="pass threshold of the main check")
    ap.add_argument("--panels", type=int, help="quadrature panels per band (default 4)")
    ap.add_argument("--fourier-n", type=int, dest="fourier_n", help="Hill truncation (default 64)")
    ap.add_argument("--theta-n", type=int, dest="theta_n", help="theta series radius (default: from tail bound)")
    ap.add_argument("--out", help="write the report here instead of stdout")
    ap.add_argument("--format", choices=("json", "csv"), help="report format (default json)")
    ap.add_argument("--free", action="store_true", default=None, help="zero potential")
    ap.add_argument("--b-sweep", type=_floats, dest="b_sweep", help="b values for the zeta'(0) scaling fit")
    ap.add_argument("--mutate", choices=("P1", "P2"), help="negative-control perturbation")
    ap.add_argument("--plot-dir", dest="plot_dir", help="directory for plot-data CSV files")
    return ap


def load_config(args: argparse.Namespace, environ=os.environ) -> RunConfig:
    """Merge the config file (flag or environment) with command-line overrides."""
    base = {}
    path = args.config or environ.get("NAHM_ZETA_CONFIG")
    if path:
        with open(path) as fh:
            base = json.load(fh)
        known = {f.name for f in fields(RunConfig)}
        unknown = set(base) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            base[f.name] = v
    return RunConfig(**base)


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args)
    except (ValueError, TypeError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    report = HANDLERS[args.command](cfg)
    text = render(report, cfg.format)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    if not report["pass"]:
        print(f"FAIL: {', '.join(report['failed'])}", file=sys.stderr)
    return 0 if report["pass"] else 1


if __name__ == "__main__":
    raise SystemExit(main())
