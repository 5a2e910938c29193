"""Command-line front end.

A run is described by a JSON manifest::

    {
      "problem": {"kind": "planted", "n": 20, "m": 2, "seed": 0},
      "contour": {"kind": "circle", "center": [0, 0], "radius": 1},
      "N": 64,
      "probing": {"ell": 2, "r": 2, "seed": 0},
      "method": "hankel",
      "params": {"K": 1},
      "out": "results"
    }

Scalar fields can be overridden by flags.  Exit codes: 0 success,
2 empty spectrum, 1 error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import time
import warnings
from typing import Any, Optional, Sequence

import numpy as np
import scipy.io

from . import io as cio
from .core import (EigenSolution, ProbingConfig, SingularEvaluationError, build_contour,
                   compute_quadrature_data, filter_eigenvalues_to_domain)
from .filters import filter_profile, radial_points
from .hankel import build_hankel, solve_hankel
from .loewner_multi import (InterpolationScheme, build_multipoint, default_scheme,
                            direct_resolvent_pencil, solve_multipoint)
from .loewner_single import build_single_point_pencil, default_sigma, solve_single_point
from .modal import LtiTransferSource, modal_truncate
from .moments import markov_moments, sigma_moments
from .problems import (delay_eigen_oracle, delay_reference_disk, load_matrix_problem,
                       make_delay_problem, make_planted_problem)
from .realize import RankPolicy, singular_value_report_for

METHODS = ("hankel", "loewner1", "loewnerN", "direct")
EXIT_OK, EXIT_ERROR, EXIT_EMPTY = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclasses.dataclass
class RunConfig:
    problem: dict
    contour: dict
    N: Any = 64
    probing: dict = dataclasses.field(default_factory=dict)
    method: str = "hankel"
    params: dict = dataclasses.field(default_factory=dict)
    sweep: dict = dataclasses.field(default_factory=dict)
    filter: dict = dataclasses.field(default_factory=dict)
    out: str = "."
    threads: int = 1
    base_dir: str = "."

    @classmethod
    def from_manifest(cls, path: str) -> "RunConfig":
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read manifest {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("manifest must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)} - {"base_dir"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown manifest fields: {sorted(unknown)}")
        doc.setdefault("problem", {})
        doc.setdefault("contour", {})
        cfg = cls(**doc, base_dir=os.path.dirname(os.path.abspath(path)))
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        for N in self.N_list:
            if int(N) != N or N < 2:
                raise ConfigError(f"invalid quadrature size N={N!r}")

    @property
    def N_list(self) -> list[int]:
        return list(self.N) if isinstance(self.N, (list, tuple)) else [self.N]

    def path(self, p: str) -> str:
        return p if os.path.isabs(p) else os.path.join(self.base_dir, p)


# ---------------------------------------------------------------------------
# manifest interpretation


def _cplx(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1] if len(v) > 1 else 0.0)
    if isinstance(v, str):
        return complex(v.replace(" ", "").replace("i", "j"))
    return complex(v)


def _matrix(value, cfg: RunConfig) -> np.ndarray:
    if isinstance(value, str):
        M = scipy.io.mmread(cfg.path(value))
        return np.asarray(M.toarray() if hasattr(M, "toarray") else M)
    if isinstance(value, dict):
        re = np.asarray(value.get("re", 0.0), dtype=float)
        im = np.asarray(value.get("im", np.zeros_like(re)), dtype=float)
        return re + 1j * im
    return np.asarray(value, dtype=complex)


def make_problem(cfg: RunConfig):
    spec = dict(cfg.problem)
    kind = spec.pop("kind", None)
    if kind == "planted":
        if "eigenvalues" in spec:
            spec["eigenvalues"] = [_cplx(z) for z in spec["eigenvalues"]]
        if "center" in spec:
            spec["center"] = _cplx(spec["center"])
        try:
            return make_planted_problem(**spec)
        except TypeError as exc:
            raise ConfigError(f"bad planted problem spec: {exc}") from exc
    if kind == "delay":
        return make_delay_problem(**spec)
    if kind == "matrix":
        terms = [dict(t, matrix=cfg.path(t["matrix"]) if isinstance(t.get("matrix"), str)
                      else t.get("matrix")) for t in spec.get("terms", [])]
        return load_matrix_problem(terms)
    if kind == "lti":
        A, B, C = (_matrix(spec[k], cfg) for k in ("A", "B", "C"))
        E = _matrix(spec["E"], cfg) if "E" in spec else None
        return LtiTransferSource.from_state_space(A, B, C, E)
    raise ConfigError(f"unknown problem kind {kind!r}")


def make_contour(cfg: RunConfig, N: int, problem=None):
    spec = dict(cfg.contour)
    kind = spec.pop("kind", None)
    if kind == "delay-reference":
        if problem is None or not hasattr(problem, "tau"):
            raise ConfigError("delay-reference contour needs a delay problem")
        center, radius = delay_reference_disk(problem, spec.get("m", 11), ratio=spec.get("ratio"))
        return build_contour("circle", N, center=center, radius=radius)
    if kind in ("circle", "ellipse"):
        if "center" in spec:
            spec["center"] = _cplx(spec["center"])
        return build_contour(kind, N, **spec)
    raise ConfigError(f"unknown contour kind {kind!r}")


def rank_policy(cfg: RunConfig) -> RankPolicy:
    return RankPolicy(**cfg.params.get("rank", {}))


def make_probes(cfg: RunConfig, n_out: int, n_in: Optional[int] = None) -> ProbingConfig:
    p = cfg.probing
    ell = int(p.get("ell", 1))
    return ProbingConfig.random(n_out, ell, int(p.get("r", ell)), seed=int(p.get("seed", 0)),
                                n_in=n_in)


def make_scheme(cfg: RunConfig, contour, probes, ratio: Optional[float] = None) -> InterpolationScheme:
    sch = dict(cfg.params.get("scheme", {}))
    if "theta" in sch or "sigma" in sch:
        theta = [_cplx(z) for z in sch["theta"]]
        sigma = [_cplx(z) for z in sch["sigma"]]
        lc = np.asarray(sch.get("left_coeffs", np.eye(probes.ell, len(theta))), dtype=complex)
        rc = np.asarray(sch.get("right_coeffs", np.eye(probes.r, len(sigma))), dtype=complex)
        return InterpolationScheme(theta, sigma, lc, rc)
    return default_scheme(contour, probes, int(sch.get("points", 1)), sch.get("directions"),
                          ratio if ratio is not None else sch.get("ratio", 4.0 / 3.0),
                          sch.get("hermite", cfg.method != "direct"))


def run_method(cfg: RunConfig, problem, data, contour, method: Optional[str] = None,
               sigma: Optional[complex] = None, ratio: Optional[float] = None,
               probes: Optional[ProbingConfig] = None) -> EigenSolution:
    """Solve with the configured method; ``data`` may be None for the direct pencil."""
    method = method or cfg.method
    probes = data.probes if data is not None else probes
    policy = rank_policy(cfg)
    K = int(cfg.params.get("K", 1))
    normalize = bool(cfg.params.get("normalize", True))
    if method == "hankel":
        shift, scale = (contour.center, contour.scale) if normalize else (0.0, 1.0)
        pair, one = build_hankel(markov_moments(data, 2 * K - 1, shift, scale), K)
        sol = solve_hankel(pair, one, policy, problem)
    elif method == "loewner1":
        if sigma is None:
            sigma = _cplx(cfg.params["sigma"]) if "sigma" in cfg.params else default_sigma(contour)
        scale = abs(sigma - contour.center) if normalize else 1.0
        pencil = build_single_point_pencil(sigma_moments(data, sigma, 2 * K - 1, scale), K)
        sol = solve_single_point(pencil, policy, problem)
    elif method == "loewnerN":
        sol = solve_multipoint(build_multipoint(data, make_scheme(cfg, contour, data.probes, ratio)),
                               policy, problem)
    elif method == "direct":
        sol = direct_resolvent_pencil(problem, make_scheme(cfg, contour, probes, ratio),
                                      probes).solution
    else:
        raise ConfigError(f"unknown method {method!r}")
    return filter_eigenvalues_to_domain(sol, contour, keep_all=bool(cfg.params.get("keep_all", False)))


# ---------------------------------------------------------------------------
# commands


def _outdir(cfg: RunConfig) -> str:
    out = cfg.path(cfg.out) if cfg.out else "."
    os.makedirs(out, exist_ok=True)
    return out


def _write_summary(path, **fields) -> None:
    with open(path, "w") as fh:
        json.dump({"schema": 1, **fields}, fh, indent=2)


def cmd_solve(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    problem = make_problem(cfg)
    N = cfg.N_list[0]
    contour = make_contour(cfg, N, problem)
    probes = make_probes(cfg, problem.dim)
    data = compute_quadrature_data(problem, contour, probes, threads=cfg.threads) \
        if cfg.method != "direct" else None
    sol = run_method(cfg, problem, data, contour, probes=probes)
    out = _outdir(cfg)
    cio.write_eigenvalues_csv(sol, os.path.join(out, "eigenvalues.csv"))
    cio.write_residuals_csv(sol, os.path.join(out, "residuals.csv"))
    cio.write_singular_values_csv(sol.singular_values, os.path.join(out, "singular_values.csv"),
                                  sol.rank_used)
    _write_summary(os.path.join(out, "summary.json"), command="solve", method=sol.method, N=N,
                   rank=int(sol.rank_used), count=len(sol), max_residual=sol.max_residual,
                   flags=sol.flags, dropped=sol.dropped,
                   wall_time=time.perf_counter() - t0)
    print(f"{sol.method}: {len(sol)} eigenvalues, max residual {sol.max_residual:.3e}")
    return EXIT_OK if len(sol) else EXIT_EMPTY


def cmd_sweep(cfg: RunConfig) -> int:
    """Grid over sigma (loewner1), point-circle ratio (loewnerN) or N (any method)."""
    problem = make_problem(cfg)
    probes = make_probes(cfg, problem.dim)
    sweep = cfg.sweep or ({"N": cfg.N_list} if len(cfg.N_list) > 1 else {})
    rows = []
    if "N" in sweep:
        for N in sweep["N"]:
            contour = make_contour(cfg, int(N), problem)
            data = compute_quadrature_data(problem, contour, probes, threads=cfg.threads)
            sol = run_method(cfg, problem, data, contour)
            rows.append({"N": int(N), "rank": sol.rank_used, "count": len(sol),
                         "max_residual": sol.max_residual, "status": "ok"})
    else:
        if cfg.method not in ("loewner1", "loewnerN"):
            raise ConfigError("sigma/ratio sweeps need method loewner1 or loewnerN")
        N = cfg.N_list[0]
        contour = make_contour(cfg, N, problem)
        # tensors are computed once and reused for every grid value
        data = compute_quadrature_data(problem, contour, probes, threads=cfg.threads)
        grid = [("sigma", _cplx(s)) for s in sweep.get("sigma", [])] + \
               [("ratio", float(x)) for x in sweep.get("ratio", [])]
        if not grid:
            raise ConfigError("sweep needs 'sigma', 'ratio' or 'N' values")
        for key, val in grid:
            row = {"N": N, "sigma_re": "", "sigma_im": "", "ratio": ""}
            if key == "sigma":
                row.update(sigma_re=val.real, sigma_im=val.imag)
                outside = not contour.contains(val)
            else:
                row.update(ratio=val)
                outside = val > 1.0
            if not outside:
                rows.append(dict(row, rank="", count="", max_residual="", status="skipped"))
                continue
            try:
                sol = run_method(cfg, problem, data, contour,
                                 sigma=val if key == "sigma" else None,
                                 ratio=val if key == "ratio" else None)
            except ValueError as exc:
                rows.append(dict(row, rank="", count="", max_residual="", status=f"skipped: {exc}"))
                continue
            rows.append(dict(row, rank=sol.rank_used, count=len(sol),
                             max_residual=sol.max_residual, status="ok"))
    out = _outdir(cfg)
    fields = list(dict.fromkeys(k for r in rows for k in r))
    with open(os.path.join(out, "sweep.csv"), "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.17g}" if isinstance(v, float) else v) for k, v in r.items()})
    _write_summary(os.path.join(out, "summary.json"), command="sweep", method=cfg.method,
                   rows=len(rows))
    print(f"sweep: {len(rows)} rows")
    return EXIT_OK


def cmd_filter_profile(cfg: RunConfig) -> int:
    contour = make_contour(cfg, cfg.N_list[0])
    spec = cfg.filter
    if "points" in spec:
        pts = [_cplx(z) for z in spec["points"]]
    else:
        lo, hi, count = spec.get("ray", [0.0, 2.0 * contour.scale, 201])
        pts = radial_points(contour, np.linspace(lo, hi, int(count)), spec.get("angle", 0.3))
    sigma = _cplx(spec["sigma"]) if "sigma" in spec else None
    prof = filter_profile(contour, pts, int(spec.get("k", 0)), spec.get("kind", "hankel"), sigma)
    out = _outdir(cfg)
    prof.to_csv(os.path.join(out, "filter_profile.csv"))
    print(f"filter profile: {len(prof.points)} points")
    return EXIT_OK


def cmd_modal(cfg: RunConfig) -> int:
    source = make_problem(cfg)
    if not isinstance(source, LtiTransferSource):
        raise ConfigError("modal truncation needs an 'lti' problem")
    contour = make_contour(cfg, cfg.N_list[0])
    probes = make_probes(cfg, source.n_out, source.n_in)
    rom = modal_truncate(source, contour, make_scheme(cfg, contour, probes), probes, rank_policy(cfg))
    out = _outdir(cfg)
    rom.save(os.path.join(out, "rom.json"))
    _write_summary(os.path.join(out, "summary.json"), command="modal", N=cfg.N_list[0],
                   order=rom.order, flags=rom.flags)
    print(f"modal ROM of order {rom.order}")
    return EXIT_OK if rom.order else EXIT_EMPTY


def cmd_oracle(cfg: RunConfig) -> int:
    problem = make_problem(cfg)
    if not hasattr(problem, "tau"):
        raise ConfigError("oracle is available for the delay problem only")
    contour = make_contour(cfg, cfg.N_list[0], problem)
    orc = delay_eigen_oracle(problem, contour.center, contour.scale)
    out = _outdir(cfg)
    with open(os.path.join(out, "oracle.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "re", "im", "component", "residual"])
        for j, (z, i) in enumerate(zip(orc.eigenvalues, orc.components)):
            res = abs(problem.diagonal(z)[i])
            w.writerow([j, f"{z.real:.17g}", f"{z.imag:.17g}", int(i), f"{res:.17g}"])
    _write_summary(os.path.join(out, "summary.json"), command="oracle", count=len(orc.eigenvalues),
                   center=[contour.center.real, contour.center.imag], radius=contour.scale,
                   mismatched=list(orc.mismatched))
    print(f"oracle: {len(orc.eigenvalues)} roots in the disk")
    return EXIT_OK if len(orc.eigenvalues) else EXIT_EMPTY


def cmd_svd_report(cfg: RunConfig) -> int:
    problem = make_problem(cfg)
    N = cfg.N_list[0]
    contour = make_contour(cfg, N, problem)
    probes = make_probes(cfg, problem.dim)
    data = compute_quadrature_data(problem, contour, probes, threads=cfg.threads)
    K = int(cfg.params.get("K", 1))
    if cfg.method == "hankel":
        M = build_hankel(markov_moments(data, 2 * K - 1, contour.center, contour.scale), K)[0].H
    elif cfg.method == "loewner1":
        sigma = _cplx(cfg.params["sigma"]) if "sigma" in cfg.params else default_sigma(contour)
        M = build_single_point_pencil(
            sigma_moments(data, sigma, 2 * K - 1, abs(sigma - contour.center)), K).Lmat
    elif cfg.method == "loewnerN":
        M = build_multipoint(data, make_scheme(cfg, contour, probes)).Lmat
    else:
        raise ConfigError("svd-report supports hankel, loewner1 and loewnerN")
    rep = singular_value_report_for(M, rank_policy(cfg))
    out = _outdir(cfg)
    cio.write_singular_values_csv(rep.singular_values, os.path.join(out, "singular_values.csv"),
                                  rep.rank)
    _write_summary(os.path.join(out, "summary.json"), command="svd-report", method=cfg.method,
                   N=N, rank=rep.rank, largest_gap_after=rep.largest_gap,
                   gap_ratios=[float(g) for g in rep.gap_ratios])
    print(f"{cfg.method}: numerical rank {rep.rank}, largest gap after {rep.largest_gap}")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "filter-profile": cmd_filter_profile,
    "modal": cmd_modal,
    "oracle": cmd_oracle,
    "svd-report": cmd_svd_report,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="contourloewner",
                                description="Contour-integral eigensolvers for nonlinear eigenvalue problems")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON run manifest")
        s.add_argument("--method", choices=METHODS)
        s.add_argument("--N", type=int, help="number of quadrature nodes")
        s.add_argument("--K", type=int, help="number of moment blocks")
        s.add_argument("--sigma", help="expansion point as RE,IM")
        s.add_argument("--seed", type=int, help="probing seed")
        s.add_argument("--threads", type=int, help="worker threads for node solves")
        s.add_argument("--out", help="output directory")
    return p


def apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    if args.method:
        cfg.method = args.method
    if args.N:
        cfg.N = args.N
    if args.K:
        cfg.params = dict(cfg.params, K=args.K)
    if args.sigma:
        try:
            re, im = (float(x) for x in args.sigma.split(","))
        except ValueError as exc:
            raise ConfigError("--sigma expects RE,IM") from exc
        cfg.params = dict(cfg.params, sigma=[re, im])
    if args.seed is not None:
        cfg.probing = dict(cfg.probing, seed=args.seed)
    if args.threads:
        cfg.threads = args.threads
    if args.out:
        cfg.out = os.path.abspath(args.out)
    cfg.validate()
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = apply_overrides(RunConfig.from_manifest(args.config), args)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](cfg)
    except SingularEvaluationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ConfigError, ValueError, KeyError, OSError, NotImplementedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
