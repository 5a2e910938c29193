"""Residual convergence of the three backends on the delay benchmark.

Writes ``delay_convergence.csv`` with one row per (method, N) and prints the table.

    python scripts/delay_convergence.py --out results/
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from contourloewner.core import ProbingConfig, circle, compute_quadrature_data
from contourloewner.hankel import hankel_eigensolver
from contourloewner.loewner_multi import default_scheme, multipoint_eigensolver
from contourloewner.loewner_single import single_point_eigensolver
from contourloewner.problems import delay_eigen_oracle, delay_reference_disk, make_delay_problem
from contourloewner.realize import RankPolicy, match_eigenvalues


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, nargs="+", default=[16, 32, 64, 128])
    ap.add_argument("--K", type=int, default=5)
    ap.add_argument("--sigma", type=complex, default=0.5)
    ap.add_argument("--points", type=int, default=5, help="interpolation points for loewnerN")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=Path("."))
    args = ap.parse_args(argv)

    prob = make_delay_problem()
    center, radius = delay_reference_disk(prob, 11, ratio=0.7)
    oracle = delay_eigen_oracle(prob, center, radius)
    m = len(oracle.eigenvalues)
    print(f"disk center={center:.6g} radius={radius:.6g}; reference eigenvalues: {m}")
    probes = ProbingConfig.random(prob.dim, m, m, seed=args.seed)
    policy = RankPolicy(rank=m)

    rows = []
    for N in args.N:
        contour = circle(center, radius, N)
        data = compute_quadrature_data(prob, contour, probes)
        scheme = default_scheme(contour, probes, args.points, m)
        sols = {
            "hankel": hankel_eigensolver(data, args.K, policy, prob),
            "loewner1": single_point_eigensolver(data, args.K, args.sigma, policy, prob),
            "loewnerN": multipoint_eigensolver(data, scheme, rank_policy=policy, problem=prob),
        }
        for name, sol in sols.items():
            err = match_eigenvalues(sol.eigenvalues, oracle.eigenvalues)[2]
            rows.append({"method": name, "N": N, "max_residual": sol.max_residual,
                         "max_eig_error": float(np.max(err)) if len(err) else float("nan")})

    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / "delay_convergence.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    print(f"{'method':<10}{'N':>6}{'max residual':>16}{'eig error':>14}")
    for r in rows:
        print(f"{r['method']:<10}{r['N']:>6}{r['max_residual']:>16.3e}{r['max_eig_error']:>14.3e}")


if __name__ == "__main__":
    main()
