"""Radial profiles of the Hankel and Loewner quadrature filters on the unit circle.

One CSV per (kind, N); columns follow ``FilterProfile.to_csv``.

    python scripts/filter_profiles.py --out results/
"""

import argparse
from pathlib import Path

import numpy as np

from contourloewner.core import circle
from contourloewner.filters import filter_profile, radial_points


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, nargs="+", default=[8, 16, 32, 64])
    ap.add_argument("--sigma", type=float, default=4 / 3)
    ap.add_argument("--angle", type=float, default=np.pi / 7, help="ray angle, off the node directions")
    ap.add_argument("--out", type=Path, default=Path("."))
    args = ap.parse_args(argv)

    args.out.mkdir(parents=True, exist_ok=True)
    radii = np.linspace(0.0, 2.0, 201)
    for N in args.N:
        c = circle(0, 1, N)
        pts = radial_points(c, radii, angle=args.angle)
        for kind, kw in (("hankel", {}), ("loewner", {"sigma": args.sigma})):
            prof = filter_profile(c, pts, kind=kind, **kw)
            prof.to_csv(args.out / f"filter_{kind}_N{N}.csv")
            inside = np.abs(prof.values[radii < 0.5])
            outside = np.abs(prof.values[radii > 1.5])
            print(f"{kind:<8} N={N:<4} |b| at r<0.5 in [{inside.min():.3g}, {inside.max():.3g}], "
                  f"max at r>1.5 {outside.max():.2e}")


if __name__ == "__main__":
    main()
