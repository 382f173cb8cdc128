"""Print the symmetry-gate residuals of every catalog spacetime."""

import argparse

from laxtensor import spacetimes


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=spacetimes.GATE_POINTS)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    ok = True
    for entry in spacetimes.catalog():
        rep = spacetimes.validate_entry(entry, n_points=args.points, seed=args.seed)
        ok &= rep.passed
        print(f"{entry.name:14s} {'ok' if rep.passed else 'FAIL'}")
        for c in rep.checks:
            print(f"    {c.name:28s} {c.residual:9.2e}")
    raise SystemExit(0 if ok else 1)


if __name__ == "__main__":
    main()
