"""Run both sides of N = 2 ind - 2 ind_p on the shipped scenarios and print a table.

    python scripts/theorem_suite.py [--quick]
"""
import argparse
import time

from isoline.cli import RunConfig, verify

CASES = [
    ("circle", (2.0, 0.0), {}),
    ("circle", (0.5, 0.0), {}),
    ("figure_eight", (0.5, 0.1), {}),
    ("figure_eight", (-0.5, 0.1), {}),
    ("ellipse", (3.0, 0.5), {}),
    ("sphere3", (2.0, 0.0, 0.0, 0.0), {}),
    ("sphere3", (0.3, 0.0, 0.0, 0.0), {}),
    ("ellipsoid3", (4.0, 0.0, 0.0, 0.0), {"semi_axes": (1.0, 1.2, 0.8, 1.5)}),
    ("ellipsoid3", (0.1, 0.2, 0.0, 0.1), {"semi_axes": (1.0, 1.2, 0.8, 1.5)}),
    ("tube_s1xs2", (2.0, 0.0, 0.0, 0.0), {}),
    ("tube_s1xs2", (6.0, 0.3, -0.2, 0.1), {}),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--quick", action="store_true", help="plane curves only")
    args = ap.parse_args()
    head = f"{'scenario':<13} {'p':<26} {'lines':>5} {'N':>3} {'ind':>4} {'ind_p':>5} {'rhs':>4} {'literal':>8} {'min|det|':>9} {'sec':>5}  ok"
    print(head)
    print("-" * len(head))
    all_ok = True
    for name, p, extra in CASES:
        if args.quick and len(p) != 2:
            continue
        t0 = time.perf_counter()
        rep = verify(RunConfig(scenario=name, p=p, **extra))
        dt = time.perf_counter() - t0
        a = rep.ind["preimage"].value
        b = rep.ind_p["preimage"].value
        all_ok &= rep.passed
        print(f"{name:<13} {' '.join(f'{x:g}' for x in p):<26} {len(rep.records):>5} {rep.theorem_lhs:>3} "
              f"{a:>4} {b:>5} {rep.theorem_rhs:>4} {rep.corollary_literal:>8.3f} "
              f"{rep.gp.min_abs_det:>9.3g} {dt:>5.1f}  {'yes' if rep.passed else 'NO'}")
    print("all passed" if all_ok else "FAILURES")


if __name__ == "__main__":
    main()
