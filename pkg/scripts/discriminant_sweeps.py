"""Sweep p along segments and watch N and ind_p.

Three experiments: the sphere3 segment from (2,0,0,0) to the origin, the
circle radius crossing, and a tube segment that approaches the tube's centre
of symmetry, where min |det(A +- lambda P)| decays to zero (the discriminant).
"""
import numpy as np

from isoline.cli import RunConfig, jump_law_holds, sweep
from isoline.lines import GeneralPositionError, find_isotropic_lines
from isoline.surface import make_scenario


def show(title, rows):
    print(title)
    for r in rows:
        p = " ".join(f"{x:7.4f}" for x in r.p)
        N = "-" if r.N is None else r.N
        d = "-" if r.ind_p is None else r.ind_p
        m = "-" if r.min_abs_det is None or not np.isfinite(r.min_abs_det) else f"{r.min_abs_det:.3e}"
        print(f"  {r.step:>3}  {p}  {r.status:<11} N={N!s:>3} ind_p={d!s:>3} min|det|={m}")
    print(f"  jump law {'holds' if jump_law_holds(rows) else 'violated'}\n")


def main():
    show("sphere3: (2,0,0,0) -> origin, 21 steps",
         sweep(RunConfig(scenario="sphere3", p=(2.0, 0, 0, 0)), (2.0, 0, 0, 0), (0.0, 0, 0, 0), 21))
    show("circle: (2,0) -> (0,0), 9 steps",
         sweep(RunConfig(scenario="circle", p=(2.0, 0)), (2.0, 0), (0.0, 0), 9))

    print("tube_s1xs2: p = (eps, 0, 0, 0), eps -> 0")
    s = make_scenario("tube_s1xs2")
    for eps in 10.0 ** -np.arange(1, 9):
        try:
            recs = find_isotropic_lines(s, [eps, 0, 0, 0])
            m = min(abs(r.det_value) for r in recs)
            print(f"  eps={eps:.0e}  lines={len(recs)}  min|det|={m:.3e}  min|det|/eps={m / eps:.4f}")
        except GeneralPositionError as exc:
            rep = exc.report
            print(f"  eps={eps:.0e}  general position violated: cond2={rep.condition2} "
                  f"cond3={rep.condition3} min|det|={rep.min_abs_det:.3e} ({len(exc.records)} records)")


if __name__ == "__main__":
    main()
