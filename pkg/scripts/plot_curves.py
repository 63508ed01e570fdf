"""Write SVG pictures of the signed isotropic lines for the plane-curve scenarios.

    python scripts/plot_curves.py [outdir]
"""
import sys
from pathlib import Path

from isoline.cli import render_svg
from isoline.lines import count_N, find_isotropic_lines
from isoline.surface import make_scenario

SCENES = [
    ("circle_outside", "circle", (2.0, 0.0)),
    ("circle_inside", "circle", (0.5, 0.0)),
    ("ellipse_outside", "ellipse", (3.0, 0.5)),
    ("figure_eight_right_lobe", "figure_eight", (0.5, 0.1)),
    ("figure_eight_left_lobe", "figure_eight", (-0.5, 0.1)),
    ("figure_eight_outside", "figure_eight", (0.0, 1.0)),
]


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "plots")
    out.mkdir(parents=True, exist_ok=True)
    for tag, name, p in SCENES:
        s = make_scenario(name)
        recs = find_isotropic_lines(s, p)
        path = out / f"{tag}.svg"
        path.write_text(render_svg(s, p, recs), encoding="utf-8")
        signs = " ".join(f"{r.epsilon:+d}" for r in recs) or "none"
        print(f"{path}: N = {count_N(recs)} ({signs})")


if __name__ == "__main__":
    main()
