"""Homogenization sweep with a side-by-side comparison of two grid refinements.

    python scripts/run_sweep.py configs/reference.ini --refinements 16 32
"""

import argparse
import dataclasses

from levyhomog.config import load_config
from levyhomog.harness import SweepConfig, run_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--refinements", type=int, nargs="+", default=[16, 32])
    args = ap.parse_args()

    cfg = load_config(args.config)
    base = SweepConfig(epsilons=cfg.epsilons, margin=cfg.margin, domain=cfg.domain, R=cfg.R,
                       zeta_factor=cfg.zeta_factor, n_torus=cfg.n_torus, R_torus=cfg.R_torus,
                       cell_method=cfg.method)
    tables = {r: run_sweep(cfg.coeffs, dataclasses.replace(base, refinement=r)) for r in args.refinements}
    first = tables[args.refinements[0]]
    eff = first.metadata["effective"]
    print(f"c_bar = {eff['c_bar']:.12g}, g_bar = {eff['g_bar']:.12g}, margin = {eff['margin']:.6g}")
    print("epsilon," + ",".join(f"err_interior(r={r})" for r in args.refinements))
    for i, row in enumerate(first.rows):
        vals = [tables[r].rows[i].err_interior for r in args.refinements]
        print(f"{row.epsilon:g}," + ",".join(f"{v:.4e}" for v in vals))


if __name__ == "__main__":
    main()
