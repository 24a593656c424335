"""Print lambda-degree profiles of the global A/B series for R and S data of each level.

usage: python scripts/vertex_profiles.py [--k-max K] [--n-max N]
"""

import argparse

from givkdv.deform import GiventalDatum, default_datum
from givkdv.vertex import degree_profile, first_order_consistency, global_AB


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--k-max", type=int, default=6)
    ap.add_argument("--n-max", type=int, default=3)
    args = ap.parse_args()
    for ell in (1, 2, 3):
        for kind in ("R", "S"):
            mat = default_datum(kind, 2, ell).matrices[ell] if kind == "R" else default_datum("S", 2, levels=ell).matrices[ell]
            G = GiventalDatum(kind, {ell: mat})
            fo = all(first_order_consistency(G, a, args.n_max).passed for a in (1, 2))
            print(f"{kind} level {ell}: first-order consistency {'ok' if fo else 'FAILED'}")
            for n in range(args.n_max + 1):
                A, B = global_AB(G, 1, n, args.k_max)
                pa, pb = degree_profile(A), degree_profile(B)
                growth = " ".join(str(pa.per_k_max[k]) for k in sorted(pa.per_k_max))
                print(f"  n={n}  A: {pa.verdict:9s} max {pa.max_degree:3d}  per-k [{growth}]   B: {pb.verdict:9s} max {pb.max_degree}")


if __name__ == "__main__":
    main()
