"""Compare the Chernoff tail bound with simulated null false-positive rates over an (m, n, tau) grid.

Rows whose Wilson lower limit exceeds the bound are marked ``violated``.
Usage: python3 scripts/bound_vs_simulation.py [--trials 200000] [--allowed-days 1200]
"""

import argparse

from insidernet.calibration import pair_tail_bound, simulate_pair_similarity, wilson_interval


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=200_000)
    ap.add_argument("--allowed-days", type=int, default=1200)
    ap.add_argument("--counts", type=int, nargs="+", default=[4, 8, 12])
    ap.add_argument("--taus", type=float, nargs="+", default=[0.2, 0.3, 0.4, 0.5, 0.65, 0.8])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print("m,n,tau,hits,rate,wilson_lo,wilson_hi,bound,status")
    for m in args.counts:
        for n in args.counts:
            s = simulate_pair_similarity(m, n, args.allowed_days, args.trials, seed=args.seed + 1000 * m + n)
            for tau in args.taus:
                hits = int((s >= tau).sum())
                lo, hi = wilson_interval(hits, args.trials)
                bound = pair_tail_bound(m, n, tau, args.allowed_days)
                status = "violated" if lo > bound else "ok"
                print(f"{m},{n},{tau},{hits},{hits / args.trials:.3e},{lo:.3e},{hi:.3e},{bound:.3e},{status}")


if __name__ == "__main__":
    main()
