#!/usr/bin/env python3
"""Slope MSE of Robust-MEM (TLS), plain TLS, SIMEX and OLS on replicated linear data.

    python3 scripts/linear_table.py --reps 20 --sigma-nu2 1e-5 1 4
"""
import argparse
import time

import numpy as np

from robust_mem.baselines import SimexConfig, naive_fit, simex
from robust_mem.bootstrap import FitRequest, fit
from robust_mem.core import DPConfig, ErrorPrior
from robust_mem.models import linear_model
from robust_mem.synthetic import simulate
from robust_mem.tls import tls_solve


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--sigma-nu2", type=float, nargs="+", default=[1e-5, 1.0, 4.0])
    ap.add_argument("--B", type=int, default=100)
    ap.add_argument("--T", type=int, default=100)
    ap.add_argument("--c", type=float, default=1.0)
    ap.add_argument("--prior-scale", type=float, default=1.0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    model = linear_model(1, True)
    prior = ErrorPrior("student_t", (args.prior_scale,), 3.0)
    print(f"{'sigma_nu2':>10} {'method':>11} {'MSE x1e3':>9} {'sd x1e3':>8}")
    for s2 in args.sigma_nu2:
        t0 = time.time()
        err = {"robust_tls": [], "tls_plain": [], "simex": [], "ols": []}
        for r in range(args.reps):
            ds, _ = simulate("linear", seed=r, sigma_nu2=s2)
            post = fit(FitRequest(ds, model, "robust_tls", prior, DPConfig(args.c, args.T, args.B, r)),
                       workers=args.workers)
            err["robust_tls"].append(post.theta[:, 0].mean() - 1)
            err["tls_plain"].append(tls_solve(ds.w, ds.y, with_intercept=True).theta[0] - 1)
            err["simex"].append(simex(ds, model, "ols", SimexConfig(s2, seed=r)).theta[0] - 1)
            err["ols"].append(naive_fit(ds, model)[0] - 1)
        for k, v in err.items():
            sq = np.square(v) * 1e3
            print(f"{s2:>10g} {k:>11} {sq.mean():9.3f} {sq.std(ddof=1):8.3f}")
        print(f"# {time.time() - t0:.0f}s")


if __name__ == "__main__":
    main()
