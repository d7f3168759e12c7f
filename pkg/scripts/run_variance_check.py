"""Empirical slice MSE of the outer-layer estimator against the V_2 ||c||^2 / N bound."""

import argparse

from rkn.layered_kernel import build_relu_context
from rkn.mc_estimator import compute_Vl, variance_check
from rkn.param_measure import UniformComponent
from rkn.rkhs_repr import build_tent_target


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--B", type=float, nargs="+", default=[7.0, 15.0])
    ap.add_argument("--N", type=int, nargs="+", default=[32, 128, 512, 2048])
    ap.add_argument("--trials", type=int, default=400)
    ap.add_argument("--uni", choices=[u.value for u in UniformComponent], default="degenerate_zero")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(f"{'B':>5} {'N':>6} {'mse':>10} {'N*mse':>8} {'bound':>10} {'max|z|':>7} ok")
    for B in args.B:
        ctx, consts = build_relu_context(B, uni=UniformComponent(args.uni))
        target = build_tent_target(consts, ctx.measure)
        V2 = compute_Vl(ctx, 2, seed=args.seed)
        for N in args.N:
            r = variance_check(ctx, target, N, args.trials, args.seed, V_l=V2)
            print(f"{B:5g} {N:6d} {r.empirical_mse:10.4g} {N * r.empirical_mse:8.3f} "
                  f"{r.variance_bound * r.slack:10.4g} {r.max_abs_z:7.2f} {r.passed}")


if __name__ == "__main__":
    main()
