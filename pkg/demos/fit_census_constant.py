"""Fit the constant C of the census error law |exact/asymptotic - 1| <= C k^4 / n.

The scaled error n * rel / k^4 increases with n towards a limit, so a fit on
small n undershoots.  We take the Richardson limit from n in {25, 50}
(rel ~ c/n + d/n^2 gives c = 2*50*r50 - 25*r25), inflate it by 25% and round
up to two decimals.  The result is frozen in ``fppkn.census.ERROR_LAW_C`` and
checked at n in {100, 200, 400} by the acceptance suite.

Run:  python3 demos/fit_census_constant.py
"""
import math

from fppkn.census import ERROR_LAW_C, pair_count_asymptotic, pair_counts_reduced


def rel_error(n, k, l):
    return abs(pair_counts_reduced(n, k)[l] / pair_count_asymptotic(n, k, l) - 1.0)


def main():
    limits = []
    for k in (2, 3, 4):
        for l in range(1, k - 1):
            r25, r50 = rel_error(25, k, l), rel_error(50, k, l)
            c = (2 * 50 * r50 - 25 * r25) / k**4
            limits.append(c)
            print(f"k={k} l={l}: n*rel/k^4 at 25: {25 * r25 / k**4:.4f}  at 50: {50 * r50 / k**4:.4f}"
                  f"  extrapolated: {c:.4f}")
    fitted = math.ceil(1.25 * max(limits) * 100) / 100
    print(f"fitted C = {fitted}   (frozen: {ERROR_LAW_C})")
    # held-out sizes, for information only
    for k in (3, 4):
        for n in (100, 200, 400, 800):
            worst = max(rel_error(n, k, l) for l in range(1, k - 1))
            print(f"k={k} n={n}: worst rel {worst:.3e}  bound {fitted * k**4 / n:.3e}")


if __name__ == "__main__":
    main()
