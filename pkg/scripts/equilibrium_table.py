"""Print the symmetric equilibrium table for a few market sizes and the
regulator anchors (spectrum / reservation utility giving revenue 1500).

    python scripts/equilibrium_table.py
"""
import math

from oligosim import MarketConfig, aggregate_utility, find_parameter, symmetric_ne

N = 1000


def table(I, alphas):
    lo, hi = math.e / I, math.exp(I / (I - 1)) / I
    print(f"I={I}: A1=(0, {lo:.4f})  A2=[{lo:.4f}, {hi:.4f}]  A3=({hi:.4f}, inf)")
    print(f"  {'alpha':>8} {'interval':>8} {'lambda*':>10} {'R_i*':>10} {'region':>6} unique")
    for a in alphas:
        eq = symmetric_ne(a, I, N)
        print(f"  {a:8.4f} {eq.interval:>8} {eq.prices[0]:10.6f} {eq.revenues[0]:10.4f} "
              f"{eq.region.region.value:>6} {eq.unique}")


def anchors():
    up = MarketConfig(N=N, I=3, W=1000.0, U0=0.1)
    W = find_parameter(up, "W", "total_revenue", 1500, (1000, 3000))
    print(f"\nU0=0.1: smallest W with total revenue 1500: {W:.4f} "
          f"(alpha={W / (N * math.exp(0.1)):.6f})")
    low = MarketConfig(N=N, I=3, W=5000.0, U0=3.0)
    U0 = find_parameter(low, "U0", "total_revenue", 1500, (3.0, 0.5))
    print(f"W=5000: largest U0 with total revenue 1500: {U0:.6f}, "
          f"U_agg={aggregate_utility(5000.0, N, 3, U0):.3f}")


if __name__ == "__main__":
    for I in (2, 3, 5):
        lo, hi = math.e / I, math.exp(I / (I - 1)) / I
        table(I, [0.5 * lo, lo, 0.5 * (lo + hi), hi, 2 * hi])
    anchors()
