"""Closed forms next to simulation for both chains."""

from randsld.analytics import (ds_constant, ds_hitting_time, ds_hitting_time_exact,
                               guard_expectations, guard_hitting_time)
from randsld.fast import mc_counts_guard, mc_ds_constant, mc_ds_hitting, mc_guard_hitting
from randsld.strategies import DropShuffleParams, GuardParams

TRIALS = 200_000

g = GuardParams.uniform(3, 1 / 3, 0.5)
eo, en = guard_expectations(g)
o, n = mc_counts_guard(g, TRIALS, seed=1)
print(f"guard outputs per block  {o.mean:8.4f} +- {o.stderr:.4f}   formula {eo:.4f}")
print(f"guard visits per block   {n.mean:8.4f} +- {n.stderr:.4f}   formula {en:.4f}")

hits = mc_guard_hitting(g, 2, TRIALS, seed=2)
for alpha, i in [((), 3), ((1,), 1), ((2, 3), 2)]:
    est = hits[(alpha, i)]
    print(f"hit s{i}^{''.join(map(str, alpha)) or 'e'}: {est.mean:9.2f} +- {est.stderr:.2f}   "
          f"formula {guard_hitting_time(alpha, i, g):.2f}")

d = DropShuffleParams(0.5, 3)
c = mc_ds_constant(d, TRIALS, seed=3)
print(f"\ndrop-and-shuffle C      {c.mean:8.4f} +- {c.stderr:.4f}   formula {ds_constant(d):.4f}")
full, _ = mc_ds_hitting(d, (1, 2, 3), TRIALS, seed=4)
for l, est in enumerate(full):
    print(f"hit length {l}: {est.mean:9.2f} +- {est.stderr:.2f}   "
          f"published {ds_hitting_time(l, d):9.2f}   corrected {ds_hitting_time_exact(l, d):9.2f}")
