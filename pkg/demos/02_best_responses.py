"""One user's best responses against a fixed interference vector."""
import numpy as np

from opcgame import br_opportunistic, br_power_min, br_priced, br_waterfill

rng = np.random.default_rng(1)
I = rng.uniform(0.01, 0.2, size=10)

opp = br_opportunistic(I, varsigma=1e-4)
print("opportunistic: power", opp.powers.sum(), "sum (pI)^2", ((opp.powers * I) ** 2).sum())

wf = br_waterfill(I, power_budget=1.0)
print("waterfilling:  power", wf.powers.sum(), "active", int((wf.powers > 0).sum()))

pm = br_power_min(I, rate_target=3.0)
print("power-min:     power", pm.powers.sum(), "rate", np.log1p(pm.powers / I).sum())

for price in (0.0, 10.0, 100.0):
    pr = br_priced(I, power_budget=3.0, price=price)
    print(f"priced lambda={price:>5}: power {pr.powers.sum():.4f}")
