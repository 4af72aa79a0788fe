"""Pricing: a larger price trades rate for power, and frozen prices stop tracking the network."""
import numpy as np

from opcgame import GameConfig, UserParams, freeze_fixed_prices, generate_scenario, run, scale_user_channels

sc = generate_scenario(seed=0, num_subchannels=10)
for price in np.logspace(0, 4, 5):
    res = run(sc, GameConfig("priced", UserParams.uniform(5, power_budget=3.0, price=price)))
    print(f"lambda={price:>8.0f}: total power {res.total_power.sum():.3f}  total rate {res.total_rate.sum():.3f}")

params = UserParams.uniform(5, power_budget=3.0, price=100.0)
base = run(sc, GameConfig("priced", params))
frozen = freeze_fixed_prices(sc, base, 100.0)
worse = scale_user_channels(sc, 0, 0.5)
adaptive = run(worse, GameConfig("priced", params))
fixed = run(worse, GameConfig("fixed_priced", params, fixed_prices=frozen))
print("after user 0 degrades, power adaptive vs fixed:",
      round(adaptive.total_power.sum(), 3), round(fixed.total_power.sum(), 3))
