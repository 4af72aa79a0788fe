"""Draw a random network, inspect its normalized gains and evaluate rates."""
import numpy as np

from opcgame import generate_scenario, interference, rates, sinr

sc = generate_scenario(seed=0, num_users=5, num_subchannels=20)
print(f"{sc.num_users} users, {sc.num_subchannels} subchannels")
print("cross gains seen by user 0 on subchannel 0:", np.round(sc.cross_gain[0, :, 0], 5))

# every user spreads 1 W evenly
profile = np.full((sc.num_users, sc.num_subchannels), 1.0 / sc.num_subchannels)
I = interference(sc, profile)
print("interference range:", I.min(), I.max())
print("SINR user 0, subchannel 0:", sinr(sc, profile, 0, 0))
print("rates (nats):", np.round(rates(sc, profile), 3))
