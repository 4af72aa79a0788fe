"""Target-SINR power control on a single carrier and its feasibility test."""
import numpy as np

from opcgame.network import Scenario
from opcgame.single_carrier import tpc_feasible, tpc_solution, tpc_step

g = np.array([[[1.0], [0.3]], [[0.2], [1.0]]])
sc = Scenario(g, np.full((2, 1), 0.01))
targets = np.array([2.0, 1.5])
ok, rho = tpc_feasible(sc, targets)
print(f"feasible={ok}, spectral radius {rho:.3f}")

p = np.zeros((2, 1))
for n in range(30):
    p = tpc_step(sc, p, targets)
print("iterate after 30 steps:", p.ravel())
print("direct solution:       ", tpc_solution(sc, targets).ravel())
