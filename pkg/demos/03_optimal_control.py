"""Optimal split of co-infected patients between the two treatment routes."""

# %%
import sys

import numpy as np

from tbhiv import CostSpec, Params, TimeGrid, fbsm_solve, initial_state

# a coarser step (pass e.g. 0.05) makes this run in a few seconds
h = float(sys.argv[1]) if len(sys.argv) > 1 else 1 / 120
P = Params()
grid = TimeGrid.from_step(50, h)

# %%
# Minimize AIDS-TB cases plus a quadratic treatment cost with equal weights.
res = fbsm_solve(initial_state(), P, CostSpec("J", W1=50, W2=50), grid)
print(f"converged: {res.converged} after {res.iterations} sweeps")
print(f"cost: {res.initial_cost:.2f} with (p, q) -> {res.cost:.2f} optimal")

# %%
# Controls over time.  Both routes are used about equally at first and fade
# as co-infection dies out.
for year in (0, 1, 2, 3, 5, 10, 20, 40, 50):
    k = int(round(year / grid.h))
    print(f"t = {year:2d}  u1 = {res.u1[k]:.3f}  u2 = {res.u2[k]:.3f}  I_TH = {res.state.values[k, 8]:.2f}")

# %%
# Making the joint treatment ten times as expensive shifts effort to u2.
heavy = fbsm_solve(initial_state(), P, CostSpec("J", W1=500, W2=50), grid)
print("mean u1:", np.mean(res.u1), "->", np.mean(heavy.u1))
print("mean u2:", np.mean(res.u2), "->", np.mean(heavy.u2))
