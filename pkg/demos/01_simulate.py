"""Uncontrolled epidemic: fifty years under constant treatment fractions."""

# %%
# The default parameters and the starting population of 30000 people.
import numpy as np

from tbhiv import Params, STATE_NAMES, TimeGrid, integrate_forward, rhs_uncontrolled, initial_state

P = Params()
x0 = initial_state(30000)
print(dict(zip(STATE_NAMES, x0)))

# %%
# Integrate with a three-day step.  Co-infected cases are split between the
# two treatment routes in the fixed shares p and q.
grid = TimeGrid.from_step(50, 1 / 120)
traj = integrate_forward(lambda t, x: rhs_uncontrolled(x, P), x0, grid)

# %%
# Snapshots every ten years.
for year in range(0, 51, 10):
    row = traj.values[year * 120]
    print(f"t = {year:2d}  N = {row.sum():8.1f}  "
          + "  ".join(f"{n} {v:8.2f}" for n, v in zip(STATE_NAMES, row) if n in ("I_T", "A", "I_TH", "A_T")))

# %%
# With these transmission rates TB burns out while HIV settles at an endemic level.
print("TB active at T:", traj.final[[2, 8, 10]].sum())
print("HIV classes at T:", traj.final[[4, 5, 6]].sum())
print("population stays below Lambda/mu:", np.all(traj.values.sum(axis=1) <= P.Lambda / P.mu))
