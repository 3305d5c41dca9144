"""Thresholds and equilibria: when does each disease persist?"""

# %%
import numpy as np

from tbhiv import Params, r0, r1, r2
from tbhiv import analysis

P = Params()
print("at N = 30000:", r0(P, 30000))
print("at the disease-free population:", r0(P))

# %%
# HIV alone is above threshold, so its disease-free state is unstable and
# an endemic state takes over.
print("HIV transmission rate at threshold:", analysis.beta_star(P))
print(analysis.full_dfe_stability(P).classification)
eq = analysis.endemic_equilibrium_hiv(P)
print("endemic (S, I_H, A, C_H):", np.round(eq, 2))
print(analysis.hiv_endemic_stability(P).classification)

# %%
# Sweep beta2 through the threshold and watch the leading eigenvalue change sign.
for b in np.linspace(0.005, 0.04, 8):
    Q = P.replace(beta2=b)
    rep = analysis.full_dfe_stability(Q)
    print(f"beta2 = {b:.4f}  R1 = {r1(Q):6.3f}  max Re = {rep.eigenvalues.real.max():+.2e}  {rep.classification}")

# %%
# TB has its own threshold through beta1.
for b in (0.6, 3.0, 6.0, 12.0):
    print(f"beta1 = {b:5.1f}  R2 = {r2(P.replace(beta1=b)):.4f}")
