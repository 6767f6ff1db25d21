# %% [markdown]
# # How close to Gaussian?
#
# The master bound splits into B1, the spread of <DF, -DL^{-1}F> around one,
# and B2, a cubic gradient term.  For normalized partial sums B1 vanishes and
# the bound decays like 1/n, faster than the Berry-Esseen rate.

# %%
import math

import numpy as np

from rademacher_stein import (
    ChaosDecomposition,
    SymmetricKernel,
    WeightSequence,
    bound_double_integral,
    bound_general,
    bound_two_runs,
    cosine,
    distance,
    first_chaos,
    wasserstein_bound,
)
from rademacher_stein.sparse import loglog_slope

h = cosine(1.0)
ns = [4, 8, 16, 64, 256]
rows = []
for n in ns:
    dec = first_chaos([1 / math.sqrt(n)] * n)
    b = bound_general(dec, h)
    dist = distance(dec, h) if n <= 16 else float("nan")
    rows.append((n, b.B1, b.B2, b.total, dist))
    print(f"{n:5d}  B1={b.B1:.1e}  B2={b.B2:.5f}  20/(3n)={20 / (3 * n):.5f}  distance={dist:.2e}")

print("slope", loglog_slope(ns, [r[3] for r in rows]))

# %%
# the Wasserstein corollary turns B1 + B2 into a square-root rate
for n in (6, 64, 1024):
    print(n, wasserstein_bound(0.0, 20 / (3 * n), 1.0), 9 / math.sqrt(n))

# %% [markdown]
# ## A double integral
#
# k disjoint pairs with equal weight: the fourth trace shrinks like 1/k.

# %%
for k in (1, 4, 16, 64):
    f = SymmetricKernel(2, {(2 * i + 1, 2 * i + 2): 1 / (2 * math.sqrt(k)) for i in range(k)})
    b = bound_double_integral(f, h)
    msg = f"{k:3d}  trace={b.trace:.4f}  bound={b.value:.4f}"
    if 2 * k <= 16:
        msg += f"  distance={distance(ChaosDecomposition(2 * k, 0, {2: f}), h):.2e}"
    print(msg)

# %% [markdown]
# ## Two runs
#
# G = sum a_i xi_i xi_{i+1} with Bernoulli xi mixes the first and second
# chaos.  With unit weights the bound carries a 1/sqrt(n) term and a 1/n term;
# the second is larger until n is in the tens of thousands.

# %%
ns = 8 * 2 ** np.arange(9)
bounds = np.array([bound_two_runs(WeightSequence.ones(int(n)), h)[0] for n in ns])
print(np.c_[ns, bounds])
print("slope 8..2048:", loglog_slope(ns, bounds))
far = 2 ** np.arange(14, 23)
print("slope 2^14..2^22:", loglog_slope(far, [bound_two_runs(WeightSequence.ones(int(n)), h)[0] for n in far]))
