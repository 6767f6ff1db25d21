# %% [markdown]
# # Chaos expansions of Boolean functions
#
# Any function of d signs is a finite sum of multiple integrals.  We take the
# majority of three signs, expand it, and check the isometry and the product
# formula by brute force.

# %%
from fractions import Fraction

import numpy as np

from rademacher_stein import (
    ChaosDecomposition,
    SymmetricKernel,
    decompose_walsh,
    product,
    sq_norm,
    to_table,
    variance,
)

# truth tables are indexed by bit patterns; bit k-1 set means X_k = +1
d = 3
signs = np.array([[1 if (b >> k) & 1 else -1 for k in range(d)] for b in range(1 << d)])
maj = np.sign(signs.sum(axis=1))
print(signs.tolist())
print(maj.tolist())

# %%
dec = decompose_walsh([Fraction(int(v)) for v in maj], d)
for q in dec.orders:
    print(q, dict(dec.kernel(q).items()))

# weight 1/2 on each coordinate and -1/12 per triple
# (3! * (-1/12) = -1/2 is the Walsh coefficient of X1 X2 X3)

# %%
# Parseval: the variance is the sum of q! |f_q|^2 over the chaoses
print(variance(dec), sum(Fraction(int(v)) ** 2 for v in maj) / 8)

# %% [markdown]
# ## Product formula
#
# A product of two double integrals on overlapping coordinates lands in
# chaoses 0, 2 and 4.

# %%
f = SymmetricKernel(2, {(1, 2): Fraction(1, 2), (2, 3): Fraction(1, 3)})
g = SymmetricKernel(2, {(1, 3): Fraction(1, 4)})
fg = product(f, g, d)
print(fg.mean, fg.orders)

tf = to_table(ChaosDecomposition(d, 0, {2: f}), exact=True)
tg = to_table(ChaosDecomposition(d, 0, {2: g}), exact=True)
print(all(a * b == c for a, b, c in zip(tf, tg, to_table(fg, d, exact=True))))

# %%
# the mean of the product is 2! <f, g>, which vanishes here since the supports differ
print(2 * sq_norm(f), np.mean(np.asarray(tf, dtype=float) ** 2))
