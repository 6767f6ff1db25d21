# %% [markdown]
# # Gradient, Ornstein-Uhlenbeck and Mehler
#
# The discrete gradient is half the difference of F with one sign forced up
# and down.  L multiplies chaos q by -q, and its semigroup has a Mehler
# representation as a resampling average.

# %%
import numpy as np

from rademacher_stein import (
    ChaosDecomposition,
    RademacherPoint,
    SymmetricKernel,
    apply_L,
    apply_L_inverse,
    apply_Pt,
    evaluate,
    gradient,
    mehler_evaluate,
    to_table,
)
from rademacher_stein.malliavin import dirichlet_forms, gradient_tables, ipp_sides
from rademacher_stein.testfunctions import sine

dec = ChaosDecomposition(4, 0.0, {
    1: SymmetricKernel(1, {(1,): 0.4, (3,): -0.3}),
    2: SymmetricKernel(2, {(1, 2): 0.25, (2, 4): 0.2}),
    3: SymmetricKernel(3, {(1, 3, 4): 0.1}),
})

# %%
# D_k F never involves X_k
for k, dk in gradient(dec).items():
    print(k, dk.orders, sorted(dk.coordinates()))

# %%
# the table route agrees with the chaos route
t = to_table(dec, exact=False)
g = gradient_tables(t)
print(np.allclose(g[1], to_table(gradient(dec)[2], 4, exact=False)))

# %%
print(apply_L(dec).kernel(3)[(1, 3, 4)], apply_L_inverse(dec).kernel(2)[(1, 2)])

# %% [markdown]
# ## Mehler
#
# P_t F at a point is the average of F over configurations where each sign is
# kept with probability e^{-t} and otherwise redrawn.

# %%
w = RademacherPoint.from_signs([1, -1, 1, 1])
for tt in (0.0, 0.3, 1.0, 5.0):
    print(tt, mehler_evaluate(dec, tt, w), float(evaluate(apply_Pt(dec, tt), w)))

# %% [markdown]
# ## Integration by parts
#
# E[F phi(F)] = E<D phi(F), -D L^{-1} F> holds exactly on the cube.

# %%
# (F happens to be symmetric in law here, so an even phi would give 0 = 0)
print(ipp_sides(dec, sine(1.0)))

# the Dirichlet form of L^{-1}F is smaller unless F sits in the first chaos
print(dirichlet_forms(dec))
