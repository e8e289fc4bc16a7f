# coding: utf-8

# # How many classical states?
#
# Normalized eigenvalues of an `n`-state nonnegative matrix lie in the convex
# hull of the roots of unity of order at most `n`.  A pole of the generating
# function `sum_n z^-n p(a b^n a)` outside that hull rules out every HMM with
# `n` or fewer states.

# In[ ]:

import math

import numpy as np

from quasireal import frdn
from quasireal.witnesses import classical_dim_witness, contour_residue, noise_dimension_bound, pole_report

qr = frdn.build_quasi(frdn.FrdnParams(0.4, math.pi / 7))
rep = pole_report(qr, frdn.B, frdn.A)
for z, r in rep.poles:
    print("pole", np.round(z, 6), "residue", np.round(r, 6))

# In[ ]:

z0 = rep.poles[0][0]
print("contour check:", np.round(contour_residue(qr, frdn.B, frdn.A, z0, 0.05), 10))

# `e^{i pi/7}` is a primitive 14th root of unity, so the first hull that
# contains it has order 14.

# In[ ]:

w = classical_dim_witness(qr.D[frdn.B], poles=[z for z, _ in rep.poles], table_n=16)
print("lower bound on classical states:", w.bound)
print("excluded sizes:", [n for n, ex in w.exclusions.items() if ex])

# With an irrational phase the bound keeps growing as the hull tolerance shrinks.

# In[ ]:

qr1 = frdn.build_quasi(frdn.FrdnParams(0.4, 1.0))
for eta in (1e-6, 1e-9, 1e-12):
    print(eta, classical_dim_witness(qr1.D[frdn.B], eta=eta).bound)

# Depolarizing noise of strength `1 - q` limits the certified dimension to
# order `(1 - q)^(-1/2)`.

# In[ ]:

for e in (1e-2, 1e-4, 1e-6):
    b = noise_dimension_bound(frdn.NoiseParams(1 - e, 0.5, 0.4, math.pi / 7), 7)
    print(f"1-q={e:.0e}  n*={b.n_star:8.2f}  largest excluded={b.largest_excluded}  n*sqrt(1-q)={b.n_star * math.sqrt(e):.5f}")
