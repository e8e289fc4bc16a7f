# coding: utf-8

# # One process, three models
#
# The FRDN process returns to symbol `a` after a run of `l` copies of `b`
# with probability `h_l = lam^l sin^2(l alpha / 2)`.  Here it is evaluated
# from a truncated renewal chain, from a 4-dimensional quasi-realization and
# from a qutrit hidden quantum model, and the three word tables are compared.

# In[ ]:

import math

import numpy as np

from quasireal import frdn
from quasireal.core import word_table
from quasireal.realizations import cp_certificate

params = frdn.FrdnParams(lam=0.4, alpha=1.0)
h = frdn.return_probabilities(params)
print("h_1..h_6:", np.round(h[1:7], 5))
print("tail bound of the truncated chain:", frdn.truncation_residual(params))

# In[ ]:

qr = frdn.build_quasi(params)
hq = frdn.build_hqmm(params)
print("D_b spectrum:", np.round(np.linalg.eigvals(qr.D[frdn.B]), 6))
print("expected lam e^{+-i alpha}:", np.round(params.lam * np.exp(1j * params.alpha), 6))
print("CP certificate passes:", cp_certificate(hq).passed)

# In[ ]:

# all words of length 6 in lexicographic order
from quasireal.realizations import hqmm_to_quasi

t_q = word_table(qr, 6)
t_h = word_table(hqmm_to_quasi(hq), 6)
print("quasi vs HQMM max difference:", np.abs(t_q - t_h).max())

# In[ ]:

for lam in (0.2, 0.4, 0.5):
    for alpha in (1.0, math.pi / 5, 2.3):
        rep = frdn.three_way_equivalence(frdn.FrdnParams(lam, alpha), max_len=8)
        print(f"lam={lam:.1f} alpha={alpha:.4f}  max discrepancy {rep.max_discrepancy:.2e}")

# The stationary frequency of `a` is the inverse mean recurrence time.

# In[ ]:

ell = np.arange(h.size)
print("p(a) =", frdn.stationary_a_probability(params), "=", 1 / (1 + (ell * h).sum()))
