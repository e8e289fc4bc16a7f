# coding: utf-8

# # Recovering a minimal model from word probabilities
#
# The Hankel block `H[u, v] = p(uv)` has rank equal to the minimal
# quasi-realization dimension.  An SVD factorization of the block gives a
# realization that is similar to the original one.

# In[ ]:

import numpy as np

from quasireal import frdn, separations as sp
from quasireal.core import word_table, words_upto
from quasireal.hankel import build_hankel, learn_regular, numerical_rank, spectral_distance

qr = frdn.build_quasi(frdn.FrdnParams(0.4, 1.0))
basis = words_upto(2, 4)
blk = build_hankel(qr, basis, basis)
print("singular values:", np.linalg.svd(blk.H, compute_uv=False)[:6])
print("rank, gap:", numerical_rank(blk))

# In[ ]:

learned = learn_regular(blk, 4)
print("round trip, words of length 6:", np.abs(word_table(learned, 6) - word_table(qr, 6)).max())
for s in range(2):
    print("symbol", s, "spectral distance", spectral_distance(np.linalg.eigvals(learned.D[s]), np.linalg.eigvals(qr.D[s])))

# The exponential-cone process has a Jordan block in `D_1`, so the learned
# eigenvalues agree only to about the square root of machine precision.

# In[ ]:

ex = sp.build_exp_process().qr
blk = build_hankel(ex, words_upto(3, 3), words_upto(3, 3))
r, gap = numerical_rank(blk)
le = learn_regular(blk, r)
print("rank", r, "gap %.1e" % gap)
print([spectral_distance(np.linalg.eigvals(a), np.linalg.eigvals(b)) for a, b in zip(le.D, ex.D)])
