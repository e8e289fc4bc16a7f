# coding: utf-8

# # Sampling the qutrit model
#
# Sequences are drawn by repeated measurement of the hidden quantum model.
# Seeds are deterministic so the written files are reproducible byte for byte.

# In[ ]:

import tempfile
from pathlib import Path

import numpy as np

from quasireal import frdn
from quasireal.realizations import read_sequence, sample_sequence, write_sequence

params = frdn.FrdnParams(0.4, 1.0)
hq = frdn.build_hqmm(params)
seq = np.array(sample_sequence(hq, 100_000, 9))
p = frdn.stationary_a_probability(params)
print("empirical p(a):", (seq == frdn.A).mean(), " exact:", round(p, 5))

# Run lengths of `b` between two `a`s follow `h_l`.

# In[ ]:

idx = np.flatnonzero(seq == frdn.A)
runs = np.diff(idx) - 1
h = frdn.return_probabilities(params)
emp = np.bincount(runs, minlength=8)[:8] / runs.size
print(np.round(np.c_[h[:8], emp], 4))

# In[ ]:

d = Path(tempfile.mkdtemp())
write_sequence(d / "x.txt", sample_sequence(hq, 50, 3), hq.alphabet)
write_sequence(d / "y.txt", sample_sequence(hq, 50, 3), hq.alphabet)
print((d / "x.txt").read_text())
print("identical:", (d / "x.txt").read_bytes() == (d / "y.txt").read_bytes())
print(read_sequence(d / "x.txt", hq.alphabet)[:10])
