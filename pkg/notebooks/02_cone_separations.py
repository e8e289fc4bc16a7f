# coding: utf-8

# # Processes pinned to a single cone
#
# Two 3-dimensional processes are built so that every stable cone is squeezed
# between the orbit cone of `tau` and the dual of the orbit cone of `pi`.
# For the first the squeeze lands on the exponential cone, for the second on
# the power cone with an irrational exponent.

# In[ ]:

import numpy as np

from quasireal import separations as sp
from quasireal.core import validate
from quasireal.cones import ConeOracle

proc = sp.build_exp_process()
tau, pi = sp.third_coord_scaled(proc.qr.tau, proc.qr.pi)
print("tau:", np.round(tau, 4), " pi:", np.round(pi, 4))
print("validation to length 6:", validate(proc.qr, 6, tol_prob=1e-9).passed)

# In[ ]:

rep = sp.verify_cone_sandwich(proc, max_len=12)
print("C_min inside K_exp:", rep.cmin_pass, " C_max* inside dual:", rep.cmax_pass)
print("largest gap between orbit parameters on [-15, 15]:", round(rep.density_gap, 4))

# Orbit points `D_1^s D_2^t tau` move along the boundary curve of the cone,
# parameterized by `x = s ln a + t ln b`.  With `ln a / ln b` irrational the
# parameters fill the line densely.

# In[ ]:

orb = sp.orbit(proc.qr, proc.qr.tau, 40)
x = np.sort(sp.exp_orbit_parameter(orb.rays))
x = x[(x > -5) & (x < 5)]
print(len(x), "orbit parameters in [-5, 5], largest spacing", np.diff(x).max().round(4))

# In[ ]:

# the same process is not stable for a power cone: the sandwich check finds a witness
bad = sp.verify_cone_sandwich(proc, cone=ConeOracle.power(0.5), dual=ConeOracle.power_dual(0.5), max_len=6)
print("power(0.5) accepted:", bad.cmin_pass and bad.cmax_pass)
print("witness:", bad.witness)

# In[ ]:

pw = sp.build_power_process()
rep = sp.verify_cone_sandwich(pw, max_len=10)
print("power process, alpha = 1/sqrt(2):", rep.cmin_pass, rep.cmax_pass, round(rep.density_gap, 4))

# A commensurate choice such as `a = 2` collapses the orbit onto a lattice.

# In[ ]:

print("a = 2 commensurate:", sp.build_exp_process(sp.ExpConeProcessParams(a=2.0)).params.commensurate)
