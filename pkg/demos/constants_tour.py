"""Tour of the analytic constants of the pure p-spin spherical model.

Prints the threshold energies, the overlap roots that locate pure-state
bands, and verifies the variational identity tying the band free energy to
the one-step replica-symmetry-breaking functional.
"""

import numpy as np

from pspin import analytic
from pspin.analytic import ModelParams

p, beta = 3, 6.0
params = ModelParams(p, beta)
b = analytic.constants(params)

print("pure %d-spin at beta = %g" % (p, beta))
print("  bulk edge energy   E_inf = %.12f" % b.e_inf)
print("  ground-state level E_0   = %.12f" % b.e_zero)
print("  count-rate slope   c_p   = %.12f" % b.c_p)
print("  band overlap       q_*   = %.12f" % b.q_star)
print("  critical overlap   q_c   = %.12f" % b.q_c)
print("  inner root         q_**  = %.12f" % b.q_star_star)
print("  curvature constant C_*   = %.12f" % b.c_star)

# the band free energy at (E_0, q_*) equals the 1-RSB functional at
# (m_*, q_*^2), and q_* is its stationary point
lz = analytic.lambda_z(params, b.e_zero, b.q_star)
pr = analytic.parisi_1rsb(params, b.m_star, b.q_star**2)
print("\nband free energy Lambda(E_0, q_*) = %.12f" % lz.value)
print("1-RSB functional P(m_*, q_*^2)    = %.12f" % pr)
print("identity residual                 = %.2e" % abs(lz.value - pr))
print("stationarity |dLambda/dq|         = %.2e" % abs(lz.dq))

# profile of the band free energy in q: a single interior maximum at q_*
qs = np.linspace(0.5, 0.999, 9)
print("\n q        Lambda(E_0, q)")
for q in qs:
    print(" %.3f    %.6f" % (q, analytic.lambda_z(params, b.e_zero, q).value))
print(" %.6f  %.6f   <- q_*" % (b.q_star, lz.value))
