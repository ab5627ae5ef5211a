"""Two stability questions about the low-temperature Gibbs measure.

First: sample the same disorder at two different temperatures and look at
the overlap between the two Gibbs samples -- its distribution charges both
the orthogonal atom (different bands) and the atom at q_*(b1) q_*(b2)
(same band), i.e. the band decomposition is stable in temperature.

Second: plant a deep critical point and measure the fluctuation of the
Gibbs mass of its band around the annealed mean: log(Z/EZ) follows a
Gaussian law determined by the curvature constant C_*.
"""

import numpy as np

from pspin import field, gibbs
from pspin.analytic import ModelParams, constants

p, n = 3, 32
beta1, beta2 = 5.0, 8.0
q12 = constants(ModelParams(p, beta1)).q_star * constants(ModelParams(p, beta2)).q_star

d = field.sample_disorder(p, n, seed=21)
sets = []
for ci, beta in enumerate((beta1, beta2)):
    rng = np.random.default_rng(100 + ci)
    sets.append(gibbs._thin_rows(gibbs._tempered_chains(d, beta, 8, 8000, rng).reshape(-1, n)))
r = gibbs.overlaps(sets[0], sets[1])
print("temperature pair (%.1f, %.1f); predicted same-band atom q12 = %.4f" % (beta1, beta2, q12))
print("mass near 0    : %.3f" % np.mean(np.abs(r) <= 0.1))
print("mass near q12  : %.3f" % np.mean(np.abs(r - q12) <= 0.1))
print("mass elsewhere : %.3f" % np.mean((np.abs(r) > 0.1) & (np.abs(r - q12) > 0.1)))

print("\nband-mass fluctuation law (planted band):")
rep = gibbs.band_fluctuation_experiment(p, 64, 6.0, n_realizations=60, seed=5)
print("sample mean of log(Z/EZ) = %+.3f   (predicted %+.3f)" % (rep["mean"], rep["target_mean"]))
print("sample var  of log(Z/EZ) = %+.3f   (predicted %+.3f)" % (rep["var"], rep["target_var"]))
