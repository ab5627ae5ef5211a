"""Census of the critical points of one disorder realization.

Enumerates every critical point of a small-n Hamiltonian by multi-start
Newton iteration, tabulates them by index, checks the Morse alternating
sum against the Euler characteristic of the sphere, and compares the total
count with the Kac-Rice mean over disorders.
"""

import numpy as np

from pspin import critical, field

p, n, seed = 3, 8, 12345
d = field.sample_disorder(p, n, seed=seed)
cat = critical.enumerate_critical(d, seed=0, saturation=True)

print("disorder seed %d, p=%d, n=%d" % (seed, p, n))
print("found %d critical points (saturated=%s)" % (len(cat.records), cat.saturated))

by_index = {}
for r in cat.records:
    by_index.setdefault(r.index, []).append(r.value / n)
print("\nindex  count  value/n range")
for idx in sorted(by_index):
    vals = by_index[idx]
    print("%5d  %5d  [%+.4f, %+.4f]" % (idx, len(vals), min(vals), max(vals)))

chi = sum((-1) ** r.index for r in cat.records)
print("\nMorse alternating sum = %d (Euler characteristic of S^%d is %d)"
      % (chi, n - 1, 1 + (-1) ** (n - 1)))

kr = critical.kac_rice_mean(p, n, (-np.inf, np.inf), seed=0)
print("Kac-Rice mean count over disorders = %.2f" % kr)
print("this realization's count           = %d" % len(cat.records))

deepest = cat.records[0]
print("\ndeepest minimum: H/n = %.6f, index %d" % (deepest.value / n, deepest.index))
