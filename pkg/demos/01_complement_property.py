"""Which measurement ensembles determine a real signal up to sign?

Run:  python demos/01_complement_property.py
"""
import numpy as np

from sparsepr import (ambiguity_from_violation, gaussian_ensemble, has_complement_property,
                      intensity_measure)

# ----------------------------------------------------------------------
# 2M-1 generic vectors are enough, 2M-2 never are

for m in range(2, 6):
    rates = []
    for n in (2 * m - 2, 2 * m - 1):
        rates.append(np.mean([has_complement_property(gaussian_ensemble(m, n, s))[0] for s in range(50)]))
    print(f"M={m}:  N=2M-2 -> {rates[0]:.0%}   N=2M-1 -> {rates[1]:.0%}")

# ----------------------------------------------------------------------
# a failure comes with a certificate, and the certificate with a
# counterexample: two signals that are not +-each other but look identical

phi = gaussian_ensemble(3, 4, seed=11)
ok, cert = has_complement_property(phi)
print("\nholds:", ok, " S =", cert.S, " complement =", cert.S_complement)
x1, x2 = ambiguity_from_violation(phi, cert)
print("x1 =", np.round(x1, 4))
print("x2 =", np.round(x2, 4))
print("max |y1 - y2| =", np.max(np.abs(intensity_measure(phi, x1) - intensity_measure(phi, x2))))
