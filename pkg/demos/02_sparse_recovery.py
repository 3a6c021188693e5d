"""Exact recovery of sparse signals from fewer than 2M-1 intensities.

A k-sparse signal needs only about 4k-1 generic measurements. Recovery
enumerates supports and solves a linear system in the lifted unknowns
x_i x_j.

Run:  python demos/02_sparse_recovery.py
"""
import numpy as np

from sparsepr import (gaussian_ensemble, has_k_complement_property, intensity_measure, l0_recover,
                      random_sparse_signal, verify_uniqueness)

m, k = 8, 2
n = 4 * k - 1
phi = gaussian_ensemble(m, n, seed=3)
print(f"{n} vectors in R^{m};  2k-complement property:", has_k_complement_property(phi, 2 * k)[0])

x0 = random_sparse_signal(m, k, seed=3, stream=1)
y = intensity_measure(phi, x0)
rep = l0_recover(phi, y, k)
print("x0     =", np.round(x0, 4))
print("x_hat  =", np.round(rep.solution, 4))
print("unique:", rep.unique, " residual:", rep.residual, " flags:", rep.flags)

# per-signal check: does anything else of sparsity <= k fit the data?
print("verdict:", verify_uniqueness(phi, x0).status.value)

# too few measurements: two sparse signals can share every intensity
phi = [[1.0, 1.0], [1.0, -1.0]]
rep = l0_recover(phi, intensity_measure(phi, [2.0, 1.0]), 2)
print("\nunderdetermined:", rep.flags, [np.round(z, 3) for z in [rep.solution] + rep.alternates])
