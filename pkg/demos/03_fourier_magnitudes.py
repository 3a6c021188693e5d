"""Sparse signals from Fourier magnitudes.

|DFT|^2 of the zero-padded signal is the DFT of its autocorrelation, so
recovery runs in two steps: a sparse autocorrelation from the magnitudes,
then the signal from the autocorrelation (a turnpike-type problem).
Uniqueness is up to sign, mirroring and shifts.

Run:  python demos/03_fourier_magnitudes.py
"""
import numpy as np

from sparsepr import (autocorrelation, check_fmm_conditions, fmm_recover, fourier_rows,
                      intensity_measure, is_collision_free, next_valid_N, random_collision_free_signal)

m, k = 12, 3
n = next_valid_N(k)  # smallest prime above 2(k^2-k+1)
x0 = random_collision_free_signal(m, k, seed=21)
print("x0 =", x0, " collision free:", is_collision_free(x0, mode="strict")[0])
print("autocorrelation:", autocorrelation(x0))
print("conditions:", check_fmm_conditions(x0, n).verdict.value, f"(N = {n})")

freqs = range(n)
y = intensity_measure(fourier_rows(m, freqs), x0)
rep = fmm_recover(y, freqs, m, k)
print("x_hat =", np.round(rep.solution, 6), " unique:", rep.unique)

# a collision ({0,1,3,4}: 1-0 == 4-3) voids the guarantee
x = np.zeros(m)
x[[0, 1, 3, 4]] = [1, 2, 3, 1]
print("\ncollision example:", check_fmm_conditions(x, next_valid_N(4)).reasons)
