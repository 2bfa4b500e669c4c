"""Convergence of Runge-Kutta convolution quadrature for scalar kernels.

Applies the discrete convolution with kernel K(s) = s^mu to a smooth
causal signal and prints the error against a fine reference for a ladder
of step counts.  Negative mu smooths (full order 2m), mu = 0 shows the
intermediate rate, and positive mu on an even stage count stalls.
"""

import numpy as np

from rkcq.engine import apply_cq, compute_weights, sample_stage_signal, scalar_reference_solution
from rkcq.kernels import kmu_transfer, sin_pow_exp
from rkcq.tableaux import gauss_tableau


def error_ladder(m, mu, T=3.0, N_list=(16, 32, 64, 128), N_ref=1024):
    # the reference is always the 3-stage solution on the fine grid: a
    # stagnating method self-converges against its own refinements, so the
    # reference must come from a method that actually converges
    tab = gauss_tableau(m)
    K = kmu_transfer(mu)
    ref = scalar_reference_solution(K, sin_pow_exp, T, N_ref, gauss_tableau(3))
    errors = []
    for N in N_list:
        ws = compute_weights(K, tab, T / N, N)
        g = sample_stage_signal(sin_pow_exp, T / N, N, tab.c)
        u = apply_cq(ws, g)
        stride = N_ref // N
        errors.append(np.abs(u - ref[::stride]).max())
    return errors


def main():
    N_list = (16, 32, 64, 128)
    for m, mu in ((2, -1.0), (2, 0.0), (2, 1.0), (3, 1.0)):
        errors = error_ladder(m, mu, N_list=N_list)
        print("stages m=%d, kernel s^%g" % (m, mu))
        prev = None
        for N, err in zip(N_list, errors):
            eoc = "" if prev is None else "  eoc %.2f" % np.log2(prev / err)
            print("  N=%4d  error %.3e%s" % (N, err, eoc))
            prev = err
        print()


if __name__ == "__main__":
    main()
