"""Root structure of the Gauss stability function on the unit modulus set.

For each stage count the script sweeps the angle theta and solves
R_m(z) = e^{i theta}, confirming that every unit-modulus root sits on the
imaginary axis and that each root branch crosses outward (slope beta >= 1,
with equality only at the origin).  It also prints the closed-form m = 3
values: the nonzero roots of R_3(z) = 1 are +-i sqrt(60) and the outward
slope there is exactly 5/2.
"""

import math

import numpy as np

from rkcq.stability import beta_coefficient, beta_from_residue, m_theta_roots


def sweep(m, npts=361):
    max_re = 0.0
    bmin, bmax = np.inf, -np.inf
    for theta in np.linspace(-math.pi, math.pi, npts):
        rs = m_theta_roots(m, theta)
        if rs.y.size == 0:
            continue
        max_re = max(max_re, float(np.abs(rs.roots.real).max()))
        bmin = min(bmin, rs.betas.min())
        bmax = max(bmax, rs.betas.max())
    return max_re, bmin, bmax


def main():
    for m in range(1, 5):
        max_re, bmin, bmax = sweep(m)
        print("m=%d  max|Re root| %.2e   beta range [%.9f, %.3f]"
              % (m, max_re, bmin, bmax))
    y = math.sqrt(60.0)
    print()
    print("m=3 exact check at y = sqrt(60):")
    print("  algebraic slope   %.15f" % beta_coefficient(3, y))
    print("  implicit-function %.15f" % beta_from_residue(3, y))


if __name__ == "__main__":
    main()
