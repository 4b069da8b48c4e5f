"""Numerical constants used by the criterion and the penalties."""
import math

SQRT2 = math.sqrt(2.0)
INV_SQRT2 = math.sqrt(0.5)  # correctly rounded, unlike 1/SQRT2

c0 = (1.0 - INV_SQRT2) / 8.0
c1 = 2.0 * (7.0 + 4.0 * SQRT2)
c1_prime = 2.0 * (c1 - 1.0)
c2 = 1.0 + INV_SQRT2
kappa = 357.0
c3 = 8.0 * c2 * kappa
c4 = 2.5 * c3

# width of the near-minimizer set of the criterion
SLACK = kappa / 10.0

# Lipschitz constant of psi on [0, inf)
PSI_LIPSCHITZ = 1.143
