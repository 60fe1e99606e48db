"""Top norm rate of the triangular family on l^2, as the Birkhoff average of
log(s + h(x)), h(x) = g (1 + eta cos 2 pi x_1): the one-step operator is
s I + h S with S the unilateral shift."""

import math

from scipy.integrate import quad

s, g, eta = 1.1, 1.0, 0.25
val, err = quad(lambda t: math.log(s + g * (1 + eta * math.cos(2 * math.pi * t))), 0, 1, epsabs=1e-14)
print(f"{val:.17e} (quadrature error {err:.1e}); log s = {math.log(s):.17e}")
