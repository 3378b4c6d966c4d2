"""A single loop of length 2 with nodes at 1 and -1.

The limit tau is 1 + exp(phi) / 2 and u is a sech^2 soliton of height 1
travelling with speed -1 in t3.
"""

import numpy as np

from tropkp import kp_residual, load_example, tau_limit, u_from_tau

ex = load_example("single_loop")
spec = ex.spec()

print("B_C =", ex.B_C.to_json(), " B0 =", np.round(ex.data.B0[0, 0], 6))
print("tau(0) =", tau_limit(spec, [0, 0, 0]))

x = np.linspace(-3, 3, 601)
for t3 in (0.0, 1.0):
    u = u_from_tau(spec, x, 0.0, t3).real
    print(f"t3={t3}: peak {u.max():.6f} at x={x[u.argmax()]:+.2f}")

rep = kp_residual(spec)
print(f"KP residual {rep.relative_residual:.2e} over {rep.npoints} grid points")
