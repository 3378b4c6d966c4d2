"""A loop on an elliptic component: the limit tau mixes the genus-one theta
function of the component with one exponential, a soliton on a periodic wave.

The regularized theta of the degenerating family approaches it as s -> 0.
"""

from tropkp import convergence_report, kp_residual, load_example

ex = load_example("elliptic_loop")
rep = convergence_report(ex.family, ex.data, ex.alpha, ex.z, [1e-1, 1e-2, 1e-3, 1e-4, 1e-5])
for row in rep.rows:
    order = "" if row["order"] is None else f"  order {row['order']:.2f}"
    print(f"s={row['s']:.0e}  rel error {row['rel_error']:.2e}{order}")

res = kp_residual(ex.spec(), "x:-2:2:21,t2:-1:1:5,t3:-1:1:5")
print(f"KP residual {res.relative_residual:.2e}, {res.flagged} points flagged near zeros of tau")
