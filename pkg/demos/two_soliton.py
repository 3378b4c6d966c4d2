"""Two loops on one rational component: the Delaunay set has four points
and the limit tau is a 2-soliton.  Perturbing B0 destroys the KP equation."""

from dataclasses import replace

from tropkp import TauSpec, delaunay_set, kp_residual, load_example

ex = load_example("two_loop")
D = delaunay_set(ex.B_C, ex.alpha)
print("tropical theta", D.value, "attained at", D.points)

good = kp_residual(ex.spec()).relative_residual
B0 = ex.data.B0.copy()
B0[0, 1] += 0.3
B0[1, 0] += 0.3
bad = TauSpec(replace(ex.data, B0=B0), ex.family, ex.alpha, ex.c)
print(f"residual {good:.2e}, with corrupted B0 {kp_residual(bad).relative_residual:.2e}")
