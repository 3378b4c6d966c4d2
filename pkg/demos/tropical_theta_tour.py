"""Tropical theta on the theta graph: how the optimal lattice points and the
achieving linear forms change as the edge lengths vary."""

from fractions import Fraction

from tropkp import cycle_basis, delaunay_set, parse_tropical_curve, symbolic_period_matrix
from tropkp.tropical_period import specialize
from tropkp.tropical_theta import maximal_forms_at

curve = parse_tropical_curve({
    "vertices": [{"id": "a", "weight": 0}, {"id": "b", "weight": 0}],
    "edges": [{"id": f"e{i}", "tail": "a", "head": "b", "length": "1"} for i in (1, 2, 3)],
})
B_sym = symbolic_period_matrix(cycle_basis(curve))
half, third = Fraction(1, 2), Fraction(1, 3)

for alpha in ((half, half), (half, 0), (third, third)):
    print("alpha =", tuple(str(a) for a in alpha))
    for lengths in ({"e1": 1, "e2": 1, "e3": 1}, {"e1": 1, "e2": 4, "e3": 1}):
        D = delaunay_set(specialize(B_sym, lengths), alpha)
        forms = maximal_forms_at(B_sym, lengths, alpha)
        print("  ", lengths, "Theta =", D.value, "points", D.points)
        for f in forms:
            print("      form", f.form, "witnesses", f.witnesses)
