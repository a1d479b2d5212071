"""
Hamiltonian 1-forms and their brackets on R^3
==============================================

The volume form dx^dy^dz is closed and nondegenerate as a 3-form, so every
1-form F with dF = -i_v omega for some v is an observable.  Walk through one
pair of them by hand.
"""

from twoplectic.forms import interior_product, parse_form
from twoplectic.plectic import (
    alternator,
    hamiltonian_vector_field,
    hemi_bracket,
    make_volume_plectic,
    semi_bracket,
)

P = make_volume_plectic(3)
print("omega =", P.omega)
print("nondegenerate at", P.certificate.points, "sample points")

F = hamiltonian_vector_field(P, parse_form("x * dy", P.chart))
G = hamiltonian_vector_field(P, parse_form("y * dz", P.chart))
print("v_F =", F.v)
print("v_G =", G.v)

# the two brackets share a vector field but not a form
print("semi bracket:", semi_bracket(P, F, G).form)
print("hemi bracket:", hemi_bracket(P, F, G).form)

# their difference is exact: d of i_{v_F} G
print("i_{v_F} G =", interior_product(F.v, G.form))

# the hemi bracket is antisymmetric only up to d of the alternator
print("alternator S(F, G) =", alternator(F, G))
print("hemi(F,G) + hemi(G,F) =", hemi_bracket(P, F, G).form + hemi_bracket(P, G, F).form)
