"""
Coherence of the two Lie 2-algebras
===================================

Build both flavours on the 12-dimensional string phase space, run every
coherence diagram over the default battery, and compare them through the
isomorphism.  Then break the bracket on purpose and watch the checker notice.
"""

import dataclasses

from twoplectic.lie2 import (
    build_hemistrict,
    build_isomorphism,
    build_semistrict,
    string_battery,
    verify_coherence,
    verify_homomorphism,
)
from twoplectic.strings import build_phase_space

S = build_phase_space(3)
chains = string_battery(S)
print(len(chains.chains), "Hamiltonian 1-forms,", len(chains.functions), "functions")

for build in (build_hemistrict, build_semistrict):
    L = build(S.plectic)
    print(verify_coherence(L, chains).format())

for h in build_isomorphism(S.plectic):
    print(verify_homomorphism(h, chains).format())


# flip the sign of the bracket's form but leave its vector field alone
def broken(L):
    def bracket(F, G):
        B = L.bracket(F, G)
        return dataclasses.replace(B, form=-B.form)

    return dataclasses.replace(L, bracket=bracket)


report = verify_coherence(broken(build_semistrict(S.plectic)), chains)
print(report.format())
print("ok" if report.ok else "caught the fault")
