"""Michaelis-Menten kinetics near the origin.

Sweeps the spectral ratio kappa through 2, where the slow manifold picks up
an x^2 ln x term, and compares the power-series recursion with the relation
obtained from the iterates.
"""

import warnings

from sinkasym.mm import (eta_for_kappa, mm_expansion, mm_expansion_templates,
                         mm_spectrum, mm_system, sigma_recursion)
from sinkasym.relate import relate_via_basis

eps = 1.0
print(" kappa      eta      sigma_1    sigma_2    pole")
for kappa in (1.5, 1.9, 1.99, 2.0, 2.01, 2.5, 3.5):
    eta = eta_for_kappa(kappa, eps)
    s = sigma_recursion(eps, eta, 3)
    sig = s.sigmas + [float("nan")] * (2 - len(s.sigmas))
    print(f" {kappa:<6}  {eta:.6f}  {sig[0]:9.4f}  {sig[1]:9.4f}  {s.pole_index}")

print("\nat kappa = 2 the recursion breaks and a logarithm takes over:")
eta = 8.0 / 9.0
print("  recursion: ", mm_expansion(eps, eta).format({0: "x", 1: "y"}))
via = relate_via_basis(mm_system(eps, eta), (0.05, 0.01))
print("  iterates:  ", via.format({0: "x", 1: "y"}))

print("\nnear kappa = 2 both readings are offered:")
with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    templates = mm_expansion_templates(eps, eta_for_kappa(2.0 + 1e-4, eps))
for tmpl in templates:
    print("  ", tmpl.format({0: "x", 1: "y"}))
for w in caught:
    print("  warning:", w.message)

spec = mm_spectrum(eps, 0.5)
print(f"\neta = 1/2: kappa = {spec.kappa:.6f}, sigma_+ = {spec.sigma_plus:.6f}")
