"""Which rate law tracks the complex concentration better?

The quasi-steady-state law H(x) = x/(1+x) misses the slow manifold at first
order.  The law alpha(x) = x/(1/sigma_+ + x) matches its slope, and its error
decays at twice the slow rate, or with an extra factor t when kappa = 2.
"""

from pathlib import Path

from sinkasym.mm import eta_for_kappa, rate_law_errors

out = Path(__file__).parent / "output"
out.mkdir(exist_ok=True)
for kappa in (1.5, 2.0, 3.0 + 2 ** 1.5):
    eta = eta_for_kappa(kappa, 1.0)
    r = rate_law_errors(1.0, eta)
    print(f"kappa = {kappa:.4f} (eta = {eta:.4f})")
    print(f"  QSSA error rate  {r.qssa_fit.params['rate']:+.4f}")
    print(f"  alpha error rate {r.alpha_fit.params['rate']:+.4f}")
    print(f"  class {r.selected_class} (predicted {r.predicted_class})")
    (out / f"rate_laws_kappa{kappa:.2f}.csv").write_text(r.to_csv())
