"""The Bernoulli-Gaussian scalar denoiser and its mmse curve.

Inside the solver every coordinate sees a scalar Gaussian channel with
precision E and natural parameter h.  The posterior mean under the
spike-and-slab prior is a soft shrinkage: near h = 0 the spike mass pulls the
estimate to zero, for large |h| it approaches the plain Gaussian shrinkage
h / (E + 1/sigma_x2).
"""

import numpy as np

from ecrec import PriorBG, posterior_mean, posterior_second_moment, scalar_mmse

prior = PriorBG(rho=0.1, sigma_x2=1.0)

print("posterior mean vs raw channel value (E = 4):")
print(f"{'h':>6} {'mean':>10} {'variance':>10} {'gaussian shrinkage':>20}")
for h in (0.0, 0.5, 1.0, 2.0, 4.0, 8.0):
    m = posterior_mean(h, 4.0, prior)
    var = posterior_second_moment(h, 4.0, prior) - m * m
    print(f"{h:>6.1f} {m:>10.5f} {var:>10.5f} {h / (4.0 + 1.0):>20.5f}")

# mmse(E) integrates the squared error over the channel; it interpolates
# between the prior variance (E -> 0, nothing learned) and 0 (E -> inf).
print(f"\nprior second moment rho * sigma_x2 = {prior.q0}")
print(f"{'E':>8} {'mmse':>14}")
for e in (0.0, 0.1, 1.0, 10.0, 100.0, 1000.0):
    print(f"{e:>8g} {scalar_mmse(e, prior):>14.8e}")

# Sanity by simulation: draw x0 from the prior, pass it through the channel,
# denoise, and compare the empirical squared error with the quadrature value.
rng = np.random.default_rng(7)
n = 200_000
e = 10.0
x0 = rng.normal(0.0, 1.0, n) * (rng.random(n) < prior.rho)
h = e * x0 + rng.normal(0.0, np.sqrt(e), n)
err = np.mean((posterior_mean(h, e, prior) - x0) ** 2)
print(f"\nempirical mse at E = {e}: {err:.6f}  (quadrature {scalar_mmse(e, prior):.6f})")
