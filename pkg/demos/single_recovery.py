"""One recovery from start to finish, against the theoretical prediction.

Generates a row-orthogonal instance at half sampling, runs the damped
expectation-consistent iteration with the matched spectral function, and
compares the realized error with the large-system prediction for the same
parameters.  Also runs the mismatched solver (i.i.d. spectrum assumed) on the
same instance to show the cost of ignoring the matrix structure.
"""

import numpy as np

from ecrec import (
    EnsembleKind,
    EnsembleSpec,
    GFunction,
    PriorBG,
    amp_baseline,
    ec_solve,
    make_instance,
    nmse,
    replica_fixed_point,
)

N, M, SIGMA2 = 1024, 512, 0.01
prior = PriorBG(rho=0.1, sigma_x2=1.0)

spec = EnsembleSpec(EnsembleKind.ROW_ORTHOGONAL, n=N, m=M)
obs = make_instance(spec, prior, SIGMA2, seed=2024)
g = GFunction.row_orthogonal(obs.alpha)

state = ec_solve(obs, prior, g)
print(f"matched solver:    {state.iterations} iterations, converged={state.converged}")
print(f"  nmse           = {nmse(state.m, obs.x0):.5e}")
print(f"  chi (variance) = {state.chi:.5e}")

fp = replica_fixed_point(prior, SIGMA2, obs.alpha, g)
print(f"theory (N -> inf): nmse = {fp.mmse / prior.q0:.5e}, chi = {fp.chi:.5e}")

# Support recovery: threshold the posterior mean at half the slab deviation.
found = np.abs(state.m) > 0.5
true = obs.x0 != 0.0
print(f"  support: {np.sum(found & true)} of {np.sum(true)} hits,"
      f" {np.sum(found & ~true)} false alarms")

mismatched = amp_baseline(obs, prior)
print(f"\nmismatched solver (iid spectrum assumed on the same instance):")
print(f"  nmse           = {nmse(mismatched.m, obs.x0):.5e}")
print("  the matched spectrum buys a smaller error on the identical data")
