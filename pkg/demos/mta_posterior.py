"""Abundance posterior under model M_t-alpha with two different move sets.

Runs the Gibbs sampler from the same start with the unit-column Markov basis
and with a lattice basis, then compares the histograms of N. The lattice
chain cannot leave a small corner of the fiber, so its N-distribution is
visibly different.

    python demos/mta_posterior.py [iterations]
"""

import sys

from latentmult import fixtures, reproduce, sampler

iterations = int(sys.argv[1]) if len(sys.argv) > 1 else 50_000
ex = fixtures.load("mta")
mb1, mb2, lb = reproduce.posterior_n(ex, iterations, seeds=(1, 2), parallel=False)
for label, s in (("Markov, seed 1", mb1), ("Markov, seed 2", mb2), ("lattice", lb)):
    q = s.quantiles
    print(f"{label:15s} N median {q[0.5]:.0f}, 95% interval [{q[0.025]:.0f}, {q[0.975]:.0f}]")
print(f"TV between Markov seeds   {sampler.total_variation(mb1, mb2):.3f}")
print(f"TV Markov vs lattice      {sampler.total_variation(mb1, lb):.3f}")
