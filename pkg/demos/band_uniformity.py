"""Uniform sampling over the 120 band-misreading histories.

Enumerates the fiber, shows how the lattice basis splits it and checks
that a uniform-target chain with the imported Markov basis visits every
element about equally often.

    python demos/band_uniformity.py [iterations]
"""

import sys

import numpy as np

from latentmult import fiber, fixtures, intlattice, models, sampler

iterations = int(sys.argv[1]) if len(sys.argv) > 1 else 200_000
ex = fixtures.load("bandmisread")
F = fiber.enumerate_fiber(ex.spec.A, ex.y)
hnf = intlattice.kernel_lattice_basis(ex.spec.A)
print("HNF lattice basis:", fiber.connectivity(F, hnf).summary())
print("Markov basis:     ", fiber.connectivity(F, ex.moves["markov"]).summary())

cfg = sampler.SamplerConfig(iterations, seed=1, record=("errors",), track_states=True)
out = sampler.run_chain(models.uniform_model(ex.spec), ex.moves["markov"], cfg, ex.xs[0])
counts = np.array([out.state_counts.get(tuple(r), 0) for r in F.elements.tolist()])
print(f"visits per element: min {counts.min()}, max {counts.max()}, expected {iterations / len(F):.0f}")
truth = fiber.error_count_distribution(F, ex.spec)
seen = sampler.summarize(out, "errors").frequencies()
print("errors  exact  sampled")
for k in sorted(truth):
    print(f"{k:6d}  {truth[k] / len(F):.3f}  {seen.get(k, 0) / len(out):.3f}")
