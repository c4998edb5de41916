"""Why a lattice basis is not enough: the 3x3 table with fixed margins.

Builds the configuration matrix, enumerates the fiber of y = (5,3,2,0,4)
and audits it under the shipped lattice basis and Markov basis.

    python demos/contingency_audit.py
"""

from latentmult import fiber, fixtures

ex = fixtures.load("contingency")
F = fiber.enumerate_fiber(ex.spec.A, ex.y)
print(f"fiber of y = {ex.y.tolist()}: {len(F)} tables")
for name in ("lattice", "markov"):
    rep = fiber.connectivity(F, ex.moves[name])
    print(f"{name:8s} ({len(ex.moves[name])} moves): {rep.summary()}")

path = fiber.witness_path(F, ex.moves["markov"], ex.xs[0], ex.xs[1])
print(f"x1 -> x2 with Markov moves in {len(path.steps)} step(s):")
for state in path.states:
    print("  ", state.reshape(3, 3).tolist())
