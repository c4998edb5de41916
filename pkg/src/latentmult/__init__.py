"""Markov and lattice bases for latent multinomial models.

Modules
-------
intlattice
    exact integer linear algebra: rank, Hermite normal form, kernel bases.
models
    configuration matrices for the supported model families and their
    latent count distributions.
bases
    move-set constructors, import/export and validation.
fiber
    fiber enumeration, connectivity audits and witness paths.
sampler
    Metropolis-Hastings updates for the latent counts inside a Gibbs loop.
fixtures, reproduce
    worked examples shipped as data and the checks run against them.
"""

from .moveset import MoveSet

__version__ = "0.1.0"
__all__ = ["MoveSet", "__version__"]
