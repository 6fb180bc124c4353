"""germlin: desk-scale linearization toolkit for neighborhoods of toroidal
groups and Hopf hypersurfaces.

Submodules
----------
series     sparse Laurent/Taylor series arithmetic and grid norms
toroidal   period/gluing matrices, standard coordinates, domain geometry
divisors   small-divisor scans and cohomological-equation solvers
linearize  vertical/full linearization iterations and majorant certificates
hopf       Hopf-manifold eigenvalue groups, coverings, vanishing criteria
cli        batch command-line surface and report emission
"""

__version__ = "0.1.0"
