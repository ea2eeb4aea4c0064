"""Forward and phaseless inverse acoustic scattering with a reference ball.

Submodules
----------
specfun     Bessel, Hankel and Legendre functions with argument checks
geom        star-shaped boundaries, scenes and scene validation
series      disk and sphere separation-of-variables solutions
bie         2D combined-field Nystrom solver for several bodies
medium      2D Lippmann-Schwinger solver for penetrable scenes
phaseless   modulus datasets and cross-term extraction
retrieval   phase-sign resolution and gauge gaps
inversion   Levenberg-Marquardt reconstruction and BC classification
verify      identity check harness
cli         command-line entry point
"""

__version__ = "0.1.0"
