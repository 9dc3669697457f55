"""Numerical toolkit for the value distribution of zeta-type functions.

Modules:
    coeffs     Dirichlet-series coefficient algebra and Euler products
    funceq     functional-equation factor Delta and synthetic class members
    zeta       zeta-function backends, truncated Euler products, Gonek's model
    evaluator  evaluator interface, Cauchy derivatives, branch-tracked logs
    apoints    a-point counting, location and Littlewood's identity
    scaling    rescaled families near the critical line
    torus      truncated infinite-dimensional torus
    moments    moments off density-zero block sets
    clt        value distribution on the critical line
    cli        command-line front end
"""
__version__ = "0.1.0"
