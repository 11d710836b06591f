"""
The numerical core of `projeuler`: models, Brownian paths, the schemes and the
experiments built on them.
"""
