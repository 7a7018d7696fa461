"""
Numerical kernels: grid calculus, selection functions, Gauss-Hermite rules,
the mixing operator and the reference profiles.
"""
