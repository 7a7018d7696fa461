"""
Verification harness: Hopf-Cole decomposition, weighted norms, the self-test
suite and the eps convergence sweep.
"""
