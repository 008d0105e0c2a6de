"""Solve the first manufactured problem with both solvers and compare."""

import numpy as np

from fracwave import manufactured_case, run_fdac, run_tss

case = manufactured_case("ex1")
setup = case.setup(N=256, h_exp=6)

tss = run_tss(setup).frames
fdac = run_fdac(setup).frames
print(f"max |TSS - FDAC| / max |TSS| = {np.max(np.abs(tss - fdac)) / np.max(np.abs(tss)):.2e}")

exact = case.exact_at(case.T)(setup.mesh.nodes)
err = np.sqrt(setup.mesh.h * np.sum((fdac[-1] - exact) ** 2))
print(f"discrete L2 error at T: {err:.3e}")
