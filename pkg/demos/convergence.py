"""Convergence of the scheme on the first manufactured problem.

Refining tau halves the error (first order). Refining h with a fine tau
quarters it until the temporal error takes over.
"""

from fracwave import converge_table, manufactured_case

case = manufactured_case("ex1")
for vary, levels, fixed in (("temporal", (4, 5, 6, 7), 6), ("spatial", (2, 3, 4, 5), 12)):
    tab = converge_table(case, vary, levels, fixed)
    print(f"{vary} refinement")
    for row in tab.rows():
        print("  ", row)
