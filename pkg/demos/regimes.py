"""
Which psi-series exist for a given lambda
=========================================

The leading balance fixes the resonances; their nature decides whether a
convergent psi-series exists at all.  Sweep a few coupling values through
both leading-order branches and print the verdict.
"""

from fractions import Fraction

from hhpsi import classify

for branch, lam in [("i", "1"), ("i", "-2"), ("i", "-24/23"), ("i", "-4/5"),
                    ("i", "-1/2"), ("i", "-1/4"),
                    ("ii", "1/96"), ("ii", "-1/4"), ("ii", "1/48"), ("ii", "1/12")]:
    rep = classify(Fraction(lam), branch=branch)
    res = ", ".join(r["exact"] for r in rep.to_json()["resonances"])
    flag = "viable" if rep.viable else "out of scope"
    print(f"{branch:>2}  lambda={lam:>7}  {rep.case.value:<24} n={rep.n}  [{res}]  {flag}")

# The two boundary points are exact rationals, so the repeated resonance
# is detected structurally rather than by a floating tolerance.
print(classify(Fraction(-24, 23)).status)
print(classify(Fraction(1, 48), branch="ii").status)
