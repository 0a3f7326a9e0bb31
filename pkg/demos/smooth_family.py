"""Smooth oscillating maps x + sin(2 pi n x) / (2 pi n) at a fixed dyadic level.

As n grows the diagonal entries, rescaled by the cell length, approach the law
of 1 + cos(s) for uniform s. Its Mellin transform has the closed form
2^u Gamma(u + 1/2) / (sqrt(pi) Gamma(u + 1)), which serves as the oracle for
the trapezoid rule.

Run: python3 demos/smooth_family.py
"""
import numpy as np
from scipy.special import loggamma

from polymorph.measure import mellin_eval
from polymorph.pwl import smooth_family_entry, smooth_limit_mellin

LEVEL = 2
US = np.array([0.25, 0.5 + 1j, 0.75 - 2j, 1.0])


def closed_form(u):
    return np.exp(u * np.log(2) + loggamma(u + 0.5) - loggamma(u + 1)) / np.sqrt(np.pi)


def main():
    quad = smooth_limit_mellin(US)
    print("trapezoid vs closed form:", np.max(np.abs(quad - closed_form(US))))
    h = 2.0 ** -LEVEL
    # odd n keep the oscillation out of phase with the cells
    for n in (3, 9, 27, 81):
        m = smooth_family_entry(n, LEVEL, 1, 1)
        gap = np.max(np.abs(mellin_eval(m, US) / h - closed_form(US)))
        leak = 1.0 - m.mass() / h
        print(f"n={n:3d}  diagonal gap {gap:.2e}  mass leaving the cell {leak:.2e}")


if __name__ == "__main__":
    main()
