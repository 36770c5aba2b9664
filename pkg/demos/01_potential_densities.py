#!/usr/bin/env python3
"""Potential densities of killed Levy processes, three ways.

The potential density v(y) is the expected total local time at level y.
For killed Brownian motion with rate 1/2 it is e^-|y|; adding a jump atom
deforms it asymmetrically.  We tabulate v by closed form, by Fourier
inversion of -1/psi(i theta), and by an occupation histogram over sampled
paths, and overlay the three.
"""
import numpy as np

from ssmt.levy import (
    CLOSED_FORM,
    FOURIER,
    MONTE_CARLO,
    LevyCharacteristics,
    cramer_root,
    esscher_tilt,
    potential_density,
)

grid = np.linspace(-5.0, 5.0, 201)

print("== killed Brownian motion (sigma^2 = 1, q = 1/2) ==")
bm = LevyCharacteristics(sigma2=1.0, drift=0.0, jump_atoms=(), kill_rate=0.5)
closed = potential_density(bm, grid, method=CLOSED_FORM)
fourier = potential_density(bm, grid, method=FOURIER)
mc = potential_density(bm, grid, method=MONTE_CARLO, n_paths=20_000,
                       rng=np.random.default_rng(0))
print(f"max |fourier - e^-|y|| = {np.max(np.abs(fourier.values - np.exp(-np.abs(grid)))):.2e}")
for y in (-2.0, -0.5, 0.0, 1.0):
    print(f"  v({y:+.1f}): closed {closed(y):.4f}  fourier {fourier(y):.4f}  "
          f"monte carlo {mc(y):.4f}")

print("\n== with a downward jump atom at ln(1/2) ==")
jumpy = LevyCharacteristics(sigma2=1.0, drift=-0.5 + np.log(0.5),
                            jump_atoms=((float(np.log(0.5)), 1.0),),
                            kill_rate=0.25)
tab = potential_density(jumpy, grid, method=FOURIER)
print("the maximum stays at 0, the mass leans to the negative side:")
for y in (-2.0, -1.0, 0.0, 1.0, 2.0):
    print(f"  v({y:+.1f}) = {tab(y):.4f}")

print("\n== Esscher tilt moves potentials by an exponential factor ==")
beta = 0.5
tilted = potential_density(esscher_tilt(jumpy, beta), grid, method=FOURIER)
worst = max(abs(tilted(y) - np.exp(beta * y) * tab(y)) for y in (-3, -1, 0, 1, 3))
print(f"max |v_beta(y) - e^(beta y) v(y)| over probes = {worst:.2e}")

print("\n== Cramer root and the deep-tail asymptote ==")
rho, psi_prime = cramer_root(bm)
wide = potential_density(bm, np.linspace(-10, 10, 2001), method=FOURIER)
print(f"rho = {rho:.6f}, psi'(rho) = {psi_prime:.6f}")
print(f"e^(rho y) v(y) at y = -8: {np.exp(rho * -8) * wide(-8.0):.6f} "
      f"(limit -1/psi'(rho) = {-1 / psi_prime:.6f})")
