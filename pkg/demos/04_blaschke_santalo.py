import numpy as np

from bmspectra import BodySpec, HomogeneousPotential, make_body
from bmspectra.euclidean import power_potential
from bmspectra.santalo import (
    BSInput,
    ConvexFunction,
    bs_ratio,
    bs_set_ratio,
    bs_set_ratio_montecarlo,
    orthant_concavity_margin,
    random_perturbation,
)

# Gaussian equality family: every c x^2/2 gives exactly 1.
gauss = power_potential(2, 1)
for c in (0.2, 1.0, 5.0):
    f = ConvexFunction.parse(f"{c}*x**2/2", 1, conjugate=lambda y, c=c: np.sum(y**2, axis=-1) / (2 * c))
    print("c =", c, bs_ratio(BSInput(gauss, f)))

# Phi = (|x1|^3 + |x2|^3)/3 and random even convex perturbations of it.
# f* is computed numerically for these.
pot = power_potential(3, 2)
z = np.random.default_rng(0).uniform(0.05, 3, (200, 2))
print("orthant concavity margin:", orthant_concavity_margin(pot, 3.0, z))
ratios = [bs_ratio(BSInput(pot, random_perturbation(pot, s))) for s in range(10)]
print("perturbed ratios:", np.round(ratios, 6))

# The l^4 norm squared is not concave in the orthant coordinates for p = 2.
l4 = HomogeneousPotential(make_body(BodySpec.lq(4, 2)), 2.0)
print("l4 norm squared, p=2:", orthant_concavity_margin(l4, 2.0, z))

# Set version with Phi = |x|^2/2: ellipses give 1, as linear images of the disc.
disc = HomogeneousPotential(make_body(BodySpec.ball(2)), 2.0)
ell = make_body(BodySpec.ellipsoid([2.0, 0.5]))
print("set ratio, ellipse:", bs_set_ratio(ell, disc))
print("Monte Carlo:", bs_set_ratio_montecarlo(ell, disc, samples=200_000, seed=1))
