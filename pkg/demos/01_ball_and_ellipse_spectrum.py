import numpy as np

from bmspectra import BodySpec, assemble_hilbert_forms, best_constant, best_even_constant, build_grid, make_body

# The Hilbert forms of the disc: the even gap is 1/4, which means p = -2.
grid = build_grid(2, 256)
disc = make_body(BodySpec.ball(2))
forms = assemble_hilbert_forms(disc, grid)
even = best_even_constant(forms)
print("disc, even constant:", even.best_constant, "implied p:", even.implied_p)

# Without the parity restriction the translations cos, sin win with constant 1.
full = best_constant(forms)
print("disc, unrestricted constant:", full.best_constant)

# Ellipses are linear images of the disc and the operator does not notice.
for a in (1.2, 2.0, 5.0):
    e = make_body(BodySpec.ellipsoid([a, 1.0]))
    c = best_even_constant(assemble_hilbert_forms(e, grid)).best_constant
    print(f"ellipse a={a}: even constant {c:.12f}")

# eigenvalues holds the Var/Dirichlet ratios, largest first; their
# reciprocals are the nonzero eigenvalues k^2 of the disc operator
ev = 1 / full.eigenvalues[:6]
print("leading eigenvalues of the disc:", np.round(ev, 8))

# In three dimensions the degree-2 harmonics give 1/6, p = -3.
ball3 = make_body(BodySpec.ball(3))
c3 = best_even_constant(assemble_hilbert_forms(ball3, build_grid(3, 20)))
print("ball n=3:", c3.best_constant, c3.implied_p)
