import numpy as np

from bmspectra import BodySpec, assemble_gauge_forms, assemble_hilbert_forms, best_even_constant, build_grid, make_body
from bmspectra.criteria import pinch_lambda, qij_report, sample_orthant_points

# l^q balls have flat pieces of curvature on the axes, so the sphere
# computations use the smoothed gauge with a small eps.
for eps in (0.5, 0.35, 0.25):
    body = make_body(BodySpec.lq(3, 2, eps=eps))
    row = []
    for N in (256, 512, 1024):
        grid = build_grid(2, N)
        row.append(best_even_constant(assemble_hilbert_forms(body, grid)).best_constant)
    print(f"eps={eps}: even constant at N=256/512/1024:", np.round(row, 8))

# The two sides of the duality give the same number.
body = make_body(BodySpec.lq(3, 2, eps=0.25))
grid = build_grid(2, 1024)
h_side = best_even_constant(assemble_hilbert_forms(body, grid)).best_constant
phi_side = best_even_constant(assemble_gauge_forms(body, grid)).best_constant
print("h side", h_side, "phi side", phi_side)
print("pinch lambda and its p:", pinch_lambda(body, grid))

# The exact l^q ball has Q_ij = 1 - q at every admissible point.
rep = qij_report(make_body(BodySpec.lq(3, 3)), sample_orthant_points(3, 200, seed=1))
print("Q_ij range:", rep.offdiagonal().min(), rep.offdiagonal().max())
print("criterion margin:", rep.min_margin, "holds:", rep.condition_holds)

# n = 3 converges slowly in the harmonic degree, roughly like 1/L^3 here.
body3 = make_body(BodySpec.lq(3, 3, eps=0.3))
for L in (16, 24, 32):
    c = best_even_constant(assemble_hilbert_forms(body3, build_grid(3, L))).best_constant
    print(f"n=3, L={L}: {c:.6f}  (log-BM bound 1/3)")
