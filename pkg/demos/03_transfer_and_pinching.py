import numpy as np

from bmspectra.criteria import (
    p_from_Calpha,
    params_from_p,
    pinch_threshold,
    product_constant,
    transfer_backward,
    transfer_forward,
)

# From a Brascamp-Lieb constant C_alpha of the measure to the sphere constant
# and the exponent p of the local inequality.
n, alpha = 3, 2.0
for C in np.linspace(1 - 1 / alpha, 1, 6):
    c_nu = transfer_forward(n, alpha, C)
    print(f"C_alpha={C:.2f}  C_nu={c_nu:.5f}  p={p_from_Calpha(n, alpha, C):+.4f}  "
          f"back={transfer_backward(n, alpha, c_nu):.5f}")

# Going the other way from a target p < 0.
print("p=-4, n=4 ->", params_from_p(4, -4))

# Product measures exp(-sum |x_i|^q/q): 1 - 1/q, but never below 1/2 in n >= 2.
for q in (1.5, 2, 3, 4):
    print(f"q={q}: n=1 {product_constant(q, 1):.4f}  n=2 {product_constant(q, 2):.4f}")

# alpha/beta ratio at which the pinching estimate reaches p = 0
for n in (2, 3, 4, 10):
    print(n, pinch_threshold(n))
