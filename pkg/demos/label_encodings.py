"""
Temperature label encodings
===========================

Temperatures in -20..49 C map onto 70 one-degree classes. A one-hot
label puts all mass on the true class; the local distribution encoding
(LDE) spreads a normalized Gaussian bump of width sigma over the
neighboring classes, so a prediction two degrees off is penalized less
than one twenty degrees off.
"""

import numpy as np

from scenetemp import decode, encode_lde, encode_one_hot, temp_to_index

np.set_printoptions(precision=3, suppress=True)

temp = 12.0
idx = temp_to_index(temp)
print(f"temperature {temp} C -> class index {idx}")

# the one-hot label: a single spike
one = encode_one_hot(temp)
print("\none-hot, classes 28..36:")
print(one[28:37])

# LDE bumps at different widths, shown around the same class
for sigma in (0.5, 2.0, 3.5):
    vec = encode_lde(temp, sigma)
    print(f"\nLDE sigma={sigma}, classes 28..37:")
    print(vec[28:38])
    print(f"  sums to {vec.sum():.9f}, "
          f"mass within +-2 C: {vec[idx - 2:idx + 3].sum():.3f}")

# as sigma shrinks the bump collapses onto the one-hot spike
gap = np.abs(encode_lde(temp, 1e-3) - one).max()
print(f"\nmax |LDE(sigma=1e-3) - one-hot| = {gap:.2e}")

# both encodings decode back to the encoded degree
print("\nround trips:")
for t in (-20.0, -3.0, 0.0, 27.0, 49.0):
    back_one = decode(encode_one_hot(t))
    back_lde = decode(encode_lde(t, 3.5))
    print(f"  {t:6.1f} C -> one-hot {back_one:6.1f}, LDE {back_lde:6.1f}")

# expectation decoding reads a soft prediction's weighted mean
vec = 0.5 * encode_one_hot(10.0) + 0.5 * encode_one_hot(14.0)
print(f"\n50/50 mixture of 10 C and 14 C decodes to "
      f"{decode(vec, mode='expectation'):.1f} C by expectation "
      f"({decode(vec):.1f} C by argmax)")
