"""The Chebyshev spectral filter next to its eigen-decomposition form.

A normalized Chebyshev sum of the scaled Laplacian equals U g(lambda) U^T,
and rescaling the coefficients leaves it unchanged.
"""
import numpy as np

from magtrans.spectral import chebyshev_filter, normalized_laplacian, scaled_laplacian

rng = np.random.default_rng(0)
w = np.triu(rng.random((6, 6)), 1)
e = w + w.T
lt = scaled_laplacian(normalized_laplacian(e))
theta = np.array([0.6, 0.3, 0.1])

filt = chebyshev_filter(lt, theta)
lam, u = np.linalg.eigh(lt)
g = np.polynomial.chebyshev.chebval(lam, theta) / theta.sum()
print("eigenvalues of the scaled Laplacian:", np.round(lam, 4).tolist())
print("max |filter - U g U^T| =", np.max(np.abs(filt - (u * g) @ u.T)))
print("max |filter(10 theta) - filter(theta)| =", np.max(np.abs(chebyshev_filter(lt, 10 * theta) - filt)))
