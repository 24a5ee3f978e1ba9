"""Scalar per-RE LMMSE kernel that tallies real multiplications.

Conventions: a complex product costs 4 real multiplications, ``|z|^2`` and
``Re(a b)`` cost 2, a real-times-complex product costs 2. Divisions and
reciprocals are not counted. The matrix inverse uses the Hermitian sweep
operator, touching only the upper triangle.
"""

from __future__ import annotations

import numpy as np

from mdx.autodiff.nn import MultCounter


def _cmul(a, b, counter):
    counter.add(4)
    return a * b


def _hermitian_inverse(A, counter):
    """Invert a Hermitian PD matrix in place by sweeping every pivot.

    Per pivot: the pivot row is scaled by the real reciprocal ``1 / a_kk``
    (2 multiplications per entry) and every upper-triangle entry off the pivot
    row and column takes one complex product. After all sweeps the matrix
    holds ``-A^{-1}``.
    """
    n = A.shape[0]
    A = A.astype(np.complex128).copy()
    for k in range(n):
        piv = 1.0 / A[k, k].real
        others = [j for j in range(n) if j != k]
        row = {}
        for j in others:
            counter.add(2)
            row[j] = A[k, j] * piv
        for a, i in enumerate(others):
            for j in others[a:]:
                A[i, j] = A[i, j] - _cmul(A[k, i].conj(), row[j], counter)
                A[j, i] = A[i, j].conj()
        for j in others:
            A[k, j] = row[j]
            A[j, k] = row[j].conj()
        A[k, k] = -piv
    return -A


def lmmse_kernel(H, y, noise_std, psi=1.0, counter: MultCounter | None = None):
    """Equalize one RE and count the real multiplications.

    Args:
        H: ``(N_R, N_TX)`` complex channel.
        y: ``(N_R,)`` received vector.
        noise_std: Noise standard deviation (squared inside the kernel).
        psi: Input noise-variance multiplier.
        counter: Receives the multiplication tally.

    Returns:
        ``(x_hat, sigma_res)`` arrays of length ``N_TX``.
    """
    counter = counter if counter is not None else MultCounter()
    H = np.asarray(H, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    nr, n = H.shape
    counter.add(2)
    s2 = psi * (noise_std * noise_std)

    A = np.zeros((n, n), dtype=np.complex128)
    for i in range(n):
        A[i, i] = s2
        for r in range(nr):
            counter.add(2)
            A[i, i] += H[r, i].real ** 2 + H[r, i].imag ** 2
        for j in range(i + 1, n):
            acc = 0j
            for r in range(nr):
                acc += _cmul(H[r, i].conj(), H[r, j], counter)
            A[i, j], A[j, i] = acc, np.conj(acc)

    Ainv = _hermitian_inverse(A, counter)
    G = np.zeros((n, nr), dtype=np.complex128)
    for i in range(n):
        for r in range(nr):
            for j in range(n):
                G[i, r] += _cmul(Ainv[i, j], H[r, j].conj(), counter)
    z = np.zeros(n, dtype=np.complex128)
    d = np.zeros(n)
    for i in range(n):
        for r in range(nr):
            z[i] += _cmul(G[i, r], y[r], counter)
            counter.add(2)
            d[i] += G[i, r].real * H[r, i].real - G[i, r].imag * H[r, i].imag
    return z / d, 1.0 / d - 1.0
