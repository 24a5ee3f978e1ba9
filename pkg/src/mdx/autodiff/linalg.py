"""Batched Hermitian positive-definite solves with a reverse-mode rule."""

from __future__ import annotations

import numpy as np

from mdx.autodiff.complex import ComplexPair
from mdx.autodiff.tensor import _result, as_tensor, unbroadcast
from mdx.errors import ShapeError, SingularError

PIVOT_TOL = 1e-12


def cholesky(a, tol=PIVOT_TOL):
    """Lower Cholesky factor of a stack of Hermitian PD matrices.

    Only the lower triangle of ``a`` is read. A pivot at or below
    ``tol * max(diag(a))`` raises :class:`SingularError`.
    """
    a = np.asarray(a, dtype=np.complex128)
    n = a.shape[-1]
    L = np.zeros_like(a)
    scale = np.max(np.abs(np.diagonal(a, axis1=-2, axis2=-1).real), axis=-1)
    floor = tol * scale
    for j in range(n):
        d = a[..., j, j].real - np.sum(np.abs(L[..., j, :j]) ** 2, axis=-1)
        if np.any(~(d > floor)):
            raise SingularError(f"non-positive pivot {np.min(d):.3e} at column {j}")
        ljj = np.sqrt(d)
        L[..., j, j] = ljj
        if j + 1 < n:
            s = a[..., j + 1:, j] - np.einsum(
                "...ik,...k->...i", L[..., j + 1:, :j], L[..., j, :j].conj()
            )
            L[..., j + 1:, j] = s / ljj[..., None]
    return L


def cho_solve(L, b):
    """Solve ``L L^H x = b`` for a stack of right-hand-side matrices ``b``."""
    n = L.shape[-1]
    shape = np.broadcast_shapes(L.shape[:-2], b.shape[:-2]) + b.shape[-2:]
    z = np.zeros(shape, dtype=np.complex128)
    for i in range(n):
        acc = b[..., i, :] - np.einsum("...k,...km->...m", L[..., i, :i], z[..., :i, :])
        z[..., i, :] = acc / L[..., i, i, None]
    x = np.zeros_like(z)
    for i in reversed(range(n)):
        acc = z[..., i, :] - np.einsum(
            "...k,...km->...m", L[..., i + 1:, i].conj(), x[..., i + 1:, :]
        )
        x[..., i, :] = acc / L[..., i, i, None].conj()
    return x


def hermitian_solve(A: ComplexPair, B: ComplexPair) -> ComplexPair:
    """Return ``A^{-1} B`` for Hermitian positive-definite ``A``.

    ``A`` has shape ``(..., n, n)`` and ``B`` shape ``(..., n, m)``. The
    backward pass uses ``dB = A^{-H} G`` and ``dA = -A^{-H} G X^H`` where ``G``
    is the complex output gradient ``dRe + i dIm``.
    """
    if A.shape[-1] != A.shape[-2]:
        raise ShapeError(f"A must be square, got {A.shape}")
    if B.shape[-2] != A.shape[-1]:
        raise ShapeError(f"B rows {B.shape[-2]} != A order {A.shape[-1]}")
    a = A.re.value + 1j * A.im.value
    b = B.re.value + 1j * B.im.value
    L = cholesky(a)
    x = cho_solve(L, b)
    parents = (A.re, A.im, B.re, B.im)
    parents = tuple(as_tensor(p) for p in parents)

    def backward(g):
        gx = g[0] + 1j * g[1]
        gb = cho_solve(L, gx)
        ga = -gb @ np.swapaxes(x, -1, -2).conj()
        ga_r = unbroadcast(ga, A.shape)
        gb_r = unbroadcast(gb, B.shape)
        return ga_r.real, ga_r.imag, gb_r.real, gb_r.imag

    stacked = _result(np.stack([x.real, x.imag]), parents, backward)
    return ComplexPair(stacked[0], stacked[1])

