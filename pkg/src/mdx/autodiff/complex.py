"""Complex arithmetic carried as a pair of real tensors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mdx.autodiff import tensor as T
from mdx.autodiff.tensor import Tensor, as_tensor
from mdx.errors import ShapeError


@dataclass(frozen=True)
class ComplexPair:
    """Real and imaginary parts as two equally shaped tensors."""

    re: Tensor
    im: Tensor

    def __post_init__(self):
        if self.re.shape != self.im.shape:
            raise ShapeError(f"re {self.re.shape} and im {self.im.shape} differ")

    @classmethod
    def from_numpy(cls, z, requires_grad=False):
        z = np.asarray(z)
        return cls(
            Tensor(np.ascontiguousarray(z.real, dtype=np.float64), requires_grad),
            Tensor(np.ascontiguousarray(z.imag, dtype=np.float64), requires_grad),
        )

    @classmethod
    def real(cls, x):
        x = as_tensor(x)
        return cls(x, Tensor(np.zeros(x.shape)))

    @property
    def shape(self):
        return self.re.shape

    @property
    def ndim(self):
        return self.re.ndim

    @property
    def requires_grad(self):
        return self.re.requires_grad or self.im.requires_grad

    def numpy(self):
        return self.re.value + 1j * self.im.value

    def _map(self, fn, *args, **kwargs):
        return ComplexPair(fn(self.re, *args, **kwargs), fn(self.im, *args, **kwargs))

    def __add__(self, other):
        other = _lift(other)
        return ComplexPair(self.re + other.re, self.im + other.im)

    def __sub__(self, other):
        other = _lift(other)
        return ComplexPair(self.re - other.re, self.im - other.im)

    def __neg__(self):
        return ComplexPair(-self.re, -self.im)

    def __mul__(self, other):
        if isinstance(other, ComplexPair):
            return ComplexPair(
                self.re * other.re - self.im * other.im,
                self.re * other.im + self.im * other.re,
            )
        if isinstance(other, complex):
            return self * ComplexPair.from_numpy(np.asarray(other))
        # real scalar or real tensor
        return ComplexPair(self.re * other, self.im * other)

    __rmul__ = __mul__

    def scale_div(self, d):
        """Divide by a real tensor or scalar."""
        return ComplexPair(T.div(self.re, d), T.div(self.im, d))

    def conj(self):
        return ComplexPair(self.re, -self.im)

    def abs2(self):
        return self.re * self.re + self.im * self.im

    def __matmul__(self, other):
        return ComplexPair(
            self.re @ other.re - self.im @ other.im,
            self.re @ other.im + self.im @ other.re,
        )

    def herm(self):
        """Conjugate transpose of the two trailing axes."""
        axes = tuple(range(self.ndim - 2)) + (self.ndim - 1, self.ndim - 2)
        return ComplexPair(T.transpose(self.re, axes), -T.transpose(self.im, axes))

    def __getitem__(self, index):
        return self._map(T.getitem, index)

    def reshape(self, shape):
        return self._map(T.reshape, shape)

    def transpose(self, axes):
        return self._map(T.transpose, axes)

    def take(self, indices, axis):
        return self._map(T.take, indices, axis)

    def expand_dims(self, axis):
        return self._map(T.expand_dims, axis)

    def sum(self, axis=None, keepdims=False):
        return self._map(T.reduce_sum, axis, keepdims)


def _lift(x):
    if isinstance(x, ComplexPair):
        return x
    if isinstance(x, (complex, np.ndarray)) and np.iscomplexobj(x):
        return ComplexPair.from_numpy(x)
    return ComplexPair.real(x)


def concat(pairs, axis=-1):
    return ComplexPair(
        T.concat([p.re for p in pairs], axis), T.concat([p.im for p in pairs], axis)
    )


def where(mask, a, b):
    """Select ``a`` where ``mask`` (a constant boolean array) holds, else ``b``."""
    m = Tensor(np.asarray(mask, dtype=np.float64))
    inv = Tensor(1.0 - m.value)
    return ComplexPair(a.re * m + b.re * inv, a.im * m + b.im * inv)
