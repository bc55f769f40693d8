"""Second-order forward-mode arithmetic over a fixed parameter vector.

A Jet carries per-subject values together with exact gradients (and
optionally Hessians) with respect to the full parameter vector.  Building
the EM objective out of Jets yields analytic derivatives that are
bit-for-bit consistent with the objective itself, while the inputs (link
functions and the Weibull lifetime layer) supply their own closed-form
derivative blocks.

Shapes: value (n,), grad (n, d), hess (n, d, d) or None when only first
order is requested.
"""

from __future__ import annotations

import numpy as np


class Jet:
    __slots__ = ("val", "grad", "hess")

    def __init__(self, val, grad, hess=None):
        self.val = np.asarray(val, float)
        self.grad = np.asarray(grad, float)
        self.hess = None if hess is None else np.asarray(hess, float)

    # -- constructors ------------------------------------------------------
    @classmethod
    def constant(cls, val, d: int, with_hess: bool = True) -> "Jet":
        val = np.atleast_1d(np.asarray(val, float))
        n = val.size
        hess = np.zeros((n, d, d)) if with_hess else None
        return cls(val, np.zeros((n, d)), hess)

    # -- helpers -----------------------------------------------------------
    def _outer(self, ga, gb):
        return ga[:, :, None] * gb[:, None, :]

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(
            np.broadcast_to(np.asarray(other, float), self.val.shape),
            self.grad.shape[1],
            self.hess is not None,
        )

    def _unary(self, h, dh, d2h) -> "Jet":
        u, g = self.val, self.grad
        val = h(u)
        grad = dh(u)[:, None] * g
        hess = None
        if self.hess is not None:
            hess = dh(u)[:, None, None] * self.hess + d2h(u)[
                :, None, None
            ] * self._outer(g, g)
        return Jet(val, grad, hess)

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other):
        o = self._lift(other)
        hess = None if self.hess is None else self.hess + o.hess
        return Jet(self.val + o.val, self.grad + o.grad, hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.val, -self.grad, None if self.hess is None else -self.hess)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._lift(other)
        val = self.val * o.val
        grad = self.grad * o.val[:, None] + o.grad * self.val[:, None]
        hess = None
        if self.hess is not None:
            cross = self._outer(self.grad, o.grad)
            hess = (
                self.hess * o.val[:, None, None]
                + o.hess * self.val[:, None, None]
                + cross
                + cross.transpose(0, 2, 1)
            )
        return Jet(val, grad, hess)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        return self * o.reciprocal()

    def __rtruediv__(self, other):
        return self._lift(other) * self.reciprocal()

    def reciprocal(self) -> "Jet":
        return self._unary(
            lambda u: 1.0 / u, lambda u: -1.0 / u**2, lambda u: 2.0 / u**3
        )

    # -- elementary functions ---------------------------------------------
    def log(self) -> "Jet":
        return self._unary(np.log, lambda u: 1.0 / u, lambda u: -1.0 / u**2)

    def log1p(self) -> "Jet":
        return self._unary(
            np.log1p, lambda u: 1.0 / (1.0 + u), lambda u: -1.0 / (1.0 + u) ** 2
        )

    def exp(self) -> "Jet":
        return self._unary(np.exp, np.exp, np.exp)

    def log_expm1(self) -> "Jet":
        """log(e^u - 1) for u > 0, stable near u = 0 via log(-expm1(-u)).

        First derivative 1/(1 - e^-u), second -e^-u/(1 - e^-u)^2.
        """
        em = -np.expm1(-self.val)  # 1 - e^-u
        dh = 1.0 / em
        val = self.val + np.log(em)
        grad = dh[:, None] * self.grad
        hess = None
        if self.hess is not None:
            d2h = -(1.0 - em) / em**2
            hess = dh[:, None, None] * self.hess + d2h[:, None, None] * self._outer(
                self.grad, self.grad
            )
        return Jet(val, grad, hess)

    # -- reduction ---------------------------------------------------------
    def sum(self, weights=None):
        """Sum over subjects; returns (value, grad, hess-or-None)."""
        if weights is None:
            v = float(self.val.sum())
            g = self.grad.sum(axis=0)
            h = None if self.hess is None else self.hess.sum(axis=0)
        else:
            w = np.asarray(weights, float)
            v = float(w @ self.val)
            g = w @ self.grad
            h = None if self.hess is None else np.einsum("i,ijk->jk", w, self.hess)
        return v, g, h
