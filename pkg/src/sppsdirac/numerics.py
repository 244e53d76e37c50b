"""Uniform mesh, grid functions with a leading power of x, and indefinite
six-point Newton-Cotes integration.

A :class:`GridFn` stores a function as ``x**exponent * samples`` where the
samples are the *smooth part*.  Keeping the power of ``x`` symbolic avoids
0/0 at the origin and the underflow of ``x**n`` for large ``n``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from numbers import Rational

import numba
import numpy as np

__all__ = [
    "Mesh",
    "GridFn",
    "NonFiniteError",
    "VanishingDivisorError",
    "make_mesh",
    "cumulative_integral",
    "gridfn_combine",
    "lincomb",
    "as_exponent",
    "block_weights",
]

BLOCK = 5


class NonFiniteError(ValueError):
    """A sample is nan or inf."""

    def __init__(self, index: int, msg: str | None = None):
        self.index = index
        super().__init__(msg or f"non-finite sample at node {index}")


class VanishingDivisorError(ZeroDivisionError):
    """The smooth part of a divisor vanishes at an interior node."""

    def __init__(self, index: int, x: float):
        self.index = index
        self.x = x
        super().__init__(f"divisor vanishes at node {index} (x = {x:.6g})")


def as_exponent(value) -> Fraction:
    """Exact rational exponent from an int, Fraction, decimal string or float."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(value).limit_denominator(10**6)


@dataclass(frozen=True, eq=False)
class Mesh:
    a: float
    M: int
    x: np.ndarray = field(repr=False)

    @property
    def h(self) -> float:
        return self.a / (self.M - 1)

    def pow(self, p) -> np.ndarray:
        """``x**p`` on the nodes (cached; ``0**0 == 1``)."""
        return _mesh_pow(self, as_exponent(p))

    def __hash__(self):
        return id(self)


@lru_cache(maxsize=256)
def _mesh_pow(mesh: Mesh, p: Fraction) -> np.ndarray:
    if p == 0:
        out = np.ones(mesh.M)
    elif p.denominator == 1 and p > 0:
        out = mesh.x ** int(p)
    else:
        with np.errstate(divide="ignore"):
            out = mesh.x ** float(p)
    out.setflags(write=False)
    return out


def make_mesh(a: float, M: int) -> Mesh:
    """Uniform mesh of ``M`` nodes on ``[0, a]``.

    ``M - 1`` must be a multiple of 5 so that six-point blocks tile the mesh.
    """
    a = float(a)
    if not a > 0:
        raise ValueError(f"right endpoint must be positive, got {a}")
    if M < 6 or (M - 1) % BLOCK:
        raise ValueError(
            f"mesh size M={M} violates the block rule: need M >= 6 and (M-1) % 5 == 0"
        )
    x = np.arange(M) * (a / (M - 1))
    x[-1] = a
    x.setflags(write=False)
    return Mesh(a, int(M), x)


@dataclass(frozen=True, eq=False)
class GridFn:
    """``x**exponent * samples`` sampled on ``mesh``."""

    mesh: Mesh
    samples: np.ndarray
    exponent: Fraction = Fraction(0)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.shape != (self.mesh.M,):
            raise ValueError(f"expected {self.mesh.M} samples, got shape {s.shape}")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "exponent", as_exponent(self.exponent))

    @classmethod
    def constant(cls, mesh: Mesh, c: complex, exponent=0) -> "GridFn":
        return cls(mesh, np.full(mesh.M, complex(c)), exponent)

    @classmethod
    def from_callable(cls, mesh: Mesh, fn, exponent=0) -> "GridFn":
        """Sample the smooth part ``fn(x)``; ``fn`` must be finite at ``x = 0``."""
        return cls(mesh, np.broadcast_to(fn(mesh.x), (mesh.M,)).astype(complex), exponent)

    @property
    def x(self) -> np.ndarray:
        return self.mesh.x

    def values(self) -> np.ndarray:
        """Full function values ``x**exponent * samples`` (node 0 by limit)."""
        if self.exponent == 0:
            return self.samples
        v = self.mesh.pow(self.exponent) * self.samples
        if self.exponent > 0:
            v[0] = 0.0
        return v

    def at_end(self) -> complex:
        return complex(self.mesh.a ** float(self.exponent) * self.samples[-1])

    def sup(self) -> float:
        return float(np.max(np.abs(self.values()[1:]))) if self.exponent < 0 else float(
            np.max(np.abs(self.values()))
        )

    def is_zero(self) -> bool:
        return not np.any(self.samples)

    def with_exponent(self, exponent) -> "GridFn":
        """Re-express with a smaller exponent (multiplies samples by a power of x)."""
        e = as_exponent(exponent)
        d = self.exponent - e
        if d < 0:
            raise ValueError("can only lower the exponent")
        if d == 0:
            return self
        return GridFn(self.mesh, self.samples * self.mesh.pow(d), e)

    def __add__(self, other):
        return gridfn_combine("add", self, other)

    def __sub__(self, other):
        return gridfn_combine("sub", self, other)

    def __mul__(self, other):
        if isinstance(other, GridFn):
            return gridfn_combine("mul", self, other)
        return GridFn(self.mesh, self.samples * other, self.exponent)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, GridFn):
            return gridfn_combine("div", self, other)
        return GridFn(self.mesh, self.samples / other, self.exponent)

    def __neg__(self):
        return GridFn(self.mesh, -self.samples, self.exponent)


def lincomb(mesh: Mesh, terms) -> tuple[Fraction, np.ndarray]:
    """Sum ``x**e * s`` over ``terms = [(e, s), ...]`` lifted to the least exponent.

    Terms with ``s is None`` are skipped.  Returns ``(exponent, samples)``.
    """
    terms = [(as_exponent(e), s) for e, s in terms if s is not None]
    if not terms:
        return Fraction(0), np.zeros(mesh.M, dtype=complex)
    e0 = min(e for e, _ in terms)
    out = np.zeros(mesh.M, dtype=complex)
    for e, s in terms:
        if e == e0:
            out += s
        else:
            out += s * mesh.pow(e - e0)
    return e0, out


def gridfn_combine(op: str, f: GridFn, g) -> GridFn:
    """Arithmetic on grid functions with exponent bookkeeping.

    ``op`` is one of ``add``, ``sub``, ``mul``, ``div`` or ``scale`` (``g`` a scalar).
    """
    if op == "scale":
        return GridFn(f.mesh, f.samples * g, f.exponent)
    if f.mesh is not g.mesh:
        raise ValueError("grid functions live on different meshes")
    mesh = f.mesh
    if op in ("add", "sub"):
        sg = g.samples if op == "add" else -g.samples
        e, s = lincomb(mesh, [(f.exponent, f.samples), (g.exponent, sg)])
        return GridFn(mesh, s, e)
    if op == "mul":
        return GridFn(mesh, f.samples * g.samples, f.exponent + g.exponent)
    if op == "div":
        d = g.samples
        bad = np.flatnonzero(d[1:] == 0)
        if bad.size:
            i = int(bad[0]) + 1
            raise VanishingDivisorError(i, float(mesh.x[i]))
        if d[0] == 0:
            raise VanishingDivisorError(0, 0.0)
        return GridFn(mesh, f.samples / d, f.exponent - g.exponent)
    raise ValueError(f"unknown operation {op!r}")


def _lagrange_coeffs() -> list[list[Fraction]]:
    """Monomial coefficients of the Lagrange basis on nodes 0..5."""
    nodes = range(BLOCK + 1)
    basis = []
    for j in nodes:
        poly = [Fraction(1)]
        denom = Fraction(1)
        for m in nodes:
            if m == j:
                continue
            # multiply by (t - m)
            poly = [Fraction(0)] + poly
            for k in range(len(poly) - 1):
                poly[k] -= m * poly[k + 1]
            denom *= j - m
        basis.append([c / denom for c in poly])
    return basis


_LAGRANGE = _lagrange_coeffs()


@lru_cache(maxsize=None)
def block_weights(nu: Fraction = Fraction(0)) -> np.ndarray:
    """Weights ``W[k, j]`` with ``int_0^k t**nu L_j(t) dt / k**(nu+1) = sum_j W[k, j]``
    contribution per smooth sample; row 0 holds the ``t -> 0`` limit.

    For ``nu = 0`` these are the exact rational antiderivative weights of the
    degree-5 interpolant, divided by ``k``.
    """
    nu = as_exponent(nu)
    if nu <= -1:
        raise ValueError(f"integrand exponent {nu} is not integrable at 0")
    W = np.zeros((BLOCK + 1, BLOCK + 1))
    for k in range(BLOCK + 1):
        for j, coeffs in enumerate(_LAGRANGE):
            if nu.denominator == 1:
                acc = sum(c * Fraction(k) ** m / (nu + m + 1) for m, c in enumerate(coeffs))
                W[k, j] = float(acc)
            else:
                W[k, j] = sum(float(c) * k**m / float(nu + m + 1) for m, c in enumerate(coeffs))
    return W


_NEAR_BLOCKS = 400
_GL_T, _GL_W = np.polynomial.legendre.leggauss(24)


@lru_cache(maxsize=4)
def _log_index(M: int) -> np.ndarray:
    out = np.log(np.maximum(np.arange(M, dtype=float), 1.0))
    out.setflags(write=False)
    return out


@lru_cache(maxsize=512)
def _near_weights(nu: Fraction, nblocks: int) -> np.ndarray:
    """``V[i, k-1, j] = int_b^{b+k} (t/(b+k))**nu L_j(t-b) dt`` for ``b = 5(i+1)``."""
    lag = np.array([[float(c) for c in row] for row in _LAGRANGE])  # (6, 6) monomial coeffs
    b = BLOCK * np.arange(1, nblocks + 1, dtype=float)[:, None, None]
    k = np.arange(1, BLOCK + 1, dtype=float)[None, :, None]
    t = 0.5 * k * (_GL_T[None, None, :] + 1)  # local variable on [0, k]
    wt = 0.5 * k * _GL_W[None, None, :] * ((b + t) / (b + k)) ** float(nu)
    L = np.stack([np.polynomial.polynomial.polyval(t, lag[j]) for j in range(BLOCK + 1)], -1)
    V = np.einsum("bkq,bkqj->bkj", wt, L)
    V.setflags(write=False)
    return V


@numba.njit(cache=True)
def _chain(S, local, ratio_pow):
    # S[b+k] = S[b] * ratio_pow[b+k] + local[b+k] for block start b
    n = S.shape[0]
    for b in range(0, n - 1, 5):
        sb = S[b]
        for k in range(1, 6):
            S[b + k] = sb * ratio_pow[b + k] + local[b + k]
    return S


def cumulative_integral(f: GridFn) -> GridFn:
    """Indefinite integral ``F(x) = int_0^x f`` on the nodes.

    Works on the smooth part: for ``f = x**nu s`` the result is
    ``x**(nu+1) S`` with ``S(0) = s(0)/(nu+1)``.  In each 5-interval block the
    smooth samples are interpolated by a degree-5 polynomial and integrated
    exactly against ``t**nu`` (first block) or with ``t**nu`` folded in (later
    blocks, where it is smooth).  Block endpoints chain cumulatively.
    """
    s = f.samples
    bad = np.flatnonzero(~np.isfinite(s))
    if bad.size:
        raise NonFiniteError(int(bad[0]))
    mesh = f.mesh
    nu = f.exponent
    M = mesh.M
    nb = (M - 1) // BLOCK
    idx = np.arange(M, dtype=float)

    S = np.zeros(M, dtype=complex)
    local = np.zeros(M, dtype=complex)

    # first block: product integration against t**nu
    W0 = block_weights(nu)
    S[: BLOCK + 1] = W0 @ s[: BLOCK + 1]
    local[: BLOCK + 1] = S[: BLOCK + 1]

    if nb > 1:
        W = block_weights(Fraction(0))[1:]  # (5, 6), rows k=1..5, divided by k
        starts = np.arange(BLOCK, M - 1, BLOCK)  # block starts b >= 5
        blk = s[starts[:, None] + np.arange(BLOCK + 1)]  # (nb-1, 6)
        Wk = W * np.arange(1, 6)[:, None]
        if nu != 0:
            # fold t**nu in as ((b+j)/b)**nu on the samples, then divide by ((b+k)/b)**nu
            lg = _log_index(M)[starts[:, None] + np.arange(BLOCK + 1)]
            r = np.exp(float(nu) * (lg - lg[:, :1]))  # (nb-1, 6)
            loc = (blk * r) @ Wk.T / r[:, 1:]
            # near the origin folding has a mesh-independent relative error,
            # so those blocks integrate against t**nu exactly
            n_near = min(len(starts), _NEAR_BLOCKS)
            loc[:n_near] = np.einsum("bkj,bj->bk", _near_weights(nu, n_near), blk[:n_near])
        else:
            loc = blk @ Wk.T
        tgt = starts[:, None] + np.arange(1, BLOCK + 1)  # (nb-1, 5)
        # h * sum / x_{b+k}**(nu+1) * x_{b+k}**nu  ->  sum / (b+k)
        local[tgt] = loc / tgt

    # chain factors (x_b / x_{b+k})**(nu+1)
    ratio_pow = np.zeros(M)
    bstart = (np.arange(M) - 1) // BLOCK * BLOCK
    bstart[0] = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio_pow[1:] = (bstart[1:] / idx[1:]) ** float(nu + 1)
    ratio_pow[: BLOCK + 1] = 0.0
    S = _chain(S, local, ratio_pow)
    return GridFn(mesh, S, nu + 1)
