"""Discrete exterior and covariant calculus on flat periodic tori.

Fields live on a uniform grid over the coordinates listed in
GridSpec.active (each with period 2 pi); the remaining coordinates are
treated as exactly constant, so a field array has shape

    (n, ..., n, <component axes>)

with one leading grid axis per active coordinate.  Packed k-form fields
carry a trailing component axis of size C(ambient, k); 2-tensor fields end
in (ambient, ambient).

All derivatives are 4th-order central differences with periodic wrap.
Derivatives along inactive coordinates are exactly zero.  Stencils are
translation-equivariant by construction (np.roll).
"""

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import forms

POINT_BUDGET = 10**6


class DegenerateMetric(Exception):
    """Pointwise Cholesky of the metric field failed."""


@dataclass(frozen=True)
class GridSpec:
    """Periodic grid: active coordinate axes (0-based), points per axis."""

    active: tuple
    n: int
    ambient: int = 7

    def __post_init__(self):
        if self.n % 2 or self.n < 8:
            raise ValueError("points per dimension must be even and >= 8")
        if any(d < 0 or d >= self.ambient for d in self.active):
            raise ValueError("active dims out of range")
        if self.n ** len(self.active) > POINT_BUDGET:
            raise ValueError("grid exceeds point budget")

    @property
    def shape(self):
        return (self.n,) * len(self.active)

    @property
    def h(self):
        return 2.0 * np.pi / self.n

    @property
    def npts(self):
        return self.n ** len(self.active)

    def axis_of(self, dim):
        """Array axis corresponding to coordinate dim, or None if inactive."""
        return self.active.index(dim) if dim in self.active else None

    def coord(self, dim):
        """Coordinate values of an active dim, broadcast over the grid shape."""
        ax = self.axis_of(dim)
        x = np.arange(self.n) * self.h
        shape = [1] * len(self.active)
        shape[ax] = self.n
        return np.broadcast_to(x.reshape(shape), self.shape)

    def refine(self, factor=2):
        return GridSpec(active=self.active, n=self.n * factor, ambient=self.ambient)


def partial(grid, f, dim):
    """4th-order central difference along coordinate dim (0-based)."""
    ax = grid.axis_of(dim)
    if ax is None:
        return np.zeros_like(f)
    r = lambda s: np.roll(f, -s, axis=ax)
    return (8.0 * (r(1) - r(-1)) - (r(2) - r(-2))) / (12.0 * grid.h)


def partial_all(grid, f):
    """Stack of coordinate partials; new axis inserted before components.

    f has shape (*grid.shape, *comp); returns (*grid.shape, ambient, *comp).
    """
    ng = len(grid.active)
    out = np.zeros(f.shape[:ng] + (grid.ambient,) + f.shape[ng:])
    for dim in grid.active:
        out[(slice(None),) * ng + (dim,)] = partial(grid, f, dim)
    return out


@lru_cache(maxsize=None)
def _d_matrices(n, k):
    """Per-dimension matrices M_d with (dw)_J = sum_d partial_d w M_d[J, :]."""
    tuples_in = forms.canonical_tuples(n, k)
    tuples_out = forms.canonical_tuples(n, k + 1)
    slot_in = {t: i for i, t in enumerate(tuples_in)}
    mats = np.zeros((n, len(tuples_out), len(tuples_in)))
    for j, idx in enumerate(tuples_out):
        for t in range(k + 1):
            rest = idx[:t] + idx[t + 1:]
            mats[idx[t], j, slot_in[rest]] += (-1.0) ** t
    return mats


def exterior_d(grid, w, k):
    """Exterior derivative of a packed k-form field (metric independent)."""
    n = grid.ambient
    mats = _d_matrices(n, k)
    out = np.zeros(w.shape[:-1] + (forms.n_comp(n, k + 1),))
    for dim in grid.active:
        out += np.einsum("oi,...i->...o", mats[dim], partial(grid, w, dim))
    return out


def codifferential(grid, w, k, ginv, vol):
    """d* = (-1)^(n(k+1)+1) star d star with pointwise metric stars."""
    n = grid.ambient
    s = (-1.0) ** (n * (k + 1) + 1)
    sw = forms.hodge(w, k, ginv, vol, n)
    dsw = exterior_d(grid, sw, n - k)
    return s * forms.hodge(dsw, n - k + 1, ginv, vol, n)


def christoffel(grid, g):
    """Levi-Civita symbols Gamma[..., k, i, j] (upper k) from a metric field."""
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise DegenerateMetric("metric field is not pointwise positive definite")
    ginv = np.linalg.inv(g)
    dg = partial_all(grid, g)  # (..., m, i, j) = partial_m g_ij
    d = (
        np.einsum("...ilj->...ijl", dg)
        + np.einsum("...jli->...ijl", dg)
        - np.einsum("...lij->...ijl", dg)
    )
    return 0.5 * np.einsum("...kl,...ijl->...kij", ginv, d)


def covariant_derivative(grid, t, rank, gamma):
    """Covariant derivative of an all-lower dense tensor field.

    Returns (nabla t)[..., m, a1..ar] = partial_m t - sum_s Gamma^l_{m a_s} t[.. l ..].
    """
    out = partial_all(grid, t)
    for s in range(rank):
        t_lab = list(range(1, rank + 1))
        t_lab[s] = 0  # contracted slot
        out_lab = [rank + 1] + list(range(1, rank + 1))
        out -= np.einsum(
            gamma, [Ellipsis, 0, rank + 1, s + 1],
            t, [Ellipsis] + t_lab,
            [Ellipsis] + out_lab,
        )
    return out


def covariant_derivative_form(grid, w, k, gamma):
    """Covariant derivative of a packed k-form; dense (..., m, i1..ik) output."""
    return covariant_derivative(grid, forms.unpack(w, grid.ambient, k), k, gamma)


def ricci_fd(grid, g):
    """Coordinate finite-difference Ricci tensor (independent curvature path).

    Ric_ij = partial_k Gamma^k_ij - partial_i Gamma^k_kj
             + Gamma^k_kl Gamma^l_ij - Gamma^k_il Gamma^l_kj.
    """
    gamma = christoffel(grid, g)
    dgamma = partial_all(grid, gamma)  # (..., m, k, i, j)
    term1 = np.einsum("...kkij->...ij", dgamma)
    term2 = np.einsum("...ikkj->...ij", dgamma)
    tr_gamma = np.einsum("...kkl->...l", gamma)
    term3 = np.einsum("...l,...lij->...ij", tr_gamma, gamma)
    term4 = np.einsum("...kil,...lkj->...ij", gamma, gamma)
    return term1 - term2 + term3 - term4


def riemann_fd(grid, g):
    """All-lower curvature R[..., i, j, k, l] = g(R(e_i,e_j) e_k, e_l).

    R(e_i,e_j) e_k = nabla_i nabla_j e_k - nabla_j nabla_i e_k; the Ricci
    contraction with this convention is Ric_jk = R[..., i, j, k, i] g^ii
    summed, matching ricci_fd.
    """
    gamma = christoffel(grid, g)
    dgamma = partial_all(grid, gamma)  # (..., m, l, i, j)
    rup = (
        np.einsum("...iljk->...ijkl", dgamma)
        - np.einsum("...jlik->...ijkl", dgamma)
        + np.einsum("...lim,...mjk->...ijkl", gamma, gamma)
        - np.einsum("...ljm,...mik->...ijkl", gamma, gamma)
    )
    return np.einsum("...ijkm,...ml->...ijkl", rup, g)


def hessian(grid, f, gamma):
    """Covariant Hessian of a scalar field."""
    df = partial_all(grid, f)
    ddf = partial_all(grid, df)
    return ddf - np.einsum("...kij,...k->...ij", gamma, df)


def laplacian(grid, f, gamma, ginv):
    return np.einsum("...ij,...ij->...", ginv, hessian(grid, f, gamma))


def integrate(grid, s):
    """Integral of a scalar field over the torus (inactive dims give 2 pi)."""
    ng = len(grid.active)
    cell = grid.h ** ng * (2.0 * np.pi) ** (grid.ambient - ng)
    return np.sum(s, axis=tuple(range(ng))) * cell


def volume(grid, vol):
    return integrate(grid, vol * np.ones(grid.shape))


def form_l2(grid, w, k, ginv, vol):
    """Volume-averaged L2 norm of a packed k-form field."""
    q = forms.inner(w, w, ginv, grid.ambient, k)
    return float(np.sqrt(integrate(grid, q * vol) / volume(grid, vol)))


def form_linf(grid, w, k, ginv):
    q = forms.inner(w, w, ginv, grid.ambient, k)
    return float(np.sqrt(np.max(q))) if q.size else 0.0


def tensor_l2(grid, t, rank, ginv, vol):
    from .algebra import tensor_norm2

    q = tensor_norm2(t, ginv, rank)
    return float(np.sqrt(integrate(grid, q * vol) / volume(grid, vol)))


def tensor_linf(grid, t, rank, ginv):
    from .algebra import tensor_norm2

    q = tensor_norm2(t, ginv, rank)
    return float(np.sqrt(np.max(q)))


# -- snapshot export ---------------------------------------------------------
#
# Byte layout: one UTF-8 JSON header line terminated by '\n', then the raw
# field values as little-endian float64 in C order.

def save_field(path, grid, values, kind="raw"):
    header = {
        "format": "g2flow-field-v1",
        "ambient": grid.ambient,
        "active_dims": [d + 1 for d in grid.active],  # 1-based in the file
        "points_per_dim": grid.n,
        "component_shape": list(values.shape[len(grid.active):]),
        "kind": kind,
        "byte_order": "little",
        "dtype": "float64",
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header) + "\n").encode())
        fh.write(np.ascontiguousarray(values, dtype="<f8").tobytes())


def load_field(path):
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        if header.get("format") != "g2flow-field-v1":
            raise ValueError("unrecognized field snapshot format")
        grid = GridSpec(
            active=tuple(d - 1 for d in header["active_dims"]),
            n=header["points_per_dim"],
            ambient=header["ambient"],
        )
        count = grid.npts * int(np.prod(header["component_shape"] or [1]))
        data = np.frombuffer(fh.read(8 * count), dtype="<f8").astype(float)
    values = data.reshape(grid.shape + tuple(header["component_shape"]))
    return grid, values, header["kind"]
