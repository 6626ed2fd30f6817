"""Product-ansatz structures on S^1 x T^6 and the 6-dimensional flow check.

Coordinates pair into complex directions z_a = x_{2a-1} + i x_{2a}
(0-based axes (2a, 2a+1) for a = 0, 1, 2), with the circle coordinate r on
axis 6.  The holomorphic volume form Omega = dz1 dz2 dz3 is held fixed; a
hermitian form is carried as the 3x3 complex matrix field h with

    omega = i h_ab dz^a ^ dzbar^b,   g6 = 2 Re(h_ab dz^a x dzbar^b),
    |Omega|_omega^2 = 1 / det h      (so the flat omega0 has h = I/2).

The potential ansatz builds a conformally balanced metric from a scalar u:
chi = omega0 + i ddbar u must stay positive, and omega = |Omega|_chi^{-2} chi
then satisfies d(|Omega|_omega omega^2) = 0 identically, because
|Omega|_omega omega^2 = chi^2.

The 7-dimensional structure is

    phi = 2 sqrt(2) Re(Omega / |Omega|) - (1 / 2 sqrt(2)) dr ^ omega,

whose induced metric is (1/8) dr^2 + g6 and whose dual 4-form is
- dr ^ Im(Omega / |Omega|) - omega^2 / 2.  The dilaton reference volume is
(1 / 2 sqrt(2)) dr ^ (i Omega ^ Omegabar), i.e. the constant density
2 sqrt(2); with this normalization f = -(1/2) log |Omega|_omega exactly.
"""

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import algebra, forms
from . import grid as gridmod
from .forms import canonical_tuples, pack, perm_sign, unpack

R_AXIS = 6
VOL_R_DENSITY = 2.0 * math.sqrt(2.0)


class NonPositiveChi(Exception):
    """omega0 + i ddbar u left the positive cone (potential too large)."""


@lru_cache(maxsize=None)
def complex_coframe():
    """Matrix C[a, j] of dz^a components in the real coordinate basis."""
    c = np.zeros((3, 7), dtype=complex)
    for a in range(3):
        c[a, 2 * a] = 1.0
        c[a, 2 * a + 1] = 1.0j
    return c


@lru_cache(maxsize=None)
def complex_structure():
    """J as a matrix on vectors: J e_{2a} = e_{2a+1}, J e_{2a+1} = -e_{2a}."""
    j = np.zeros((6, 6))
    for a in range(3):
        j[2 * a + 1, 2 * a] = 1.0
        j[2 * a, 2 * a + 1] = -1.0
    return j


@lru_cache(maxsize=None)
def _omega_constant_forms():
    """Packed 6d Re(Omega) and Im(Omega) for Omega = dz1 dz2 dz3."""
    c = complex_coframe()[:, :6]
    t = np.einsum("i,j,k->ijk", c[0], c[1], c[2])
    om = np.zeros((6, 6, 6), dtype=complex)
    for p in itertools.permutations(range(3)):
        om += perm_sign(p) * np.transpose(t, p)
    return pack(om.real, 6, 3), pack(om.imag, 6, 3)


@lru_cache(maxsize=None)
def _restrict_slots(k):
    """Slots of canonical (7,k) tuples avoiding the r axis, in 6d order."""
    t7 = canonical_tuples(7, k)
    return np.array([i for i, t in enumerate(t7) if R_AXIS not in t])


def embed_form(w6, k):
    """6d packed k-form -> 7d packed (no dr components)."""
    out = np.zeros(w6.shape[:-1] + (forms.n_comp(7, k),))
    out[..., _restrict_slots(k)] = w6
    return out


def restrict_form(w7, k):
    """7d packed k-form -> its T^6 part (dr components dropped)."""
    return w7[..., _restrict_slots(k)]


def herm_to_2form(h):
    """omega = i h_ab dz^a ^ dzbar^b as a packed 6d 2-form."""
    c = complex_coframe()[:, :6]
    w = 1j * (
        np.einsum("...ab,aj,bk->...jk", h, c, c.conj())
        - np.einsum("...ab,ak,bj->...jk", h, c, c.conj())
    )
    return pack(np.ascontiguousarray(w.real), 6, 2)


def form2_to_herm(w6):
    """Inverse of herm_to_2form: h_ab = -i omega(Z_a, Zbar_b)."""
    z = 0.5 * complex_coframe()[:, :6].conj()  # Z_a = (e_{2a} - i e_{2a+1})/2
    wd = unpack(w6, 6, 2)
    return -1j * np.einsum("...jk,aj,bk->...ab", wd, z, z.conj())


def herm_to_metric(h):
    """g6_jk = 2 Re(h_ab dz^a_j dzbar^b_k)."""
    c = complex_coframe()[:, :6]
    return 2.0 * np.real(np.einsum("...ab,aj,bk->...jk", h, c, c.conj()))


def norm_omega(h):
    """|Omega|_omega from the volume normalization: det h = |Omega|^-2."""
    det = np.real(np.linalg.det(h))
    if np.any(det <= 0):
        raise NonPositiveChi("hermitian form is not positive")
    return det ** -0.5


def jconj(w, k, sign=1):
    """Composition with J on every slot: (Jw)_{i..} = w_{a..} J^a_i ...

    With sign=-1 composes with J^{-1} = -J instead.
    """
    j = sign * complex_structure()
    d = unpack(w, 6, k)
    for axis in range(k):
        src = list(range(k))
        src[axis] = k
        d = np.einsum(d, [Ellipsis] + src, j, [k, axis], [Ellipsis] + list(range(k)))
    return pack(d, 6, k)


def dc(grid6, w, k):
    """d^c = J^{-1} d J = i(dbar - d-bar-conjugate) on real k-forms."""
    dj = gridmod.exterior_d(grid6, jconj(w, k), k)
    return (-1.0) ** (k + 1) * jconj(dj, k + 1)


def i_ddbar(grid6, w, k):
    """i del delbar of a J-invariant real k-form, as (1/2) d d^c."""
    return 0.5 * gridmod.exterior_d(grid6, dc(grid6, w, k), k + 1)


def complex_hessian(grid6, u):
    """h_ab = d^2 u / dz_a dzbar_b from real 4th-order partials."""
    du = gridmod.partial_all(grid6, u)
    ddu = gridmod.partial_all(grid6, du)
    h = np.zeros(u.shape + (3, 3), dtype=complex)
    for a in range(3):
        for b in range(3):
            h[..., a, b] = 0.25 * (
                ddu[..., 2 * a, 2 * b]
                + ddu[..., 2 * a + 1, 2 * b + 1]
                + 1j * (ddu[..., 2 * a, 2 * b + 1] - ddu[..., 2 * a + 1, 2 * b])
            )
    return h


@dataclass(frozen=True)
class SU3Data:
    """Hermitian data on T^6: matrix field h, derived forms and norms."""

    grid: gridmod.GridSpec          # ambient 6
    h: np.ndarray                   # (..., 3, 3) complex hermitian
    omega: np.ndarray               # packed 6d 2-form
    g6: np.ndarray                  # (..., 6, 6)
    n_omega: np.ndarray             # |Omega|_omega
    f: np.ndarray                   # -(1/2) log |Omega|_omega

    @classmethod
    def from_herm(cls, grid6, h):
        n_om = norm_omega(h)
        return cls(
            grid=grid6,
            h=h,
            omega=herm_to_2form(h),
            g6=herm_to_metric(h),
            n_omega=n_om,
            f=-0.5 * np.log(n_om),
        )


def flat_su3(grid6):
    h = np.broadcast_to(0.5 * np.eye(3, dtype=complex), grid6.shape + (3, 3))
    return SU3Data.from_herm(grid6, np.ascontiguousarray(h))


def ccc_metric_from_potential(grid6, u):
    """Conformally balanced metric from the potential ansatz.

    chi = omega0 + i ddbar u must be positive; then omega = |Omega|_chi^-2 chi.
    """
    h_chi = 0.5 * np.eye(3) + complex_hessian(grid6, u)
    eig = np.linalg.eigvalsh(h_chi)
    if np.any(eig <= 0):
        raise NonPositiveChi("potential breaks positivity of omega0 + i ddbar u")
    det_chi = np.real(np.linalg.det(h_chi))
    h_omega = det_chi[..., None, None] * h_chi  # |Omega|_chi^-2 = det(h_chi)
    return SU3Data.from_herm(grid6, h_omega)


def balanced_residual(su3):
    """Norms of d(|Omega|_omega omega^2): zero for the potential ansatz."""
    g = su3.grid
    w2 = forms.wedge(su3.omega, 2, su3.omega, 2, 6)
    r = gridmod.exterior_d(g, su3.n_omega[..., None] * w2, 4)
    ginv = np.linalg.inv(su3.g6)
    vol6 = np.sqrt(np.linalg.det(su3.g6))
    return {
        "l2": gridmod.form_l2(g, r, 5, ginv, vol6),
        "linf": gridmod.form_linf(g, r, 5, ginv),
    }


def lee_form(su3):
    """mu with d omega = mu ^ omega + primitive, from d omega ^ omega = mu ^ omega^2."""
    g = su3.grid
    dw = gridmod.exterior_d(g, su3.omega, 2)
    rhs = forms.wedge(dw, 3, su3.omega, 2, 6)
    w2 = forms.wedge(su3.omega, 2, su3.omega, 2, 6)
    basis = np.eye(6)
    cols = np.stack([forms.wedge(basis[i], 1, w2, 4, 6) for i in range(6)], axis=-1)
    return np.linalg.solve(cols, rhs[..., None])[..., 0]


def lift_to_g2(su3):
    """The product G2-structure on S^1 x T^6 as a packed 7d 3-form field."""
    re_om, im_om = _omega_constant_forms()
    inv_n = 1.0 / su3.n_omega
    dr = np.zeros(7)
    dr[R_AXIS] = 1.0
    dr_w = forms.wedge(dr, 1, embed_form(su3.omega, 2), 2, 7)
    return (
        2.0 * math.sqrt(2.0) * inv_n[..., None] * embed_form(re_om, 3)
        - dr_w / (2.0 * math.sqrt(2.0))
    )


def lift_psi(su3):
    """Expected dual 4-form -dr ^ Im(Omega/|Omega|) - omega^2/2."""
    re_om, im_om = _omega_constant_forms()
    inv_n = 1.0 / su3.n_omega
    dr = np.zeros(7)
    dr[R_AXIS] = 1.0
    w2 = forms.wedge(su3.omega, 2, su3.omega, 2, 6)
    return -forms.wedge(dr, 1, inv_n[..., None] * embed_form(im_om, 3), 3, 7) - 0.5 * embed_form(w2, 4)


def lift_grid(grid6):
    return gridmod.GridSpec(active=grid6.active, n=grid6.n, ambient=7)


def anomaly_rhs_6d(su3):
    """4 i del delbar omega on the T^6 grid (packed 6d 4-form)."""
    return 4.0 * i_ddbar(su3.grid, su3.omega, 2)


def complex_identity_residuals(su3):
    """The two hermitian-geometry identities behind the reduction.

    id1: d star d omega = -2 d[(J mu) ^ omega] - 2 i ddbar omega
    id2: d log |Omega|_omega = -2 mu
    """
    g = su3.grid
    ginv = np.linalg.inv(su3.g6)
    vol6 = np.sqrt(np.linalg.det(su3.g6))
    mu = lee_form(su3)
    dw = gridmod.exterior_d(g, su3.omega, 2)
    lhs1 = gridmod.exterior_d(g, forms.hodge(dw, 3, ginv, vol6, 6, g=su3.g6), 3)
    jmu = jconj(mu, 1)
    rhs1 = -2.0 * gridmod.exterior_d(
        g, forms.wedge(jmu, 1, su3.omega, 2, 6), 3
    ) - 2.0 * i_ddbar(g, su3.omega, 2)
    dlog = gridmod.partial_all(g, np.log(su3.n_omega))
    return {
        "hodge_d_omega": float(np.abs(lhs1 - rhs1).max()),
        "lee_form": float(np.abs(dlog + 2.0 * mu).max()),
    }
