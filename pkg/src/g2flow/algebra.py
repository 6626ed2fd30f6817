"""Pointwise multilinear algebra of a G2-structure on a 7-dimensional space.

The standard 3-form used throughout is calibrated so that the induced
metric is the identity, the volume density is 1, and the full contraction
suite holds exactly:

    phi_ipq phi_jpq = 6 g_ij            psi_ipqr psi_jpqr = 24 g_ij
    phi_ijk phi_abk = g_ia g_jb - g_ib g_ja - psi_ijab
    psi_ijkl psi_abkl = 4 g_ia g_jb - 4 g_ib g_ja - 2 psi_ijab
    phi_ipq psi_apqr = -4 phi_iar
    (X . phi) <> phi = -3 X . psi

The component table itself is a convention (the coordinates pair into
complex directions z_a = x_{2a-1} + i x_{2a} with x_7 the circle direction
of the product ansatz); the contraction suite above is what downstream
formulas rely on, and it is asserted by the calibration tests.

Index conventions: all stored tensor components carry lower indices, and
rank-1 objects (gradients, torsion vectors) are stored as 1-forms.  Index
raising is always explicit through the inverse metric, so every formula
reduces to its orthonormal-frame form when g is the identity.

Every function accepts arbitrary leading batch axes, so the same code path
serves single points and whole grid fields.
"""

import itertools
import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import forms
from .forms import canonical_tuples, interior_table, n_comp, pack, perm_sign, unpack

DIM = 7
N3 = n_comp(DIM, 3)  # 35
N4 = n_comp(DIM, 4)  # 35


class NonPositiveForm(Exception):
    """The 3-form is outside the positive cone (no metric can be induced)."""


# Standard 3-form: seven signed unit components, 0-based index triples.
PHI0_TABLE = (
    ((0, 2, 4), 1.0),
    ((0, 3, 5), -1.0),
    ((1, 2, 5), -1.0),
    ((1, 3, 4), -1.0),
    ((0, 1, 6), -1.0),
    ((2, 3, 6), -1.0),
    ((4, 5, 6), -1.0),
)


@lru_cache(maxsize=None)
def standard_phi():
    """Packed components of the standard flat 3-form."""
    slot = {t: i for i, t in enumerate(canonical_tuples(DIM, 3))}
    phi = np.zeros(N3)
    for idx, val in PHI0_TABLE:
        phi[slot[idx]] = val
    phi.flags.writeable = False
    return phi


@lru_cache(maxsize=None)
def standard_psi():
    """Packed components of the standard flat 4-form, psi0 = star(phi0)."""
    psi = forms.hodge(standard_phi(), 3, np.eye(DIM), 1.0, DIM)
    psi.flags.writeable = False
    return psi


def convention_fixture():
    """The phi0 component table as a JSON-serializable document (1-based)."""
    return {
        "description": "standard G2 3-form components, 1-based index triples",
        "components": [
            {"indices": [i + 1 for i in idx], "sign": val} for idx, val in PHI0_TABLE
        ],
    }


def export_convention(path):
    with open(path, "w") as fh:
        json.dump(convention_fixture(), fh, indent=2)


@lru_cache(maxsize=None)
def _triple_wedge_table():
    """T[a,b,c] = eps(A,B,C) over packed 2-,2-,3-form slots partitioning {0..6}."""
    pairs = canonical_tuples(DIM, 2)
    triples = canonical_tuples(DIM, 3)
    table = np.zeros((len(pairs), len(pairs), len(triples)))
    for a, ta in enumerate(pairs):
        for b, tb in enumerate(pairs):
            if set(ta) & set(tb):
                continue
            rest = tuple(sorted(set(range(DIM)) - set(ta) - set(tb)))
            c = triples.index(rest)
            table[a, b, c] = perm_sign(ta + tb + rest)
    return table


def _basis_interior(phi):
    """(e_i . phi) for all coordinate basis vectors, shape (..., 7, 21)."""
    it = interior_table(DIM, 3)
    return np.einsum("cmd,...d->...mc", it, phi)


def metric_from_phi(phi):
    """Metric and volume density induced by a positive 3-form.

    Solves (e_i . phi) ^ (e_j . phi) ^ phi = -6 B_ij vol_coord for the
    bilinear density B, then normalizes: g = B (det B)^(-1/9) and
    vol = (det B)^(1/9), so that vol = sqrt(det g).

    Raises NonPositiveForm if det B <= 0 anywhere or g is not positive
    definite (Cholesky test).
    """
    phi = np.asarray(phi, dtype=float)
    iphi = _basis_interior(phi)
    b = -np.einsum(
        "abc,...ia,...jb,...c->...ij", _triple_wedge_table(), iphi, iphi, phi,
        optimize=True,
    ) / 6.0
    detb = np.linalg.det(b)
    if np.any(detb <= 0.0) or not np.all(np.isfinite(detb)):
        raise NonPositiveForm("triple-wedge density is not positively oriented")
    g = b * detb[..., None, None] ** (-1.0 / 9.0)
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise NonPositiveForm("induced bilinear form is not positive definite")
    return g, detb ** (1.0 / 9.0)


@dataclass(frozen=True)
class G2Frame:
    """Pointwise package (phi, g, g^-1, vol, psi); arrays share batch axes."""

    phi: np.ndarray
    g: np.ndarray
    ginv: np.ndarray
    vol: np.ndarray
    psi: np.ndarray

    @classmethod
    def from_phi(cls, phi):
        g, vol = metric_from_phi(phi)
        ginv = np.linalg.inv(g)
        psi = forms.hodge(phi, 3, ginv, vol, DIM)
        return cls(phi=np.asarray(phi, dtype=float), g=g, ginv=ginv, vol=vol, psi=psi)


def standard_frame():
    return G2Frame.from_phi(standard_phi())


def hodge_star(frame, w, k):
    """Metric Hodge star of a packed k-form in the given frame."""
    return forms.hodge(w, k, frame.ginv, frame.vol, DIM)


def diamond_phi(a, frame):
    """(A <> phi)_ijk = A_i^m phi_mjk - A_j^m phi_mik + A_k^m phi_mij."""
    aup = np.einsum("...ip,...pm->...im", a, frame.ginv)
    phid = unpack(frame.phi, DIM, 3)
    t = np.einsum("...im,...mjk->...ijk", aup, phid)
    return pack(t + np.transpose(t, _rot3(t.ndim)) + np.transpose(t, _rot3(t.ndim, 2)), DIM, 3)


def diamond_psi(a, frame):
    """Four-slot analogue of diamond_phi; kernel of both maps is 2-forms of 14-type."""
    aup = np.einsum("...ip,...pm->...im", a, frame.ginv)
    psid = unpack(frame.psi, DIM, 4)
    t = np.einsum("...im,...mjkl->...ijkl", aup, psid)
    out = t.copy()
    for s in range(1, 4):
        out += (-1) ** s * np.transpose(t, _rot4(t.ndim, s))
    return pack(out, DIM, 4)


def _rot3(ndim, s=1):
    """Axes permutation cycling the last 3 axes s steps (signed terms of <>)."""
    # the alternating sum A_i phi_mjk - A_j phi_mik + A_k phi_mij equals the
    # cyclic sum over (i,j,k) of the first term, since phi is antisymmetric
    batch = list(range(ndim - 3))
    tail = [ndim - 3, ndim - 2, ndim - 1]
    for _ in range(s):
        tail = tail[1:] + tail[:1]
    return batch + tail


def _rot4(ndim, s=1):
    batch = list(range(ndim - 4))
    tail = [ndim - 4, ndim - 3, ndim - 2, ndim - 1]
    for _ in range(s):
        tail = tail[1:] + tail[:1]
    return batch + tail


@dataclass(frozen=True)
class Decomp2:
    """Four-way split of a 2-tensor: trace, traceless symmetric, 7-, 14-skew.

    vec7 is the 1-form lambda with skew7_ij = lambda^p phi_pij.
    """

    trace: np.ndarray
    sym0: np.ndarray
    vec7: np.ndarray
    skew14: np.ndarray


def vec7_of_skew(k, frame):
    """1-form lambda with the 7-part of the skew tensor k equal to lambda^p phi_pij."""
    phid = unpack(frame.phi, DIM, 3)
    kup = np.einsum("...ij,...ia,...jb->...ab", k, frame.ginv, frame.ginv)
    return np.einsum("...ab,...pab->...p", kup, phid) / 6.0


def seven_tensor(lam, frame):
    """The 2-tensor lambda^p phi_pij of a 1-form lambda."""
    phid = unpack(frame.phi, DIM, 3)
    return np.einsum("...p,...pq,...qij->...ij", lam, frame.ginv, phid)


def project2(t, frame):
    """Split a 2-tensor into trace, traceless symmetric, 7- and 14-parts."""
    tr = np.einsum("...ij,...ij->...", t, frame.ginv)
    sym = 0.5 * (t + np.swapaxes(t, -1, -2))
    skew = 0.5 * (t - np.swapaxes(t, -1, -2))
    sym0 = sym - (tr / DIM)[..., None, None] * frame.g
    lam = vec7_of_skew(skew, frame)
    skew14 = skew - seven_tensor(lam, frame)
    return Decomp2(trace=tr, sym0=sym0, vec7=lam, skew14=skew14)


def reassemble2(d, frame):
    return (
        (d.trace / DIM)[..., None, None] * frame.g
        + d.sym0
        + seven_tensor(d.vec7, frame)
        + d.skew14
    )


def pi14(b, frame):
    """Projection of a 2-form b onto its 14-part: (1/6)(4 b + psi:b)."""
    psid = unpack(frame.psi, DIM, 4)
    bup = np.einsum("...kl,...ka,...lb->...ab", b, frame.ginv, frame.ginv)
    psib = np.einsum("...ijkl,...kl->...ij", psid, bup)
    return (4.0 * b + psib) / 6.0


def pi7(b, frame):
    """Projection of a 2-form b onto its 7-part: (1/6)(2 b - psi:b)."""
    psid = unpack(frame.psi, DIM, 4)
    bup = np.einsum("...kl,...ka,...lb->...ab", b, frame.ginv, frame.ginv)
    psib = np.einsum("...ijkl,...kl->...ij", psid, bup)
    return (2.0 * b - psib) / 6.0


@dataclass(frozen=True)
class Decomp3:
    """3-form split: form = alpha phi + x7 . psi + a27 <> phi (x7 a 1-form)."""

    alpha: np.ndarray
    x7: np.ndarray
    a27: np.ndarray


def project3(w, frame):
    wd = unpack(w, DIM, 3)
    phid = unpack(frame.phi, DIM, 3)
    eta = np.einsum(
        "...ijk,...jp,...kq,...apq->...ia", wd, frame.ginv, frame.ginv, phid,
        optimize=True,
    )
    d = project2(eta, frame)
    # eta(alpha phi) = 6 alpha g, eta(X . psi) = -4 X . phi, eta(A <> phi) = 4 A
    return Decomp3(alpha=d.trace / 42.0, x7=-0.25 * d.vec7, a27=0.25 * d.sym0)


def reassemble3(d, frame):
    psid = unpack(frame.psi, DIM, 4)
    xpsi = pack(
        np.einsum("...p,...pq,...qijk->...ijk", d.x7, frame.ginv, psid), DIM, 3
    )
    return d.alpha[..., None] * frame.phi + xpsi + diamond_phi(d.a27, frame)


@dataclass(frozen=True)
class Decomp4:
    """4-form split eta = S <> psi with S = (trs/7) g + s7^p phi_pij + s27.

    s7 is the 1-form v_k = (1/6) (S_7)_ia phi_iak; s27 is traceless symmetric.
    """

    trs: np.ndarray
    s7: np.ndarray
    s27: np.ndarray

    @property
    def alpha(self):
        """Coefficient in the companion convention S = a/3 g - X.phi / 3 + A."""
        return 3.0 * self.trs / DIM

    @property
    def xvec(self):
        """1-form X with S_7 = -(1/3) X . phi."""
        return -3.0 * self.s7

    def tensor(self, frame):
        return (self.trs / DIM)[..., None, None] * frame.g + seven_tensor(
            self.s7, frame
        ) + self.s27


def project4(w, frame):
    """Decompose a 4-form as S <> psi via the psi-contraction.

    eta^psi_ia = eta_ijkl psi_a^jkl; the components of S are recovered with
    the weights tr S = tr(eta^psi)/96, S_7 = (eta^psi)_7/36,
    S_27 = (eta^psi)_27/12.  The 14-part of eta^psi vanishes identically.
    """
    wd = unpack(w, DIM, 4)
    psid = unpack(frame.psi, DIM, 4)
    eta = np.einsum(
        "...ijkl,...jp,...kq,...lr,...apqr->...ia",
        wd, frame.ginv, frame.ginv, frame.ginv, psid, optimize=True,
    )
    d = project2(eta, frame)
    return Decomp4(trs=d.trace / 96.0, s7=d.vec7 / 36.0, s27=d.sym0 / 12.0)


def reassemble4(d, frame):
    return diamond_psi(d.tensor(frame), frame)


def pullback_phi(phi, m):
    """Pullback of a packed 3-form by the linear map with matrix m."""
    return forms.pullback(phi, m, DIM, 3)


def tensor_norm2(t, ginv, nidx):
    """Squared tensor norm of an all-lower tensor with nidx slots."""
    up = t
    for axis in range(nidx):
        src = list(range(nidx))
        src[axis] = nidx
        up = np.einsum(
            up, [Ellipsis] + src, ginv, [Ellipsis, nidx, axis],
            [Ellipsis] + list(range(nidx)),
        )
    return np.einsum(
        t, [Ellipsis] + list(range(nidx)), up, [Ellipsis] + list(range(nidx)),
        [Ellipsis],
    )
