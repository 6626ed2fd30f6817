"""Torsion of a G2-structure field, torsion forms, and the Bianchi suite.

The torsion 2-tensor is defined by nabla_m phi_ijk = T_mp psi^p_ijk and
extracted with the contraction T_mp = (1/24) (nabla_m phi_ijk) psi_p^ijk
(the 1/24 inverts the psi-psi contraction, which equals 24 g).

Torsion forms: with the type split of T,

    T = (tau0/4) g - tau3' + tau1^p phi_pij - (1/2) tau2,

tau0 = (4/7) tr T, tau3' is minus the traceless symmetric part, tau1 is
the 7-part 1-form, and tau2 is -2 times the 14-part.  The structure
equations reconstruct the exterior derivatives:

    d phi = tau0 psi + 3 tau1 ^ phi + star(tau3'<>phi)
    d psi = 4 tau1 ^ psi + star(tau2)

A structure is conformally coclosed when d(e^{-2f} psi) = 0 for the
dilaton e^{4f} = vol_phi / vol_R; then tau2 = 0 and tau1 = df/2.
"""

from dataclasses import dataclass

import numpy as np

from . import algebra, forms
from . import grid as gridmod
from .algebra import DIM, G2Frame
from .forms import pack, unpack


@dataclass(frozen=True)
class FieldFrame:
    """G2Frame plus the grid objects every torsion computation needs."""

    grid: gridmod.GridSpec
    frame: G2Frame
    gamma: np.ndarray

    @classmethod
    def from_phi(cls, grid, phi):
        frame = G2Frame.from_phi(phi)
        gamma = gridmod.christoffel(grid, frame.g)
        return cls(grid=grid, frame=frame, gamma=gamma)


@dataclass(frozen=True)
class TorsionData:
    T: np.ndarray
    tau0: np.ndarray
    tau1: np.ndarray       # 1-form
    tau2: np.ndarray       # 2-tensor in the 14-space
    tau3p: np.ndarray      # traceless symmetric 2-tensor
    f: np.ndarray = None   # dilaton, filled by the caller when relevant


def nabla_phi(ff):
    """Covariant derivative of phi, dense (..., m, i, j, k)."""
    return gridmod.covariant_derivative_form(ff.grid, ff.frame.phi, 3, ff.gamma)


def full_torsion(ff, dphi=None):
    """Torsion 2-tensor T_mp (both indices down) of a positive 3-form field."""
    fr = ff.frame
    if dphi is None:
        dphi = nabla_phi(ff)
    psi_up = unpack(forms.raise_form(fr.psi, fr.ginv, DIM, 4), DIM, 4)
    t_up = np.einsum("...mijk,...pijk->...mp", dphi, psi_up) / 24.0
    return np.einsum("...mp,...pq->...mq", t_up, fr.g)


def torsion_defect(ff, t=None):
    """Residual of the defining relation nabla phi - T psi (max norm)."""
    dphi = nabla_phi(ff)
    if t is None:
        t = full_torsion(ff, dphi)
    psid = unpack(ff.frame.psi, DIM, 4)
    rec = np.einsum("...mp,...pq,...qijk->...mijk", t, ff.frame.ginv, psid)
    return float(np.abs(dphi - rec).max())


def torsion_forms(t, frame):
    """Split T into (tau0, tau1, tau2, tau3')."""
    d = algebra.project2(t, frame)
    tau0 = 4.0 * d.trace / 7.0
    tau3p = -d.sym0
    tau1 = d.vec7
    tau2 = -2.0 * d.skew14
    return TorsionData(T=t, tau0=tau0, tau1=tau1, tau2=tau2, tau3p=tau3p)


def assemble_torsion(td, frame):
    """Inverse of torsion_forms, per the torsion-form relations."""
    return (
        (td.tau0 / 4.0)[..., None, None] * frame.g
        - td.tau3p
        + algebra.seven_tensor(td.tau1, frame)
        - 0.5 * td.tau2
    )


def dilaton(vol, vol_r):
    """f = (1/4) log(vol_phi / vol_R) pointwise."""
    return 0.25 * np.log(vol / vol_r)


def dphi_residual(ff, td):
    """Max norm of d phi - (tau0 psi + 3 tau1 ^ phi + star tau3)."""
    fr = ff.frame
    dphi = gridmod.exterior_d(ff.grid, fr.phi, 3)
    tau3 = algebra.diamond_phi(td.tau3p, fr)
    rec = (
        td.tau0[..., None] * fr.psi
        + 3.0 * forms.wedge(td.tau1, 1, fr.phi, 3, DIM)
        + forms.hodge(tau3, 3, fr.ginv, fr.vol, DIM)
    )
    return float(np.abs(dphi - rec).max())


def dpsi_residual(ff, td):
    """Max norm of d psi - (4 tau1 ^ psi + star tau2)."""
    fr = ff.frame
    dpsi = gridmod.exterior_d(ff.grid, fr.psi, 4)
    rec = 4.0 * forms.wedge(td.tau1, 1, fr.psi, 4, DIM) + forms.hodge(
        pack_2form(td.tau2), 2, fr.ginv, fr.vol, DIM
    )
    return float(np.abs(dpsi - rec).max())


def pack_2form(t):
    """Antisymmetric 2-tensor (..., 7, 7) -> packed 2-form components."""
    return pack(t, DIM, 2)


def ccc_residual(ff, f):
    """L2 and max norms of d(e^{-2f} psi) on the grid."""
    fr = ff.frame
    w = np.exp(-2.0 * f)[..., None] * fr.psi
    r = gridmod.exterior_d(ff.grid, w, 4)
    l2 = gridmod.form_l2(ff.grid, r, 5, fr.ginv, fr.vol)
    linf = gridmod.form_linf(ff.grid, r, 5, fr.ginv)
    return {"l2": l2, "linf": linf}


def grad(ff, f):
    """Coordinate gradient 1-form df."""
    return gridmod.partial_all(ff.grid, f)


def ccc_torsion_check(ff, td):
    """Checks special to conformally coclosed structures.

    Returns max-norm residuals of tau2 = 0, tau1 = df/2, the contraction
    values PT = -2 (grad f) . phi and VT = 3 grad f, and the symmetry
    relations T(VT) = T^t(VT), div T = div T^t.
    """
    fr = ff.frame
    df = grad(ff, td.f)
    phid = unpack(fr.phi, DIM, 3)
    psid = unpack(fr.psi, DIM, 4)
    gup = fr.ginv
    t_upup = np.einsum("...ij,...ip,...jq->...pq", td.T, gup, gup)
    pt = np.einsum("...kl,...klij->...ij", t_upup, psid)
    vt = np.einsum("...kl,...klj,...ji->...i", t_upup, phid, gup)
    # expected values for conformally coclosed torsion
    pt_exp = -2.0 * np.einsum("...p,...pq,...qij->...ij", df, gup, phid)
    vt_exp = 3.0 * np.einsum("...i,...ij->...j", df, gup)
    t_vt = np.einsum("...kp,...p->...k", td.T, vt)
    tt_vt = np.einsum("...pk,...p->...k", td.T, vt)
    div_t = divergence(ff, td.T, side="second")
    div_tt = divergence(ff, td.T, side="first")
    return {
        "tau2": float(np.abs(td.tau2).max()),
        "tau1_minus_half_df": float(np.abs(td.tau1 - 0.5 * df).max()),
        "PT": float(np.abs(pt - pt_exp).max()),
        "VT": float(np.abs(vt - vt_exp).max()),
        "T_vs_Tt_on_VT": float(np.abs(t_vt - tt_vt).max()),
        "divT_vs_divTt": float(np.abs(div_t - div_tt).max()),
    }


def divergence(ff, t, side="first"):
    """div of a 2-tensor: contract nabla_p t over p and the chosen slot.

    side="first" gives nabla_p t_pk (the divergence of t), side="second"
    gives nabla_p t_kp (the divergence of the transpose).
    """
    dt = gridmod.covariant_derivative(ff.grid, t, 2, ff.gamma)
    gup = ff.frame.ginv
    if side == "first":
        return np.einsum("...pik,...pi->...k", dt, gup)
    return np.einsum("...pki,...pi->...k", dt, gup)


def conformal_auxiliary(ff, f):
    """Auxiliary coclosed structure phi~ = e^{-3f/2} phi and its checks.

    Returns the new FieldFrame together with max-norm residuals of the
    scaling laws for g, psi, the torsion forms, and the auxiliary dilaton.
    """
    fr = ff.frame
    scale = np.exp(-1.5 * f)
    phi_aux = scale[..., None] * fr.phi
    ff_aux = FieldFrame.from_phi(ff.grid, phi_aux)
    fra = ff_aux.frame
    td = torsion_forms(full_torsion(ff), fr)
    tda = torsion_forms(full_torsion(ff_aux), fra)
    ef = np.exp(-f)
    res = {
        "g": float(np.abs(fra.g - ef[..., None, None] * fr.g).max()),
        "psi": float(np.abs(fra.psi - np.exp(-2.0 * f)[..., None] * fr.psi).max()),
        "tau0": float(np.abs(tda.tau0 - np.exp(0.5 * f) * td.tau0).max()),
        "tau1": float(np.abs(tda.tau1).max()),
        "tau2": float(np.abs(tda.tau2).max()),
        "tau3p": float(np.abs(tda.tau3p - np.exp(-0.5 * f)[..., None, None] * td.tau3p).max()),
        "dpsi_aux": gridmod.form_linf(
            ff.grid, gridmod.exterior_d(ff.grid, fra.psi, 4), 5, fra.ginv
        ),
    }
    return ff_aux, res


# -- the G2-Bianchi identity suite -------------------------------------------


def bianchi_suite(ff, ccc_f=None):
    """Max-norm residuals of the torsion/curvature compatibility identities.

    The first four hold for any G2-structure; the last two require a
    conformally coclosed input and are skipped (None) when ccc_f is not
    given.  Residuals shrink at stencil order under grid refinement.
    """
    fr = ff.frame
    gup = fr.ginv
    phid = unpack(fr.phi, DIM, 3)
    psid = unpack(fr.psi, DIM, 4)
    t = full_torsion(ff)
    td = torsion_forms(t, fr)
    dt = gridmod.covariant_derivative(ff.grid, t, 2, ff.gamma)
    riem = gridmod.riemann_fd(ff.grid, fr.g)

    out = {}
    # skew part of nabla T against torsion-squared and curvature
    tt = np.einsum("...ip,...pa,...jq,...qb,...abk->...ijk", t, gup, t, gup, phid,
                   optimize=True)
    rm = 0.5 * np.einsum("...ijpq,...pa,...qb,...abk->...ijk", riem, gup, gup, phid,
                         optimize=True)
    lhs = dt - np.einsum("...jik->...ijk", dt)
    out["full"] = float(np.abs(lhs - tt - rm).max())

    # 7-part: div T^t - grad(tr T) - T(VT) = 0
    tr_t = np.einsum("...ij,...ij->...", t, gup)
    vt = np.einsum("...pq,...pa,...qb,...abk->...k",
                   t, gup, gup, phid, optimize=True)
    t_vt = np.einsum("...km,...mp,...p->...k", t, gup, vt)
    out["seven_a"] = float(
        np.abs(divergence(ff, t, side="second")
               - gridmod.partial_all(ff.grid, tr_t) - t_vt).max()
    )

    # 7-part companion: <nabla T, psi> - (tr T) VT + V(T^2) + T^t (VT) = 0
    dt_psi = np.einsum("...pqm,...pa,...qb,...mc,...abck->...k",
                       dt, gup, gup, gup, psid, optimize=True)
    t2 = np.einsum("...pm,...mq,...qr->...pr", t, gup, t)
    v_t2 = np.einsum("...pq,...pa,...qb,...abk->...k", t2, gup, gup, phid,
                     optimize=True)
    tt_vt = np.einsum("...mk,...mp,...p->...k", t, gup, vt)
    out["seven_b"] = float(np.abs(dt_psi - tr_t[..., None] * vt + v_t2 + tt_vt).max())

    # 14-part: pi14(K) = -(tr T) T_14 + (T^2)_14 + ((PT) T)_14,
    # K_ij = (nabla_p T_qi) phi^pq_j
    k3 = np.einsum("...pqi,...pa,...qb,...abj->...ij", dt, gup, gup, phid,
                   optimize=True)
    pt = np.einsum("...kl,...ka,...lb,...abij->...ij", t, gup, gup, psid,
                   optimize=True)
    pt_t = np.einsum("...im,...mp,...pj->...ij", pt, gup, t)
    rhs14 = -tr_t[..., None, None] * t + t2 + pt_t
    res14 = _skew14(k3 - rhs14, fr)
    out["fourteen"] = float(np.abs(res14).max())

    if ccc_f is not None:
        df = grad(ff, ccc_f)
        dfup = np.einsum("...i,...ij->...j", df, gup)
        dtau0 = gridmod.partial_all(ff.grid, td.tau0)
        dtau3 = gridmod.covariant_derivative(ff.grid, td.tau3p, 2, ff.gamma)
        div_tau3 = np.einsum("...mki,...mi->...k", dtau3, gup)
        # ccc 7-part: (3/2) grad tau0 + div tau3' = -(3/4) tau0 grad f + 3 tau3'(grad f)
        lhs7 = 1.5 * dtau0 + div_tau3
        rhs7 = (-0.75 * td.tau0[..., None] * df
                + 3.0 * np.einsum("...km,...m->...k", td.tau3p, dfup))
        out["ccc_seven"] = float(np.abs(lhs7 - rhs7).max())
        # ccc 14-part: (1/6)(div tau3')_k phi^k_ia + (1/2)[(nabla_p tau3'_iq)phi^pq_a - (i<->a)] = 0
        curl3 = np.einsum("...piq,...pa,...qb,...abm->...im", dtau3, gup, gup, phid,
                          optimize=True)
        lhs14 = (
            np.einsum("...k,...kp,...pia->...ia", div_tau3, gup, phid) / 6.0
            + 0.5 * (curl3 - np.einsum("...ai->...ia", curl3))
        )
        out["ccc_fourteen"] = float(np.abs(lhs14).max())
    return out


def _skew14(t, frame):
    skew = 0.5 * (t - np.swapaxes(t, -1, -2))
    return algebra.pi14(skew, frame)
