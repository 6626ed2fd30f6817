"""Ricci curvature of G2-structures from torsion data.

Two independent expressions are implemented: the general symmetrized
torsion Bianchi form (any G2-structure, from T and nabla T), and the
conformally coclosed form in terms of tau0, tau3' and the dilaton.  Both
are cross-checked against the coordinate finite-difference Ricci in grid.

Also here: the generalized Ricci soliton residual -2 Ric - 4 Hess f + H^2/2
and the fixed-point Riemannian system residuals (graviton, flux equation
of motion, dilaton) with their scalar consistency identities.
"""

from dataclasses import dataclass

import numpy as np

from . import algebra, forms
from . import grid as gridmod
from . import torsion as torsionmod
from .algebra import DIM
from .forms import unpack


def _sym(m):
    return m + np.swapaxes(m, -1, -2)


def ricci_general(ff, t=None, dt=None):
    """Ricci tensor from torsion and its covariant derivative.

    Valid for every G2-structure; symmetric by construction.
    """
    fr = ff.frame
    gup = fr.ginv
    phid = unpack(fr.phi, DIM, 3)
    psid = unpack(fr.psi, DIM, 4)
    if t is None:
        t = torsionmod.full_torsion(ff)
    if dt is None:
        dt = gridmod.covariant_derivative(ff.grid, t, 2, ff.gamma)
    tr_t = np.einsum("...ij,...ij->...", t, gup)
    curl_t = np.einsum("...piq,...pa,...qb,...abm->...im", dt, gup, gup, phid,
                       optimize=True)
    grad_vt = np.einsum("...ipq,...pa,...qb,...abm->...im", dt, gup, gup, phid,
                        optimize=True)
    tt = np.einsum("...im,...mn,...na->...ia", t, gup, t)
    t_upup = np.einsum("...pq,...pc,...qd->...cd", t, gup, gup)
    t_up = np.einsum("...ir,...rs->...is", t, gup)
    tpsi = np.einsum("...cd,...is,...acds->...ia", t_upup, t_up, psid,
                     optimize=True)
    return (
        0.5 * _sym(curl_t)
        - 0.5 * _sym(grad_vt)
        - 0.5 * _sym(tt)
        + 0.5 * tr_t[..., None, None] * _sym(t)
        + 0.5 * _sym(tpsi)
    )


@dataclass(frozen=True)
class CccDerivatives:
    """Derivative bundle shared by every conformally coclosed formula."""

    df: np.ndarray          # 1-form nabla f
    hess: np.ndarray        # Hessian of f
    lap: np.ndarray         # Laplacian of f
    ndf2: np.ndarray        # |nabla f|^2
    dtau0: np.ndarray       # 1-form nabla tau0
    dtau3: np.ndarray       # (..., m, i, j) = nabla_m tau3'_ij
    ntau3: np.ndarray       # |tau3'|^2


def ccc_derivatives(ff, td):
    fr = ff.frame
    df = gridmod.partial_all(ff.grid, td.f)
    hess = gridmod.hessian(ff.grid, td.f, ff.gamma)
    lap = np.einsum("...ij,...ij->...", fr.ginv, hess)
    ndf2 = np.einsum("...i,...ij,...j->...", df, fr.ginv, df)
    dtau0 = gridmod.partial_all(ff.grid, td.tau0)
    dtau3 = gridmod.covariant_derivative(ff.grid, td.tau3p, 2, ff.gamma)
    ntau3 = algebra.tensor_norm2(td.tau3p, fr.ginv, 2)
    return CccDerivatives(df=df, hess=hess, lap=lap, ndf2=ndf2,
                          dtau0=dtau0, dtau3=dtau3, ntau3=ntau3)


def ricci_ccc(ff, td, der=None):
    """Ricci tensor of a conformally coclosed structure from (tau0, tau3', f)."""
    fr = ff.frame
    gup = fr.ginv
    phid = unpack(fr.phi, DIM, 3)
    if der is None:
        der = ccc_derivatives(ff, td)
    curl3 = np.einsum("...piq,...pa,...qb,...abm->...im", der.dtau3, gup, gup,
                      phid, optimize=True)
    t3t3 = np.einsum("...im,...mn,...na->...ia", td.tau3p, gup, td.tau3p)
    dff = np.einsum("...i,...a->...ia", der.df, der.df)
    g = fr.g
    return (
        -0.5 * _sym(curl3)
        - 2.5 * der.hess
        - 0.5 * der.lap[..., None, None] * g
        + 0.375 * (td.tau0 ** 2)[..., None, None] * g
        - 1.25 * td.tau0[..., None, None] * td.tau3p
        - t3t3
        - 1.25 * dff
        + 1.25 * der.ndf2[..., None, None] * g
    )


def scalar_ccc(ff, td, der=None):
    """Scalar curvature of a conformally coclosed structure."""
    if der is None:
        der = ccc_derivatives(ff, td)
    return (
        -6.0 * der.lap
        + (21.0 / 8.0) * td.tau0 ** 2
        - der.ntau3
        + 7.5 * der.ndf2
    )


def h_squared(ff, h):
    """Brute-force (H^2)_ia = H_imn H_a^mn for a packed 3-form field."""
    hd = unpack(h, DIM, 3)
    gup = ff.frame.ginv
    return np.einsum("...imn,...mp,...nq,...apq->...ia", hd, gup, gup, hd,
                     optimize=True)


def skew_torsion_flux(ff, td):
    """The 3-form H = (1/6) tau0 phi - tau3 - tau1^sharp . psi (tau2 = 0 case)."""
    fr = ff.frame
    tau3 = algebra.diamond_phi(td.tau3p, fr)
    t1_up = np.einsum("...i,...ij->...j", td.tau1, fr.ginv)
    t1psi = forms.interior(t1_up, fr.psi, DIM, 4)
    return (td.tau0 / 6.0)[..., None] * fr.phi - tau3 - t1psi


@dataclass(frozen=True)
class SolitonResidual:
    einstein: np.ndarray    # -2 Ric - 4 Hess f + H^2 / 2
    h_closed: np.ndarray    # dH (packed 4-form)
    h_divergence: np.ndarray  # d*(e^{-2f} H) (packed 2-form)
    dilaton_eq: np.ndarray

    def summary(self, grid, ginv):
        return {
            "einstein_linf": gridmod.tensor_linf(grid, self.einstein, 2, ginv),
            "dH_linf": gridmod.form_linf(grid, self.h_closed, 4, ginv),
            "h_div_linf": gridmod.form_linf(grid, self.h_divergence, 2, ginv),
            "dilaton_linf": float(np.abs(self.dilaton_eq).max()),
        }


def soliton_residual(ff, h, f, ric=None):
    """Generalized Ricci soliton residuals for the triple (g, H, f)."""
    fr = ff.frame
    if ric is None:
        ric = ricci_general(ff)
    hess = gridmod.hessian(ff.grid, f, ff.gamma)
    lap = np.einsum("...ij,...ij->...", fr.ginv, hess)
    h2 = h_squared(ff, h)
    einstein = -2.0 * ric - 4.0 * hess + 0.5 * h2
    dh = gridmod.exterior_d(ff.grid, h, 3)
    hdiv = gridmod.codifferential(
        ff.grid, np.exp(-2.0 * f)[..., None] * h, 3, fr.ginv, fr.vol
    )
    scal = np.einsum("...ij,...ij->...", fr.ginv, ric)
    df = gridmod.partial_all(ff.grid, f)
    ndf2 = np.einsum("...i,...ij,...j->...", df, fr.ginv, df)
    nh2 = forms.tensor_inner(h, h, fr.ginv, DIM, 3)
    dil = scal + 4.0 * lap - 4.0 * ndf2 - nh2 / 12.0
    return SolitonResidual(einstein=einstein, h_closed=dh, h_divergence=hdiv,
                           dilaton_eq=dil)


def heterotic_residuals(ff, td, c=4.0 / 3.0):
    """Riemannian-system residuals and identities for a ccc structure.

    The norm identity |H|^2 = 6 |nabla f|^2 + (7/6) tau0^2 + 12 |tau3'|^2
    and the trace link (R + 2 lap f - |H|^2/4) = -8 trS(C=4/3) hold on
    every conformally coclosed structure; the graviton, flux and dilaton
    equations themselves vanish only at fixed points and are reported as
    residual norms.
    """
    from .exact4 import fixed_point_components

    fr = ff.frame
    der = ccc_derivatives(ff, td)
    ric = ricci_ccc(ff, td, der)
    scal = scalar_ccc(ff, td, der)
    h = skew_torsion_flux(ff, td)
    h2 = h_squared(ff, h)
    nh2 = forms.tensor_inner(h, h, fr.ginv, DIM, 3)
    nh2_closed = 6.0 * der.ndf2 + (7.0 / 6.0) * td.tau0 ** 2 + 12.0 * der.ntau3

    einstein = ric + 2.0 * der.hess - 0.25 * h2
    h_eom = gridmod.codifferential(
        ff.grid, np.exp(-2.0 * td.f)[..., None] * h, 3, fr.ginv, fr.vol
    )
    dil = scal + 4.0 * der.lap - 4.0 * der.ndf2 - nh2 / 12.0 - (7.0 * td.tau0 / 6.0) ** 2

    tr_einstein = np.einsum("...ij,...ij->...", fr.ginv, einstein)
    tr_scalar_path = scal + 2.0 * der.lap - 0.25 * nh2_closed
    trs_flow, _, _ = fixed_point_components(ff, td, 4.0 / 3.0, der)
    return {
        "einstein_linf": gridmod.tensor_linf(ff.grid, einstein, 2, fr.ginv),
        "h_eom_linf": gridmod.form_linf(ff.grid, h_eom, 2, fr.ginv),
        "dilaton_linf": float(np.abs(dil).max()),
        "norm_h_identity": float(np.abs(nh2 - nh2_closed).max()),
        "trace_consistency": float(np.abs(tr_einstein - tr_scalar_path).max()),
        "trace_fixed_point_link": float(
            np.abs(tr_scalar_path + 8.0 * trs_flow).max()
        ),
    }


def curvature_report(ff, td=None):
    """Both Ricci paths against the finite-difference oracle."""
    fr = ff.frame
    t = torsionmod.full_torsion(ff)
    ric_gen = ricci_general(ff, t)
    oracle = gridmod.ricci_fd(ff.grid, fr.g)
    out = {
        "general_vs_fd": float(np.abs(ric_gen - oracle).max()),
        "asymmetry": float(np.abs(ric_gen - np.swapaxes(ric_gen, -1, -2)).max()),
    }
    if td is not None:
        der = ccc_derivatives(ff, td)
        ric_c = ricci_ccc(ff, td, der)
        scal_c = scalar_ccc(ff, td, der)
        out["ccc_vs_fd"] = float(np.abs(ric_c - oracle).max())
        out["general_vs_ccc"] = float(np.abs(ric_gen - ric_c).max())
        out["trace_vs_scalar"] = float(
            np.abs(np.einsum("...ij,...ij->...", fr.ginv, ric_c) - scal_c).max()
        )
    return out
