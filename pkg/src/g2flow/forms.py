"""Packed storage and pointwise exterior algebra for antisymmetric tensors.

A k-form on an n-dimensional space (n = 6 or 7 here) is stored by its
C(n,k) independent components in lexicographic multi-index order, as the
last axis of a numpy array.  Any leading axes are batch axes (grid points),
so every routine in this module works unchanged on single covectors and on
whole fields.

All component indices are *lower*; contractions against a metric are made
explicit by passing the inverse metric where raising is required.  The
Hodge star uses the tensor-norm convention: for canonical multi-indices I
the pairing of two k-forms is sum_I alpha_I beta^I (no factorials).
"""

import itertools
import math
from functools import lru_cache

import numpy as np


def perm_sign(p):
    """Sign of a permutation given as a sequence of integers."""
    q = list(p)
    sign = 1
    for i in range(len(q)):
        while q[i] != i:
            j = q[i]
            q[i], q[j] = q[j], q[i]
            sign = -sign
    return sign


def n_comp(n, k):
    return math.comb(n, k)


@lru_cache(maxsize=None)
def canonical_tuples(n, k):
    """All strictly increasing k-tuples from range(n), lexicographic."""
    return tuple(itertools.combinations(range(n), k))


@lru_cache(maxsize=None)
def _rank_sign_tables(n, k):
    """Dense lookup over all n^k multi-indices.

    rank[idx] = packed slot of sorted(idx) (0 when idx has a repeat),
    sign[idx] = permutation sign (0 when idx has a repeat).
    """
    rank = np.zeros((n,) * k, dtype=np.int64)
    sign = np.zeros((n,) * k, dtype=np.int8)
    slot = {t: i for i, t in enumerate(canonical_tuples(n, k))}
    for idx in itertools.product(range(n), repeat=k):
        if len(set(idx)) < k:
            continue
        srt = tuple(sorted(idx))
        # sign of the permutation taking the sorted tuple to idx
        order = tuple(srt.index(i) for i in idx)
        rank[idx] = slot[srt]
        sign[idx] = perm_sign(order)
    return rank, sign


def unpack(w, n, k):
    """Packed (..., C(n,k)) -> dense antisymmetric (..., n, ..., n).

    Packed forms always carry a trailing component axis, of size 1 when
    k = 0; the dense representation of a 0-form is a plain scalar array.
    """
    if k == 0:
        return w[..., 0]
    rank, sign = _rank_sign_tables(n, k)
    return w[..., rank] * sign


def pack(dense, n, k):
    """Dense antisymmetric (..., n^k) -> packed canonical components."""
    if k == 0:
        return dense[..., None]
    flat_idx = np.array(
        [np.ravel_multi_index(t, (n,) * k) for t in canonical_tuples(n, k)]
    )
    return dense.reshape(dense.shape[: dense.ndim - k] + (-1,))[..., flat_idx]


@lru_cache(maxsize=None)
def wedge_table(n, ka, kb):
    """Dense structure tensor W with (a ^ b)_c = W[c, i, j] a_i b_j."""
    kc = ka + kb
    out = np.zeros((n_comp(n, kc), n_comp(n, ka), n_comp(n, kb)))
    slot_a = {t: i for i, t in enumerate(canonical_tuples(n, ka))}
    slot_b = {t: i for i, t in enumerate(canonical_tuples(n, kb))}
    for c, idx in enumerate(canonical_tuples(n, kc)):
        for sub in itertools.combinations(range(kc), ka):
            ia = tuple(idx[i] for i in sub)
            ib = tuple(idx[i] for i in range(kc) if i not in sub)
            # shuffle sign of (ia, ib) inside idx
            perm = list(sub) + [i for i in range(kc) if i not in sub]
            out[c, slot_a[ia], slot_b[ib]] += perm_sign(perm)
    return out


def wedge(a, ka, b, kb, n):
    """Wedge product of packed forms."""
    if ka == 0:
        return np.asarray(a)[..., None] * b
    if kb == 0:
        return a * np.asarray(b)[..., None]
    w = wedge_table(n, ka, kb)
    return np.einsum("cij,...i,...j->...c", w, a, b)


@lru_cache(maxsize=None)
def interior_table(n, k):
    """Structure tensor I with (X . w)_c = I[c, m, d] X^m w_d for packed w."""
    out = np.zeros((n_comp(n, k - 1), n, n_comp(n, k)))
    rank, sign = _rank_sign_tables(n, k)
    for c, idx in enumerate(canonical_tuples(n, k - 1)):
        for m in range(n):
            if m in idx:
                continue
            full = (m,) + idx
            out[c, m, rank[full]] = sign[full]
    return out


def interior(x_up, w, n, k):
    """Interior product X . w of a raised vector with a packed k-form."""
    t = interior_table(n, k)
    return np.einsum("cmd,...m,...d->...c", t, x_up, w)


@lru_cache(maxsize=None)
def hodge_table(n, k):
    """Gather table for the star of a k-form.

    For each output slot J (canonical (n-k)-tuple) returns the slot of the
    complementary k-tuple I = J^c and the sign eps(I, J).
    """
    slot_in = {t: i for i, t in enumerate(canonical_tuples(n, k))}
    if k in (0, n):
        return np.zeros(1, dtype=np.int64), np.ones(1, dtype=np.int8)
    m = n_comp(n, n - k)
    comp = np.zeros(m, dtype=np.int64)
    sign = np.zeros(m, dtype=np.int8)
    for j, idx in enumerate(canonical_tuples(n, n - k)):
        rest = tuple(i for i in range(n) if i not in idx)
        comp[j] = slot_in[rest]
        sign[j] = perm_sign(rest + tuple(idx))
    return comp, sign


def _convert_form(w, m, n, k):
    """Contract every slot of a packed k-form with the matrix m (symmetric)."""
    if k == 0:
        return w
    if k <= 4:
        d = unpack(w, n, k)
        for axis in range(k):
            src = list(range(k))
            dst = list(range(k))
            src[axis] = k
            d = np.einsum(
                d, [Ellipsis] + src, m, [Ellipsis, k, axis], [Ellipsis] + dst
            )
        return pack(d, n, k)
    # high degree: packed minor-determinant route, w^I = det(m[I, J]) w_J,
    # looping over slot pairs to keep memory flat
    tuples = canonical_tuples(n, k)
    out = np.zeros(np.broadcast_shapes(w.shape, m.shape[:-2] + (len(tuples),)))
    for i, ti in enumerate(tuples):
        rows = m[..., list(ti), :]
        for j, tj in enumerate(tuples):
            out[..., i] += np.linalg.det(rows[..., :, list(tj)]) * w[..., j]
    return out


def raise_form(w, ginv, n, k):
    """Raise all k indices of a packed form with the inverse metric."""
    return _convert_form(w, ginv, n, k)


def lower_form(w, g, n, k):
    """Lower all k indices of a packed contravariant form with the metric."""
    return _convert_form(w, g, n, k)


def hodge(w, k, ginv, vol, n, g=None):
    """Metric Hodge star of a packed k-form.

    vol is the density of the volume form against the coordinate top form
    (both may carry batch axes).  For k > n/2 the star is evaluated through
    its contravariant form, which needs the metric itself; it is recomputed
    from ginv when not supplied.
    """
    vol = np.asarray(vol)
    comp, sign = hodge_table(n, k)
    if k <= n - k:
        # (star w)_J = vol * eps(I, J) * w^I  with I the complement of J
        up = raise_form(w, ginv, n, k)
        return up[..., comp] * sign * vol[..., None]
    # (star w)^J = eps(I, J) w_I / vol, then lower the n-k output slots
    con = w[..., comp] * sign / vol[..., None]
    if g is None:
        g = np.linalg.inv(ginv)
    return lower_form(con, g, n, n - k)


def inner(a, b, ginv, n, k):
    """Pointwise inner product over canonical components: a_I b^I.

    This is the form inner product for which the codifferential is the
    L2-adjoint of d; the tensor norm used for contraction identities is
    k! times this one (see tensor_inner).
    """
    return np.sum(a * raise_form(b, ginv, n, k), axis=-1)


def tensor_inner(a, b, ginv, n, k):
    """Full index-sum pairing a_{i1..ik} b^{i1..ik} of packed k-forms."""
    return math.factorial(k) * inner(a, b, ginv, n, k)


def pullback(w, m, n, k):
    """Pullback of a packed k-form by the linear map with matrix m.

    (m* w)_{i1..ik} = w_{a1..ak} m[a1,i1] ... m[ak,ik].
    """
    d = unpack(w, n, k)
    for axis in range(k):
        src = list(range(k))
        src[axis] = k
        d = np.einsum(d, [Ellipsis] + src, m, [Ellipsis, k, axis], [Ellipsis] + list(range(k)))
    return pack(d, n, k)


def form_to_dense(w, n, k):
    return unpack(w, n, k)


def dense_to_form(d, n, k):
    return pack(d, n, k)
