"""NumPy fallback for the per-anchor ratio-loss kernel.

Same contract as the compiled module ``gclkit._core``. Kept in pure NumPy so
the package runs without a C toolchain; the benchmark script compares the two.
"""

import numpy as np

IS_COMPILED = False


def ratio_terms(e, a, active, eps, log_transform, inv_norm):
    """Per-anchor contrastive ratios, the scalar loss, and d(loss)/d(e).

    For each active anchor row ``i``:

        r_i = sum_{a_ij > 0} exp(e_ij) / (sum_{a_ij != 0} exp(e_ij) + eps)

    evaluated with max-exponent subtraction over the row's nonzero support.
    The loss is ``-inv_norm * sum_i T(r_i)`` with T = identity or log.

    Parameters
    ----------
    e : (M, M) float64 exponent matrix (similarities are exp(e)).
    a : (M, M) float64 affinity matrix.
    active : (M,) bool, anchors with nonempty positive support.
    eps : denominator guard.
    log_transform : apply log to each ratio before averaging.
    inv_norm : 1 / normalization count.

    Returns
    -------
    (loss, r, de) where r is (M,) with zeros on inactive rows and de is the
    (M, M) gradient of the loss w.r.t. the exponent matrix.
    """
    m = e.shape[0]
    r = np.zeros(m)
    de = np.zeros((m, m))
    if not np.any(active):
        return 0.0, r, de

    pos = a > 0.0
    nz = a != 0.0
    act = np.asarray(active, dtype=bool)

    # Row-wise max over nonzero support; inactive rows get a dummy 0 shift.
    shifted = np.where(nz, e, -np.inf)
    mx = np.max(shifted, axis=1)
    mx[~act] = 0.0

    w = np.exp(np.where(nz, e - mx[:, None], -np.inf))
    w[~nz] = 0.0
    p = np.where(pos, w, 0.0)

    num = p.sum(axis=1)
    den = w.sum(axis=1) + eps * np.exp(-mx)

    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = num / den
    ratios[~act] = 0.0
    r[:] = ratios

    if log_transform:
        terms = np.log(ratios[act])
        with np.errstate(divide="ignore"):
            dl_dr = -inv_norm / ratios
        dl_dr[~act] = 0.0
    else:
        terms = ratios[act]
        dl_dr = np.full(m, -inv_norm)
    loss = -inv_norm * float(terms.sum())

    # dr/de_ij = (p_ij * den - num * w_ij) / den^2 ; negatives have p_ij = 0.
    dr = (p * den[:, None] - num[:, None] * w) / (den * den)[:, None]
    dr[~act] = 0.0
    de[:] = dl_dr[:, None] * dr
    de[~act] = 0.0
    return loss, r, de
