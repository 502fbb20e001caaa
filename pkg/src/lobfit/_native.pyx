# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled fit kernels; the arithmetic mirrors lobfit._pykernels.

Any change here must be made in _pykernels.py as well - the two
backends are held to the same results by the equivalence tests.
"""

from libc.math cimport exp, lgamma, log, log1p, pow

BACKEND = "native"

cdef double _INF = float("inf")
cdef double _EXP_CAP = 709.0

KIND_DW = 0
KIND_BB = 1
KIND_POW = 2

DEF _MAX_TICKS = 64


cdef inline double _exp_c(double v) nogil:
    if v > _EXP_CAP:
        return _INF
    return exp(v)


cdef double _dw_nll_c(bint truncated, const double* w, int n,
                      double z0, double z1) nogil:
    cdef double lq = -log1p(_exp_c(-z0))
    cdef double beta = _exp_c(z1)
    cdef double nll = 0.0
    cdef double mass = 0.0
    cdef double prev = 1.0
    cdef double cur, e, p, wi, sumw
    cdef int i
    if not lq < 0.0 or lq == -_INF or beta == _INF or beta != beta:
        return _INF
    for i in range(1, n + 1):
        e = pow(<double>i, beta) * lq
        cur = _exp_c(e) if e <= 0.0 else _INF
        p = prev - cur
        prev = cur
        if truncated:
            mass += p
        wi = w[i - 1]
        if wi != 0.0:
            if not p > 0.0:
                return _INF
            nll -= wi * log(p)
    if truncated:
        if not mass > 0.0:
            return _INF
        sumw = 0.0
        for i in range(n):
            sumw += w[i]
        nll += log(mass) * sumw
    if nll != nll:
        return _INF
    return nll


cdef double _bb_nll_c(bint truncated, const double* w, int n,
                      double z0, double z1) nogil:
    cdef double alpha = _exp_c(z0)
    cdef double beta = _exp_c(z1)
    cdef double nb, lbab, lgn1, lgden, nll, mass, x, lp, wi, sumw
    cdef int i
    if alpha == _INF or alpha != alpha or beta == _INF or beta != beta:
        return _INF
    if alpha <= 0.0 or beta <= 0.0:
        return _INF
    nb = <double>(n - 1)
    lbab = lgamma(alpha) + lgamma(beta) - lgamma(alpha + beta)
    lgn1 = lgamma(nb + 1.0)
    lgden = lgamma(nb + alpha + beta)
    if lbab == _INF or lbab != lbab or lgden == _INF or lgden != lgden:
        return _INF
    nll = 0.0
    mass = 0.0
    for i in range(1, n + 1):
        x = <double>(i - 1)
        lp = (lgn1 - lgamma(x + 1.0) - lgamma(nb - x + 1.0)
              + lgamma(x + alpha) + lgamma(nb - x + beta) - lgden - lbab)
        if truncated:
            mass += _exp_c(lp)
        wi = w[i - 1]
        if wi != 0.0:
            nll -= wi * lp
    if truncated:
        if not mass > 0.0:
            return _INF
        sumw = 0.0
        for i in range(n):
            sumw += w[i]
        nll += log(mass) * sumw
    if nll != nll:
        return _INF
    return nll


cdef double _pow_sse_c(const double* w, int n, double z0, double z1) nogil:
    cdef double k = _exp_c(z0)
    cdef double sse = 0.0
    cdef double denom, diff
    cdef int i
    if k == _INF or k != k:
        return _INF
    for i in range(1, n + 1):
        denom = pow(<double>i, z1)
        diff = w[i - 1] - k / denom
        sse += diff * diff
    if sse != sse:
        return _INF
    return sse


cdef inline double _eval(int kind, bint truncated, const double* w, int n,
                         double z0, double z1) nogil:
    if kind == 0:
        return _dw_nll_c(truncated, w, n, z0, z1)
    if kind == 1:
        return _bb_nll_c(truncated, w, n, z0, z1)
    return _pow_sse_c(w, n, z0, z1)


cdef int _fill(double* buf, w) except -1:
    cdef int n = len(w)
    cdef int i
    if n > _MAX_TICKS:
        raise ValueError(f"at most {_MAX_TICKS} ticks supported, got {n}")
    for i in range(n):
        buf[i] = w[i]
    return n


def objective(int kind, bint truncated, w, double z0, double z1):
    """Evaluate one objective; non-finite regions come back as +inf."""
    cdef double buf[_MAX_TICKS]
    cdef int n = _fill(buf, w)
    if kind not in (0, 1, 2):
        raise ValueError(f"unknown objective kind {kind}")
    return _eval(kind, truncated, buf, n, z0, z1)


def minimize(int kind, bint truncated, w, double z0, double z1,
             double step=0.25, double tol=1e-8, int max_iter=10000):
    """Nelder-Mead descent from (z0, z1); returns (z0*, z1*, f*, iters, ok).

    Same coefficients and update order as the Python fallback.
    """
    cdef double buf[_MAX_TICKS]
    cdef int n = _fill(buf, w)
    cdef double x0, y0, x1, y1, x2, y2, f0, f1, f2
    cdef double tx, ty, tf, diam, d, cx, cy, rx, ry, fr
    cdef double ex, ey, fe, ox, oy, fo, ix, iy, fi
    cdef int iterations = 0
    cdef bint converged = False
    if kind not in (0, 1, 2):
        raise ValueError(f"unknown objective kind {kind}")

    x0, y0 = z0, z1
    x1, y1 = z0 + step, z1
    x2, y2 = z0, z1 + step
    with nogil:
        f0 = _eval(kind, truncated, buf, n, x0, y0)
        f1 = _eval(kind, truncated, buf, n, x1, y1)
        f2 = _eval(kind, truncated, buf, n, x2, y2)
        while True:
            if f1 < f0:
                tx = x0; ty = y0; tf = f0
                x0 = x1; y0 = y1; f0 = f1
                x1 = tx; y1 = ty; f1 = tf
            if f2 < f1:
                tx = x1; ty = y1; tf = f1
                x1 = x2; y1 = y2; f1 = f2
                x2 = tx; y2 = ty; f2 = tf
                if f1 < f0:
                    tx = x0; ty = y0; tf = f0
                    x0 = x1; y0 = y1; f0 = f1
                    x1 = tx; y1 = ty; f1 = tf
            diam = x1 - x0
            if diam < 0.0:
                diam = -diam
            d = y1 - y0
            if d < 0.0:
                d = -d
            if d > diam:
                diam = d
            d = x2 - x0
            if d < 0.0:
                d = -d
            if d > diam:
                diam = d
            d = y2 - y0
            if d < 0.0:
                d = -d
            if d > diam:
                diam = d
            if diam < tol:
                converged = True
                break
            if iterations >= max_iter:
                break
            iterations += 1

            cx = 0.5 * (x0 + x1)
            cy = 0.5 * (y0 + y1)
            rx = cx + (cx - x2)
            ry = cy + (cy - y2)
            fr = _eval(kind, truncated, buf, n, rx, ry)
            if fr < f0:
                ex = cx + 2.0 * (cx - x2)
                ey = cy + 2.0 * (cy - y2)
                fe = _eval(kind, truncated, buf, n, ex, ey)
                if fe < fr:
                    x2 = ex; y2 = ey; f2 = fe
                else:
                    x2 = rx; y2 = ry; f2 = fr
            elif fr < f1:
                x2 = rx; y2 = ry; f2 = fr
            else:
                if fr < f2:
                    ox = cx + 0.5 * (rx - cx)
                    oy = cy + 0.5 * (ry - cy)
                    fo = _eval(kind, truncated, buf, n, ox, oy)
                    if fo <= fr:
                        x2 = ox; y2 = oy; f2 = fo
                    else:
                        x1 = x0 + 0.5 * (x1 - x0); y1 = y0 + 0.5 * (y1 - y0)
                        x2 = x0 + 0.5 * (x2 - x0); y2 = y0 + 0.5 * (y2 - y0)
                        f1 = _eval(kind, truncated, buf, n, x1, y1)
                        f2 = _eval(kind, truncated, buf, n, x2, y2)
                else:
                    ix = cx + 0.5 * (x2 - cx)
                    iy = cy + 0.5 * (y2 - cy)
                    fi = _eval(kind, truncated, buf, n, ix, iy)
                    if fi < f2:
                        x2 = ix; y2 = iy; f2 = fi
                    else:
                        x1 = x0 + 0.5 * (x1 - x0); y1 = y0 + 0.5 * (y1 - y0)
                        x2 = x0 + 0.5 * (x2 - x0); y2 = y0 + 0.5 * (y2 - y0)
                        f1 = _eval(kind, truncated, buf, n, x1, y1)
                        f2 = _eval(kind, truncated, buf, n, x2, y2)
    return x0, y0, f0, iterations, converged
