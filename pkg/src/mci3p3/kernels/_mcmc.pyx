# Compiled random-walk Metropolis kernel for the logistic toxicity models.
#
# Arithmetic twin of ``_mcmc_py.run_chain``: same libm calls, same left-to-
# right likelihood accumulation, so both kernels produce bit-identical
# chains from the same random stream.  Keep the two in lockstep when
# editing either.

from libc.math cimport exp, log1p

import numpy as np


cdef inline double _softplus(double z) nogil:
    if z > 35.0:
        return z
    return log1p(exp(z))


cdef double _logpost(
    double b0, double g1, double g2, double g3,
    double[::1] x1, double[::1] x2, double[::1] nn, double[::1] yy,
    double m0, double v0, double ms, double vs,
) nogil:
    cdef double e1 = exp(g1)
    cdef double e2 = exp(g2)
    cdef double e3 = exp(g3)
    cdef double lp = -(b0 - m0) * (b0 - m0) / (2.0 * v0) - (
        (g1 - ms) * (g1 - ms) + (g2 - ms) * (g2 - ms) + (g3 - ms) * (g3 - ms)
    ) / (2.0 * vs)
    cdef Py_ssize_t k
    cdef double t
    for k in range(x1.shape[0]):
        t = b0 + e1 * x1[k] + e2 * x2[k] + e3 * (x1[k] * x2[k])
        lp += yy[k] * (-_softplus(-t)) + (nn[k] - yy[k]) * (-_softplus(t))
    return lp


def run_chain(
    x1,
    x2,
    nn,
    yy,
    init,
    int iters,
    int burnin,
    int thin,
    double step0,
    double m0,
    double v0,
    double ms,
    double vs,
    prop,
    unif,
):
    """See ``_mcmc_py.run_chain``; same contract, compiled hot loop."""
    cdef double[::1] x1v = np.ascontiguousarray(x1, dtype=np.float64)
    cdef double[::1] x2v = np.ascontiguousarray(x2, dtype=np.float64)
    cdef double[::1] nnv = np.ascontiguousarray(nn, dtype=np.float64)
    cdef double[::1] yyv = np.ascontiguousarray(yy, dtype=np.float64)
    cdef double[:, ::1] propv = np.ascontiguousarray(prop, dtype=np.float64)
    cdef double[::1] unifv = np.ascontiguousarray(unif, dtype=np.float64)

    cdef double b0 = float(init[0])
    cdef double g1 = float(init[1])
    cdef double g2 = float(init[2])
    cdef double g3 = float(init[3])
    cdef double lp = _logpost(b0, g1, g2, g3, x1v, x2v, nnv, yyv, m0, v0, ms, vs)
    cdef double step = step0
    cdef int kept = (iters - burnin + thin - 1) // thin
    out_arr = np.empty((kept, 4), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef int accepted = 0
    cdef int window_acc = 0
    cdef Py_ssize_t kidx = 0
    cdef int it
    cdef double pb0, pg1, pg2, pg3, plp, logr, rate
    with nogil:
        for it in range(iters):
            pb0 = b0 + step * propv[it, 0]
            pg1 = g1 + step * propv[it, 1]
            pg2 = g2 + step * propv[it, 2]
            pg3 = g3 + step * propv[it, 3]
            plp = _logpost(pb0, pg1, pg2, pg3, x1v, x2v, nnv, yyv, m0, v0, ms, vs)
            logr = plp - lp
            if logr >= 0.0 or unifv[it] < exp(logr):
                b0 = pb0
                g1 = pg1
                g2 = pg2
                g3 = pg3
                lp = plp
                accepted += 1
                window_acc += 1
            if it < burnin and (it + 1) % 50 == 0:
                rate = window_acc / 50.0
                if rate < 0.2:
                    step *= 0.8
                elif rate > 0.5:
                    step *= 1.25
                window_acc = 0
            if it >= burnin and (it - burnin) % thin == 0:
                out[kidx, 0] = b0
                out[kidx, 1] = g1
                out[kidx, 2] = g2
                out[kidx, 3] = g3
                kidx += 1
    return out_arr, accepted, step
