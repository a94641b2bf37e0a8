"""Pure-Python random-walk Metropolis kernel for the logistic toxicity models.

This is the fallback twin of the compiled kernel in ``_mcmc.pyx``.  The two
must stay arithmetically identical statement for statement: both call libm's
``exp``/``log1p`` and accumulate the likelihood left to right, so a given
seed produces bit-identical chains whichever kernel is loaded.
"""

from __future__ import annotations

from math import exp, log1p

import numpy as np


def _softplus(z: float) -> float:
    # log(1 + e^z), linear past the point where the correction underflows.
    if z > 35.0:
        return z
    return log1p(exp(z))


def _logpost(
    b0: float,
    g1: float,
    g2: float,
    g3: float,
    x1: list,
    x2: list,
    nn: list,
    yy: list,
    m0: float,
    v0: float,
    ms: float,
    vs: float,
) -> float:
    e1 = exp(g1)
    e2 = exp(g2)
    e3 = exp(g3)
    lp = -(b0 - m0) * (b0 - m0) / (2.0 * v0) - (
        (g1 - ms) * (g1 - ms) + (g2 - ms) * (g2 - ms) + (g3 - ms) * (g3 - ms)
    ) / (2.0 * vs)
    for k in range(len(x1)):
        t = b0 + e1 * x1[k] + e2 * x2[k] + e3 * (x1[k] * x2[k])
        lp += yy[k] * (-_softplus(-t)) + (nn[k] - yy[k]) * (-_softplus(t))
    return lp


def run_chain(
    x1,
    x2,
    nn,
    yy,
    init,
    iters: int,
    burnin: int,
    thin: int,
    step0: float,
    m0: float,
    v0: float,
    ms: float,
    vs: float,
    prop,
    unif,
):
    """Run the chain and return (draws, accept_count, final_step).

    ``prop`` is an (iters, 4) array of standard normals and ``unif`` an
    (iters,) array of uniforms, pre-drawn by the caller so that kernel choice
    cannot perturb the random stream.  The step size adapts every 50
    burn-in iterations toward an acceptance rate between 0.2 and 0.5.
    """
    x1 = list(map(float, x1))
    x2 = list(map(float, x2))
    nn = list(map(float, nn))
    yy = list(map(float, yy))
    prop = np.asarray(prop, dtype=float)
    unif = np.asarray(unif, dtype=float)

    b0, g1, g2, g3 = (float(v) for v in init)
    lp = _logpost(b0, g1, g2, g3, x1, x2, nn, yy, m0, v0, ms, vs)
    step = float(step0)
    kept = (iters - burnin + thin - 1) // thin
    out = np.empty((kept, 4), dtype=float)
    accepted = 0
    window_acc = 0
    kidx = 0
    for it in range(iters):
        pb0 = b0 + step * prop[it, 0]
        pg1 = g1 + step * prop[it, 1]
        pg2 = g2 + step * prop[it, 2]
        pg3 = g3 + step * prop[it, 3]
        plp = _logpost(pb0, pg1, pg2, pg3, x1, x2, nn, yy, m0, v0, ms, vs)
        logr = plp - lp
        if logr >= 0.0 or unif[it] < exp(logr):
            b0, g1, g2, g3, lp = pb0, pg1, pg2, pg3, plp
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
    return out, accepted, step
