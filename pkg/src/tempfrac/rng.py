"""Seeded random number generation for all stochastic experiments.

Every random quantity in this package flows through :func:`normals` (or a
:class:`Stream` built on the same construction), so that runs are
bit-reproducible across platforms and can be re-derived in any language:

* Bit source: the Philox 4x64 counter-based generator, keyed with
  ``key = (master_seed, stream_index)`` and counter starting at zero.
  Substreams for parallel work are obtained purely by changing
  ``stream_index``; they never overlap.
* Uniforms: each raw 64-bit word ``r`` maps to ``((r >> 11) + 0.5) * 2**-53``,
  which lies strictly inside (0, 1).
* Normals: the inverse of the standard normal CDF applied to those uniforms,
  evaluated with Wichura's PPND16 rational approximation (absolute error
  below 1e-15 over the full open interval).

Reference values, for cross-checking an independent implementation::

    normals(seed=0, n=4) == [-2.271884148324594,   -0.701327920628698,
                             -1.2189801910797582,   0.16217155791645024]
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

# Coefficients of Wichura's algorithm AS 241, routine PPND16.
_A = np.array([
    3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
    1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
    3.3430575583588128105e4, 2.5090809287301226727e3,
])
_B = np.array([
    1.0, 4.2313330701600911252e1, 6.8718700749205790830e2,
    5.3941960214247511077e3, 2.1213794301586595867e4, 3.9307895800092710610e4,
    2.8729085735721942674e4, 5.2264952788528545610e3,
])
_C = np.array([
    1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
    3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
    2.27238449892691845833e-2, 7.74545014278341407640e-4,
])
_D = np.array([
    1.0, 2.05319162663775882187e0, 1.67638483018380384940e0,
    6.89767334985100004550e-1, 1.48103976427480074590e-1, 1.51986665636164571966e-2,
    5.47593808499534494600e-4, 1.05075007164441684324e-9,
])
_E = np.array([
    6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
    2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
    2.71155556874348757815e-5, 2.01033439929228813265e-7,
])
_F = np.array([
    1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1,
    1.48753612908506148525e-2, 7.86869131145613259100e-4, 1.84631831751005468180e-5,
    1.42151175831644588870e-7, 2.04426310338993978564e-15,
])


def _poly(coef: np.ndarray, r: np.ndarray) -> np.ndarray:
    out = np.full_like(r, coef[-1])
    for c in coef[-2::-1]:
        out = out * r + c
    return out


def norm_ppf(p: np.ndarray | float) -> np.ndarray:
    """Inverse standard normal CDF (Wichura PPND16), vectorized.

    Arguments must lie strictly inside (0, 1).
    """
    p = np.asarray(p, dtype=np.float64)
    if np.any((p <= 0.0) | (p >= 1.0)):
        raise ValueError("norm_ppf requires arguments strictly inside (0, 1)")
    q = p - 0.5
    out = np.empty_like(p)

    central = np.abs(q) <= 0.425
    if np.any(central):
        r = 0.180625 - q[central] ** 2
        out[central] = q[central] * _poly(_A, r) / _poly(_B, r)

    tail = ~central
    if np.any(tail):
        qt = q[tail]
        pt = np.where(qt < 0.0, p[tail], 1.0 - p[tail])
        r = np.sqrt(-np.log(pt))
        near = r <= 5.0
        val = np.empty_like(r)
        val[near] = _poly(_C, r[near] - 1.6) / _poly(_D, r[near] - 1.6)
        val[~near] = _poly(_E, r[~near] - 5.0) / _poly(_F, r[~near] - 5.0)
        out[tail] = np.where(qt < 0.0, -val, val)
    return out


def _bit_generator(seed: int, stream: int = 0) -> np.random.Philox:
    key = np.array([seed & _MASK64, stream & _MASK64], dtype=np.uint64)
    return np.random.Philox(key=key)


def uniforms(seed: int, n: int, stream: int = 0) -> np.ndarray:
    """``n`` uniforms in the open interval (0, 1) from substream ``stream``."""
    raw = _bit_generator(seed, stream).random_raw(n)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def normals(seed: int, n: int, stream: int = 0) -> np.ndarray:
    """``n`` i.i.d. standard normal deviates, deterministic in (seed, stream)."""
    return norm_ppf(uniforms(seed, n, stream))


class Stream:
    """Sequential normal generator over one (seed, stream) substream.

    Successive calls continue the same Philox counter sequence, so
    ``Stream(s).normals(a); Stream(s).normals(b)`` consumes the identical
    bit stream as a single ``normals(s, a + b)`` call.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = seed
        self.stream = stream
        self._bg = _bit_generator(seed, stream)

    def normals(self, n: int) -> np.ndarray:
        raw = self._bg.random_raw(n)
        u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
        return norm_ppf(u)
