"""ARTFIMA time series: spectral density, autocovariance, simulation.

The zero-ARMA model is white noise passed through the inverse tempered
fractional difference filter; its spectral density is

    h(w) = sigma^2 / (2 pi) * (1 - 2 exp(-lam) cos w + exp(-2 lam))^(-alpha).

Three autocovariance routes are provided and cross-validate each other:

* ``acvf_quadrature``: cosine-moment integrals of h, the package's ground
  truth;
* ``acvf_hyp2f1``: the hypergeometric closed form.  Its global constant is
  not hard-coded: it is calibrated once against quadrature at a single
  reference point and then validated over the whole parameter grid (the
  calibration resolves to 1, i.e. the closed form carries no extra 1/(2 pi));
* ``acvf_asymptotic``: the large-lag law gamma_k ~ c sigma^2 exp(-lam k)
  k^(alpha-1) (1 - exp(-2 lam))^(-alpha) / Gamma(alpha), with c resolved by
  the same calibration.

Simulation draws innovations from the package PRNG, applies the truncated
moving-average filter of the inverse difference (truncation by the weight
tail rule), and feeds the optional ARMA recursion; the first emitted sample
has a full warmed-up history.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from . import rng, specfun
from .report import ExperimentReport
from .tfcalc import GridFunction, default_truncation, frac_weights

__all__ = [
    "ArtfimaModel",
    "Acvf",
    "spectral_density",
    "acvf_quadrature",
    "acvf_hyp2f1",
    "acvf_asymptotic",
    "simulate",
    "spectral_representation_check",
    "hyp2f1_constant",
]

_QUAD_NODES = 24


@dataclass(frozen=True)
class ArtfimaModel:
    """Parameters of an ARTFIMA(p, alpha, lam, q) process."""

    alpha: float
    lam: float
    sigma: float = 1.0
    ar: tuple = ()
    ma: tuple = ()

    def __post_init__(self):
        if self.alpha <= 0.0 or self.lam <= 0.0 or self.sigma <= 0.0:
            raise ValueError("alpha, lam and sigma must all be positive")
        object.__setattr__(self, "ar", tuple(float(c) for c in self.ar))
        object.__setattr__(self, "ma", tuple(float(c) for c in self.ma))
        if self.ar:
            radius = _ar_spectral_radius(self.ar)
            if radius >= 1.0 - 1e-9:
                raise ValueError(
                    f"autoregression is not stationary (companion spectral "
                    f"radius {radius:.12f})")

    @property
    def p(self) -> int:
        return len(self.ar)

    @property
    def q(self) -> int:
        return len(self.ma)


def _ar_spectral_radius(ar: tuple) -> float:
    p = len(ar)
    comp = np.zeros((p, p))
    comp[0, :] = ar
    if p > 1:
        comp[1:, :-1] = np.eye(p - 1)
    return float(np.max(np.abs(np.linalg.eigvals(comp))))


@dataclass
class Acvf:
    """Autocovariances gamma_0..gamma_K with method and error accounting."""

    model: ArtfimaModel
    values: np.ndarray
    method: str
    est_error: float
    note: str = ""

    def validate(self) -> None:
        g = self.values
        if g[0] <= 0.0:
            raise AssertionError("gamma_0 must be positive")
        if np.any(np.abs(g[1:]) > g[0] * (1 + 1e-12)):
            raise AssertionError("|gamma_k| exceeded gamma_0")
        order = min(20, g.size)
        np.linalg.cholesky(toeplitz(g[:order]) + np.eye(order) * g[0] * 1e-13)


def _base_density(alpha: float, lam: float, sigma: float, omega: np.ndarray) -> np.ndarray:
    return sigma ** 2 / (2.0 * math.pi) * \
        (1.0 - 2.0 * math.exp(-lam) * np.cos(omega) + math.exp(-2.0 * lam)) ** (-alpha)


def _arma_transfer_sq(model: ArtfimaModel, omega: np.ndarray) -> np.ndarray:
    z = np.exp(-1j * omega)
    num = np.ones_like(z)
    for i, th in enumerate(model.ma, start=1):
        num = num + th * z ** i
    den = np.ones_like(z)
    for i, ph in enumerate(model.ar, start=1):
        den = den - ph * z ** i
    return (np.abs(num) / np.abs(den)) ** 2


def spectral_density(model: ArtfimaModel, omega) -> np.ndarray | float:
    """Spectral density on [-pi, pi]; even and strictly positive.

    For p = q = 0 this is the closed form above; a nonzero ARMA part
    multiplies in the usual squared transfer modulus.
    """
    w = np.asarray(omega, dtype=float)
    h = _base_density(model.alpha, model.lam, model.sigma, w)
    if model.ar or model.ma:
        h = h * _arma_transfer_sq(model, w)
    return float(h) if np.isscalar(omega) else h


def _quad_edges(lam: float, k_max: int, refine: int) -> np.ndarray:
    width = min(math.pi / 8.0, 18.0 / max(k_max, 1)) / refine
    n_uniform = int(math.ceil(math.pi / width))
    uniform = np.linspace(0.0, math.pi, n_uniform + 1)
    if lam >= 0.2:
        return uniform
    # resolve the spectral peak of width ~lam at omega = 0
    lo = lam / 8.0 / refine
    geo = [lo]
    while geo[-1] * 2.0 < uniform[1]:
        geo.append(geo[-1] * 2.0)
    return np.unique(np.concatenate([[0.0], geo, uniform]))


def _acvf_quad_once(model: ArtfimaModel, k: np.ndarray, refine: int) -> np.ndarray:
    edges = _quad_edges(model.lam, int(k[-1]), refine)
    from .quadrature import panel_nodes
    nodes, wts = panel_nodes(edges, _QUAD_NODES)
    h = spectral_density(model, nodes)
    wh = wts * h
    out = np.empty(k.size)
    chunk = max(1, int(4e6 / max(nodes.size, 1)))
    for i in range(0, k.size, chunk):
        kk = k[i: i + chunk, None]
        out[i: i + chunk] = 2.0 * (np.cos(kk * nodes[None, :]) @ wh)
    return out


def acvf_quadrature(model: ArtfimaModel, K: int, rtol: float = 1e-12) -> Acvf:
    """Cosine-moment autocovariances by refined composite quadrature.

    This is the ground truth the closed-form routes are validated against.
    Panels halve until two successive refinements agree to ``rtol``.
    """
    if K < 0:
        raise ValueError("K must be nonnegative")
    if model.lam < 1e-6:
        raise specfun.PrecisionLossError(
            "quadrature autocovariance needs lam >= 1e-6", math.inf)
    k = np.arange(K + 1)
    prev = _acvf_quad_once(model, k, 1)
    refine = 2
    while True:
        cur = _acvf_quad_once(model, k, refine)
        scale = max(abs(cur[0]), 1e-300)
        diff = float(np.max(np.abs(cur - prev))) / scale
        if diff <= rtol:
            return Acvf(model, cur, "quadrature", diff)
        if refine >= 64:
            raise specfun.PrecisionLossError(
                "autocovariance quadrature did not settle", diff)
        prev = cur
        refine *= 2


def _contour_edges(delta: float, k: int, refine: int) -> np.ndarray:
    osc = min(math.pi / 8.0, 18.0 / max(k, 1)) / refine
    uniform = np.linspace(0.0, math.pi, int(math.ceil(math.pi / osc)) + 1)
    lo = delta / 8.0 / refine
    geo = [lo]
    while geo[-1] * 2.0 < uniform[1]:
        geo.append(geo[-1] * 2.0)
    pos = np.unique(np.concatenate([[0.0], geo, uniform]))
    return np.concatenate([-pos[::-1], pos[1:]])


def _log_acvf_once(model: ArtfimaModel, k: int, y0: float, delta: float,
                   refine: int) -> float:
    from .quadrature import panel_nodes
    nodes, wts = panel_nodes(_contour_edges(delta, k, refine), _QUAD_NODES)
    z = nodes + 1j * y0
    w = (1.0 - np.exp(-(model.lam) + 1j * z)) * (1.0 - np.exp(-(model.lam) - 1j * z))
    h = model.sigma ** 2 / (2.0 * math.pi) * w ** (-model.alpha)
    val = float(np.real(np.exp(1j * k * nodes) @ (wts * h)))
    if val <= 0.0:
        raise specfun.PrecisionLossError("contour autocovariance lost positivity", 1.0)
    return -k * y0 + math.log(val)


def acvf_log_quadrature(model: ArtfimaModel, k: int, rtol: float = 1e-10) -> float:
    """log of gamma_k by quadrature on a shifted contour.

    The cosine-moment integrand is analytic for |Im omega| < lam and 2 pi
    periodic, so the contour moves to Im omega = lam - 1/k where the
    exponential decay of gamma_k is explicit.  This keeps full relative
    accuracy at any lam * k, including values far below double-precision
    range; the plain route loses the signal once lam * k exceeds ~30.
    """
    if model.ar or model.ma:
        raise ValueError("log-quadrature autocovariance requires p = q = 0")
    if k == 0:
        return math.log(acvf_quadrature(model, 0).values[0])
    delta = min(1.0 / k, 0.75 * model.lam)
    y0 = model.lam - delta
    prev = _log_acvf_once(model, k, y0, delta, 1)
    refine = 2
    while True:
        cur = _log_acvf_once(model, k, y0, delta, refine)
        if abs(cur - prev) <= rtol:
            return cur
        if refine >= 64:
            raise specfun.PrecisionLossError(
                "contour autocovariance did not settle", abs(cur - prev))
        prev = cur
        refine *= 2


def log_acvf_hyp2f1(model: ArtfimaModel, k: int) -> float:
    """log of the hypergeometric closed form, safe far below double range."""
    z = math.exp(-2.0 * model.lam)
    lg = specfun.log_gamma(model.alpha + k) - specfun.log_gamma(model.alpha) \
        - specfun.log_gamma(k + 1.0)
    return math.log(hyp2f1_constant()) + 2.0 * math.log(model.sigma) \
        - model.lam * k + lg \
        + math.log(specfun.hyp2f1(model.alpha, k + model.alpha, k + 1.0, z))


_HYP_CALIBRATION: dict = {}


def hyp2f1_constant() -> float:
    """Global constant of the hypergeometric closed form.

    Calibrated once per process at (alpha=0.75, lam=0.5) against quadrature;
    the validation grid in the acceptance suite confirms the same constant
    everywhere.
    """
    if "C" not in _HYP_CALIBRATION:
        alpha0, lam0 = 0.75, 0.5
        gamma0 = acvf_quadrature(ArtfimaModel(alpha0, lam0, 1.0), 0).values[0]
        denom = specfun.hyp2f1(alpha0, alpha0, 1.0, math.exp(-2.0 * lam0))
        _HYP_CALIBRATION["C"] = gamma0 / denom
    return _HYP_CALIBRATION["C"]


def _hyp_closed_form(alpha: float, lam: float, sigma: float, k: int) -> float:
    z = math.exp(-2.0 * lam)
    lg = specfun.log_gamma(alpha + k) - specfun.log_gamma(alpha) \
        - specfun.log_gamma(k + 1.0)
    return hyp2f1_constant() * sigma ** 2 * math.exp(-lam * k + lg) \
        * specfun.hyp2f1(alpha, k + alpha, k + 1.0, z)


def acvf_hyp2f1(model: ArtfimaModel, K: int) -> Acvf:
    """Autocovariances from the calibrated hypergeometric closed form.

    Below lam = 1e-3 the series sits on its precision cliff and the method
    falls back to quadrature, recording a note.
    """
    if model.ar or model.ma:
        raise ValueError("closed-form autocovariance requires p = q = 0")
    if model.lam < 1e-3:
        out = acvf_quadrature(model, K)
        out.note = ("lam below the closed-form precision cliff; "
                    "values computed by quadrature")
        return out
    vals = np.array([_hyp_closed_form(model.alpha, model.lam, model.sigma, k)
                     for k in range(K + 1)])
    return Acvf(model, vals, "hyp2f1", 1e-12)


def acvf_asymptotic(model: ArtfimaModel, k: int) -> float:
    """Large-lag autocovariance law (same calibrated constant)."""
    if k < 1:
        raise ValueError("the asymptotic form needs k >= 1")
    alpha, lam = model.alpha, model.lam
    return hyp2f1_constant() * model.sigma ** 2 * math.exp(-lam * k) \
        * k ** (alpha - 1.0) * (1.0 - math.exp(-2.0 * lam)) ** (-alpha) \
        / specfun.gamma_fn(alpha)


def ma_infinity_weights(model: ArtfimaModel, J: int | None = None) -> np.ndarray:
    """Truncated weights of the inverse-difference moving average."""
    if J is None:
        J = default_truncation(model.alpha, model.lam)
    return frac_weights(model.alpha, model.lam, 1.0, "integration", J).w


def simulate(model: ArtfimaModel, n: int, seed: int, J: int | None = None,
             stream: int = 0) -> GridFunction:
    """Seeded sample path X_1..X_n, stationary from the first sample.

    Innovations are sigma-scaled standard normals from the package PRNG; the
    moving-average history of J presamples is consumed as warm-up.  With an
    ARMA part, innovations first run through the ARMA recursion (with its own
    geometric warm-up), then through the tempered integration filter.
    """
    if n < 1:
        raise ValueError("n must be positive")
    c = ma_infinity_weights(model, J)
    J = c.size - 1
    warm_arma = 0
    if model.ar:
        radius = _ar_spectral_radius(model.ar)
        warm_arma = int(math.ceil(math.log(1e-12) / math.log(max(radius, 1e-6)))) \
            + len(model.ar)
    total = n + J + warm_arma + len(model.ma)
    e = model.sigma * rng.normals(seed, total, stream=stream)
    u = e
    if model.ar or model.ma:
        from scipy.signal import lfilter
        b = np.concatenate([[1.0], np.asarray(model.ma, dtype=float)])
        a = np.concatenate([[1.0], -np.asarray(model.ar, dtype=float)])
        u = lfilter(b, a, e)[warm_arma + len(model.ma):]
    x = np.convolve(u, c)[J: J + n]
    return GridFunction(1.0, 1.0, x)


def spectral_representation_check(model: ArtfimaModel, K: int = 257,
                                  seed: int | None = None) -> ExperimentReport:
    """Pointwise identity between the transfer-function modulus and h.

    The filtered-noise transfer function is (1 - exp(-(lam + i nu)))^(-alpha);
    its squared modulus times sigma^2/(2 pi) must reproduce the spectral
    density on any frequency grid.
    """
    rep = ExperimentReport(
        "artfima spectral representation",
        config={"alpha": model.alpha, "lam": model.lam, "sigma": model.sigma,
                "grid": K})
    nu = np.linspace(-math.pi, math.pi, K)
    transfer = (1.0 - np.exp(-(model.lam + 1j * nu))) ** (-model.alpha)
    lhs = np.abs(transfer) ** 2 * model.sigma ** 2 / (2.0 * math.pi)
    rhs = spectral_density(ArtfimaModel(model.alpha, model.lam, model.sigma), nu)
    dev = float(np.max(np.abs(lhs / rhs - 1.0)))
    rep.add_check("max relative deviation", dev, 0.0, 1e-12, kind="abs",
                  provenance="closed-form")
    rep.add_curve("transfer", ["nu", "transfer_sq_density", "spectral_density"],
                  [nu, lhs, rhs])
    return rep.finish()
