"""Integrand spaces for Wiener integrals against the tempered process.

Two equivalent inner products on the admissible integrands:

* ``a2_inner``, the spectral form
  Gamma(H-1/2)^2 Integral f_hat conj(g_hat) (lam^2 + w^2)^(1/2-H) dw.
  Step functions get exact Fourier transforms; the bilinear expansion then
  reduces to the same variance functional F used by the process covariance,
  so cross-module identities hold to machine precision.  Sampled functions
  go through a padded FFT with the boundary-leak accounting of the grid
  operators.
* ``a1_inner``, the time-domain form
  Gamma(H-1/2)^2 <I_-^(H-1/2,lam) f, I_-^(H-1/2,lam) g>_L2, defined for
  1/2 < H < 1.  Sampled functions use the spectral backend of the grid
  operators; step functions use the closed incomplete-gamma form of the
  fractional integral and refined panel quadrature, since sampling a jump
  onto a grid cannot reach the cross-route agreement the tests demand.

Equality of the two forms (Plancherel) is a test target, not an assumption.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import specfun
from .quadrature import gauss_legendre, panel_nodes
from .report import ExperimentReport
from .tfcalc import GridFunction, tempered_frac_integral
from .thp import ThpParams, kernel_g, variance_functional

__all__ = [
    "TestFunction",
    "a2_inner",
    "a2_inner_detailed",
    "a1_inner",
    "wiener_variance",
    "a2_norm",
    "step_approximation",
    "noncompleteness_witness",
]


@dataclass
class TestFunction:
    """A deterministic integrand: a step function or grid samples."""

    kind: str
    steps: list | None = None
    grid: GridFunction | None = None

    def __post_init__(self):
        if self.kind == "elementary":
            if not self.steps:
                raise ValueError("elementary kind needs steps")
            for (_, lo, hi) in self.steps:
                if not lo < hi:
                    raise ValueError("each step needs lo < hi")
        elif self.kind == "grid":
            if self.grid is None:
                raise ValueError("grid kind needs grid samples")
            peak = float(np.max(np.abs(self.grid.samples)))
            edge = max(abs(self.grid.samples[0]), abs(self.grid.samples[-1]))
            if peak > 0 and edge > 1e-12 * peak:
                raise ValueError("grid function must be supported inside its grid")
        else:
            raise ValueError("kind must be 'elementary' or 'grid'")

    @classmethod
    def from_steps(cls, steps) -> "TestFunction":
        return cls("elementary", steps=[(float(a), float(lo), float(hi))
                                        for (a, lo, hi) in steps])

    @classmethod
    def indicator(cls, lo: float, hi: float) -> "TestFunction":
        return cls.from_steps([(1.0, lo, hi)])

    @classmethod
    def from_grid(cls, grid: GridFunction) -> "TestFunction":
        return cls("grid", grid=grid)

    @classmethod
    def gaussian_bump(cls, center: float, width: float, half_span: float,
                      step: float) -> "TestFunction":
        xs = np.arange(center - half_span, center + half_span + 0.5 * step, step)
        return cls.from_grid(GridFunction(xs[0], step,
                                          np.exp(-((xs - center) / width) ** 2)))

    def value_at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "elementary":
            out = np.zeros_like(x)
            for (a, lo, hi) in self.steps:
                out = out + a * ((x >= lo) & (x < hi))
            return out
        g = self.grid
        return np.interp(x, g.x, g.samples, left=0.0, right=0.0)

    def l2_norm_sq(self) -> float:
        if self.kind == "elementary":
            return float(sum(a * a * (hi - lo) for (a, lo, hi) in self.steps))
        g = self.grid
        return g.step * float(np.sum(g.samples ** 2))


def _spectral_weight(omega: np.ndarray, H: float, lam: float) -> np.ndarray:
    return (lam * lam + omega * omega) ** (0.5 - H)


def _variance_lookup(taus: np.ndarray, H: float, lam: float) -> np.ndarray:
    # vectorized F over the unique distances only; step approximations on a
    # common mesh produce O(n) distinct values out of O(n^2) pairs
    flat = np.round(taus.ravel(), 12)
    uniq, inverse = np.unique(flat, return_inverse=True)
    vals = np.array([variance_functional(float(tau), H, lam) for tau in uniq])
    return vals[inverse].reshape(taus.shape)


def _elementary_pair_a2(f: TestFunction, g: TestFunction, H: float, lam: float) -> float:
    # bilinear expansion over step pairs through the variance functional
    af = np.array([s[0] for s in f.steps])
    lof = np.array([s[1] for s in f.steps])
    hif = np.array([s[2] for s in f.steps])
    bg = np.array([s[0] for s in g.steps])
    log = np.array([s[1] for s in g.steps])
    hig = np.array([s[2] for s in g.steps])
    q = -2.0 * (_variance_lookup(np.abs(log[None, :] - lof[:, None]), H, lam)
                - _variance_lookup(np.abs(hig[None, :] - lof[:, None]), H, lam)
                - _variance_lookup(np.abs(log[None, :] - hif[:, None]), H, lam)
                + _variance_lookup(np.abs(hig[None, :] - hif[:, None]), H, lam))
    total = float(af @ q @ bg)
    a = H - 0.5
    return specfun.gamma_fn(a) ** 2 / (2.0 * math.pi) * total


def _elementary_fourier(f: TestFunction, omega: np.ndarray) -> np.ndarray:
    out = np.zeros(omega.shape, dtype=complex)
    nz = omega != 0.0
    w = omega[nz]
    for (a, lo, hi) in f.steps:
        out[nz] += a * (np.exp(-1j * w * lo) - np.exp(-1j * w * hi)) / (1j * w)
        out[~nz] += a * (hi - lo)
    return out / math.sqrt(2.0 * math.pi)


def _grid_fourier(grid: GridFunction, P: int) -> tuple[np.ndarray, np.ndarray]:
    omega = 2.0 * math.pi * np.fft.fftfreq(P, d=grid.step)
    z = np.fft.fft(grid.samples, P) * grid.step / math.sqrt(2.0 * math.pi)
    z = z * np.exp(-1j * omega * grid.origin)
    return omega, z


def _next_pow2(n: int) -> int:
    return 1 << (int(n - 1).bit_length())


def _grid_route_a2(f: TestFunction, g: TestFunction, H: float,
                   lam: float) -> tuple[float, float]:
    ref = f.grid if f.kind == "grid" else g.grid
    P = _next_pow2(8 * ref.n)
    omega, _ = _grid_fourier(ref, P)

    def transform(tf: TestFunction) -> np.ndarray:
        if tf.kind == "elementary":
            return _elementary_fourier(tf, omega)
        if tf.grid.step != ref.step:
            raise ValueError("grid functions must share their step")
        shift = (tf.grid.origin - ref.origin) / ref.step
        if abs(shift - round(shift)) > 1e-9:
            raise ValueError("grid functions must share their sample points")
        return _grid_fourier(tf.grid, P)[1]

    fh = transform(f)
    gh = transform(g)
    w = _spectral_weight(omega, H, lam)
    d_omega = 2.0 * math.pi / (P * ref.step)
    integrand = np.real(fh * np.conj(gh)) * w
    value = float(np.sum(integrand) * d_omega)
    top_octave = np.abs(omega) > 0.5 * np.max(np.abs(omega))
    est = float(np.sum(np.abs(integrand[top_octave])) * d_omega) + 1e-14 * abs(value)
    a = H - 0.5
    return specfun.gamma_fn(a) ** 2 * value, specfun.gamma_fn(a) ** 2 * est


def a2_inner_detailed(f: TestFunction, g: TestFunction, H: float,
                      lam: float) -> tuple[float, float]:
    """Spectral-form inner product with a quadrature-error estimate."""
    if H <= 0.5 or lam <= 0.0:
        raise ValueError("need H > 1/2 and lam > 0")
    if f.kind == "elementary" and g.kind == "elementary":
        return _elementary_pair_a2(f, g, H, lam), 1e-13
    return _grid_route_a2(f, g, H, lam)


def a2_inner(f: TestFunction, g: TestFunction, H: float, lam: float) -> float:
    return a2_inner_detailed(f, g, H, lam)[0]


def a2_norm(f: TestFunction, H: float, lam: float) -> float:
    return math.sqrt(max(a2_inner(f, f, H, lam), 0.0))


def a2_distance(f: TestFunction, g: TestFunction, H: float, lam: float) -> float:
    """Norm of f - g in the spectral form.

    When a sampled function is involved, both transforms are evaluated on
    the same frequency grid and the difference is integrated directly, so
    the quadrature bias of the two terms cancels.
    """
    if f.kind == "elementary" and g.kind == "elementary":
        diff = TestFunction.from_steps(
            f.steps + [(-a, lo, hi) for (a, lo, hi) in g.steps])
        return a2_norm(diff, H, lam)
    ref = f.grid if f.kind == "grid" else g.grid
    P = _next_pow2(8 * ref.n)
    omega, _ = _grid_fourier(ref, P)

    def transform(tf: TestFunction) -> np.ndarray:
        if tf.kind == "elementary":
            return _elementary_fourier(tf, omega)
        return _grid_fourier(tf.grid, P)[1]

    d = transform(f) - transform(g)
    w = _spectral_weight(omega, H, lam)
    d_omega = 2.0 * math.pi / (P * ref.step)
    a = H - 0.5
    val = specfun.gamma_fn(a) ** 2 * float(np.sum(np.abs(d) ** 2 * w) * d_omega)
    return math.sqrt(max(val, 0.0))


def _elementary_transformed_kernel(f: TestFunction, H: float, lam: float):
    # Gamma(a) I_- f for a step function, in closed incomplete-gamma form;
    # each step [lo, hi) contributes the moving-average kernel of an
    # increment of length hi - lo, shifted to start at lo
    def F(x: np.ndarray) -> np.ndarray:
        out = np.zeros_like(np.asarray(x, dtype=float))
        for (a_i, lo, hi) in f.steps:
            out = out + a_i * kernel_g(H, lam, hi - lo, np.asarray(x) - lo)
        return out

    return F


def _elementary_pair_a1(f: TestFunction, g: TestFunction, H: float, lam: float) -> float:
    Ff = _elementary_transformed_kernel(f, H, lam)
    Fg = _elementary_transformed_kernel(g, H, lam)
    edges_set = sorted({lo for (_, lo, _) in f.steps + g.steps}
                       | {hi for (_, _, hi) in f.steps + g.steps})
    right = edges_set[-1]
    left = edges_set[0] - (45.0 + 8.0 * abs(H - 1.5)) / lam
    # panels: dyadic refinement toward every step edge from both sides
    pieces = [np.array([left, edges_set[0]])]
    for a, b in zip(edges_set[:-1], edges_set[1:]):
        mid = 0.5 * (a + b)
        span = b - a
        down = a + span / 2.0 * 0.5 ** np.arange(20, -1, -1.0)
        up = b - span / 2.0 * 0.5 ** np.arange(0, 21, 1.0)
        pieces.append(np.concatenate([[a], down[:-1], [mid], up[1:], [b]]))
    edges = np.unique(np.concatenate(pieces))
    # left tail panels, geometric toward the leftmost edge
    tail_edges = edges_set[0] - (edges_set[0] - left) * 0.5 ** np.arange(0, 25, 1.0)
    edges = np.unique(np.concatenate([edges, tail_edges]))
    nodes, wts = panel_nodes(edges, 32)
    return float(np.dot(wts, Ff(nodes) * Fg(nodes)))


def _grid_route_a1(f: TestFunction, g: TestFunction, H: float, lam: float) -> float:
    a = H - 0.5

    def transformed(tf: TestFunction, ref: GridFunction) -> np.ndarray:
        if tf.kind == "grid":
            return tempered_frac_integral(tf.grid, a, lam, "-", "spectral").samples
        return _elementary_transformed_kernel(tf, H, lam)(ref.x) / specfun.gamma_fn(a)

    ref = f.grid if f.kind == "grid" else g.grid
    Ff = transformed(f, ref)
    Fg = transformed(g, ref)
    return specfun.gamma_fn(a) ** 2 * ref.step * float(np.dot(Ff, Fg))


def a1_inner(f: TestFunction, g: TestFunction, H: float, lam: float) -> float:
    """Time-domain inner product (fractional-integral route), 1/2 < H < 1.

    For H >= 1 the spectral form ``a2_inner`` remains valid and should be
    used instead.
    """
    if not 0.5 < H < 1.0:
        raise ValueError("the time-domain route requires 1/2 < H < 1")
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    if f.kind == "elementary" and g.kind == "elementary":
        return _elementary_pair_a1(f, g, H, lam)
    return _grid_route_a1(f, g, H, lam)


def wiener_variance(f: TestFunction, params: ThpParams) -> float:
    """Variance of the Wiener integral of f against the process."""
    return params.sigma ** 2 * a2_inner(f, f, params.H, params.lam)


def step_approximation(f: TestFunction, n: int, j_min: int | None = None,
                       j_max: int | None = None) -> TestFunction:
    """Left-endpoint step approximation on the mesh j/n."""
    if n < 1:
        raise ValueError("n must be positive")
    if j_min is None or j_max is None:
        if f.kind == "elementary":
            lo = min(lo for (_, lo, _) in f.steps)
            hi = max(hi for (_, _, hi) in f.steps)
        else:
            lo, hi = f.grid.x[0], f.grid.x[-1]
        j_min = int(math.floor(lo * n)) if j_min is None else j_min
        j_max = int(math.ceil(hi * n)) if j_max is None else j_max
    js = np.arange(j_min, j_max + 1)
    vals = f.value_at(js / n)
    steps = [(float(v), j / n, (j + 1) / n) for v, j in zip(vals, js) if v != 0.0]
    if not steps:
        steps = [(0.0, j_min / n, (j_min + 1) / n)]
    return TestFunction.from_steps(steps)


def noncompleteness_witness(H: float, lam: float,
                            cutoffs=(1e2, 1e3, 1e4)) -> ExperimentReport:
    """Cauchy-in-norm sequence with diverging plain L2 mass.

    The functions have Fourier transform |w|^(-1/2) on 1 < |w| < n.  Their
    pairwise distances in the weighted norm vanish as the cutoffs grow while
    the L2 norms grow like sqrt(2 log n), so the space cannot be complete.
    """
    a = H - 0.5
    rep = ExperimentReport("noncompleteness witness",
                           config={"H": H, "lam": lam,
                                   "cutoffs": list(cutoffs)})

    def dist_sq(m: float, n: float) -> float:
        edges = np.geomspace(m, n, max(8, int(4 * math.log10(n / m)) + 2))
        nodes, wts = panel_nodes(edges, 32)
        vals = nodes ** -1.0 * _spectral_weight(nodes, H, lam)
        return 2.0 * specfun.gamma_fn(a) ** 2 * float(np.dot(wts, vals))

    dists = []
    l2s = []
    for m, n in zip(cutoffs[:-1], cutoffs[1:]):
        dists.append(math.sqrt(dist_sq(m, n)))
        rep.add_curve
    for n in cutoffs:
        l2s.append(math.sqrt(2.0 * math.log(n)))
    for i in range(len(dists) - 1):
        rep.add_check(
            f"weighted distance shrinks: |f_{cutoffs[i + 1]:g} - f_{cutoffs[i]:g}| "
            f"> |f_{cutoffs[i + 2]:g} - f_{cutoffs[i + 1]:g}|",
            dists[i + 1] / dists[i], 0.0, 1.0, kind="bound",
            provenance="quadrature")
    rep.add_check("L2 mass diverges: ratio of last to first exceeds 1",
                  -l2s[-1] / l2s[0], -1.0, 1e-12, kind="bound",
                  provenance="closed-form")
    rep.add_curve("witness", ["cutoff", "l2_norm"],
                  [np.array(cutoffs), np.array(l2s)])
    rep.add_note("distances between successive witnesses: "
                 + ", ".join(f"{d:.6g}" for d in dists))
    return rep.finish()
