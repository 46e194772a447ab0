"""Littlewood-Paley blocks, Besov and Chemin-Lerner norms, Holder estimation.

The radial profile psi is built from the standard smooth step: with
h(x) = exp(-1/x) for x > 0 and chi(r) = h(2-r) / (h(2-r) + h(r-1)),
psi(r) = chi(r) - chi(2r) is supported in [1/2, 2], equals 1 at r = 1, and
the shell sums telescope exactly: sum_{j<=J} psi(r/2^j) = chi(r/2^J) for
r >= 1, which is identically 1 on 1 <= r <= 2^J.

On the mean-zero torus the first shell is j = 0 (covering |xi| in [1, 2])
and the top shell is j_max = log2(N/2) - 1. Every audit that truncates a
shell sum reports or flags the edge shells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fields import (
    FieldError,
    Grid,
    RealField,
    SpectralField,
    l2_norm_spectral,
    lp_norm,
    require_mean_zero,
)


class DegenerateFitError(ValueError):
    """Too few populated shells for a slope fit."""


def _ramp(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x, dtype=np.float64)
    pos = x > 0
    with np.errstate(over="ignore"):
        out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(r) -> np.ndarray:
    """C^inf step: exactly 1 on r <= 1, exactly 0 on r >= 2."""
    r = np.asarray(r, dtype=np.float64)
    a = _ramp(2.0 - r)
    b = _ramp(r - 1.0)
    out = np.ones_like(r)
    mid = b > 0
    out[mid] = a[mid] / (a[mid] + b[mid])
    return out


class ShellProfile:
    """Radial bump psi supported in [1/2, 2] with telescoping shell sums."""

    def __init__(self, psi=None, tol: float = 1e-12):
        self.psi = psi if psi is not None else (lambda r: smooth_step(r) - smooth_step(2.0 * np.asarray(r)))
        self.tol = tol

    def __call__(self, r):
        return self.psi(np.asarray(r, dtype=np.float64))

    def partition_residual(self, r: np.ndarray, j_lo: int | None = None,
                           j_hi: int | None = None) -> float:
        """max |sum_j psi(r/2^j) - 1| over the sample points r."""
        r = np.asarray(r, dtype=np.float64)
        if j_lo is None:
            j_lo = int(math.floor(math.log2(float(r.min())))) - 2
        if j_hi is None:
            j_hi = int(math.ceil(math.log2(float(r.max())))) + 2
        total = np.zeros_like(r)
        for j in range(j_lo, j_hi + 1):
            total += self(r / 2.0**j)
        return float(np.max(np.abs(total - 1.0)))

    def support_contained(self, samples: int = 4096) -> bool:
        r = np.linspace(1e-3, 8.0, samples)
        vals = self(r)
        outside = (r < 0.5 - 1e-9) | (r > 2.0 + 1e-9)
        return bool(np.all(np.abs(vals[outside]) <= self.tol))


class DyadicDecomposition:
    """Shell projections Delta_j and low-pass S_j on a fixed grid."""

    def __init__(self, grid: Grid, profile: ShellProfile | None = None):
        self.grid = grid
        self.profile = profile if profile is not None else ShellProfile()
        self.j_min = 0
        self.j_max = int(math.log2(grid.n // 2)) - 1
        self._weights = {}
        for j in self.shells():
            w = self.profile(grid.rho / 2.0**j)
            w[grid.origin] = 0.0
            self._weights[j] = w
        # cumulative[j] = sum_{k < j} weight_k, defined for j in [j_min, j_max+1]
        self._cumulative = {self.j_min: np.zeros(grid.shape)}
        for j in self.shells():
            self._cumulative[j + 1] = self._cumulative[j] + self._weights[j]

    def shells(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def interior_shells(self) -> range:
        return range(self.j_min + 1, self.j_max)

    @property
    def num_shells(self) -> int:
        return self.j_max - self.j_min + 1

    def weight(self, j: int) -> np.ndarray:
        return self._weights[j]

    def low_pass_weight(self, j: int) -> np.ndarray:
        """Multiplier of S_j; zero table for any j <= j_min."""
        if j <= self.j_min:
            return self._cumulative[self.j_min]
        return self._cumulative[min(j, self.j_max + 1)]

    def project_shell(self, f: SpectralField, j: int) -> SpectralField:
        if not self.j_min <= j <= self.j_max:
            raise FieldError(f"shell {j} outside [{self.j_min}, {self.j_max}]")
        return SpectralField(self.grid, f.coeffs * self._weights[j])

    def low_pass(self, f: SpectralField, j: int) -> SpectralField:
        if not self.j_min <= j <= self.j_max + 1:
            raise FieldError(f"low-pass index {j} outside [{self.j_min}, {self.j_max + 1}]")
        return SpectralField(self.grid, f.coeffs * self._cumulative[j])

    def shell_physical(self, f: SpectralField, j: int) -> RealField:
        c = f.coeffs * self._weights[j]
        return RealField(self.grid, np.fft.ifftn(c, norm="forward").real)

    def shell_norms(self, f: SpectralField, p, *, oversample: bool = False) -> np.ndarray:
        out = np.empty(self.num_shells)
        for i, j in enumerate(self.shells()):
            out[i] = lp_norm(self.shell_physical(f, j), p, oversample=oversample)
        return out


@dataclass(frozen=True)
class BesovIndex:
    s: float
    p: float
    q: float

    def __post_init__(self):
        if not (float(self.p) >= 1 and float(self.q) >= 1):
            raise FieldError("Besov integrability indices must lie in [1, inf]")


def _lq_aggregate(values: np.ndarray, q: float) -> float:
    q = float(q)
    if math.isinf(q):
        return float(np.max(values)) if values.size else 0.0
    return float(np.sum(values**q) ** (1.0 / q))


def besov_norm(f: SpectralField, idx: BesovIndex, decomp: DyadicDecomposition,
               *, oversample: bool = False) -> float:
    require_mean_zero(f)
    norms = decomp.shell_norms(f, idx.p, oversample=oversample)
    js = np.array(list(decomp.shells()), dtype=float)
    return _lq_aggregate(2.0 ** (js * idx.s) * norms, idx.q)


def besov_report(f: SpectralField, idx: BesovIndex, decomp: DyadicDecomposition) -> dict:
    require_mean_zero(f)
    norms = decomp.shell_norms(f, idx.p)
    js = list(decomp.shells())
    scaled = [2.0 ** (j * idx.s) * v for j, v in zip(js, norms)]
    return {
        "index": {"s": idx.s, "p": _p_label(idx.p), "q": _p_label(idx.q)},
        "value": _lq_aggregate(np.array(scaled), idx.q),
        "shell_breakdown": [
            {"j": j, "norm": float(v), "scaled": float(s)} for j, v, s in zip(js, norms, scaled)
        ],
    }


def _p_label(p) -> str:
    p = float(p)
    return "inf" if math.isinf(p) else f"{p:g}"


# ---------------------------------------------------------------------------
# Trajectories: time-stamped per-shell norm records

@dataclass
class Trajectory:
    """Per-shell L^p records at sample times, plus optional snapshots."""

    times: np.ndarray
    j_min: int
    j_max: int
    p_list: tuple
    shell_norms: dict  # float(p) -> array (num_samples, num_shells)
    field_l2: np.ndarray
    field_linf: np.ndarray
    snapshots: list = field(default_factory=list)  # [(t, SpectralField)]
    aborted: bool = False
    mean_removed: float = 0.0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        if self.times.size >= 2 and not np.all(np.diff(self.times) > 0):
            raise FieldError("sample times must be strictly increasing")
        for rec in self.shell_norms.values():
            if not np.isfinite(rec).all():
                raise FieldError("norm records contain non-finite values")

    @property
    def interval(self) -> tuple:
        return float(self.times[0]), float(self.times[-1])

    def shells(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def series(self, p) -> np.ndarray:
        key = float(p)
        if key not in self.shell_norms:
            raise FieldError(f"trajectory carries no records for p={_p_label(key)}")
        return self.shell_norms[key]

    def shell_column(self, p, j: int) -> np.ndarray:
        return self.series(p)[:, j - self.j_min]

    def restrict(self, t0: float, t1: float) -> "Trajectory":
        keep = (self.times >= t0 - 1e-12) & (self.times <= t1 + 1e-12)
        if not keep.any():
            raise FieldError(f"no samples inside [{t0}, {t1}]")
        return Trajectory(
            times=self.times[keep],
            j_min=self.j_min,
            j_max=self.j_max,
            p_list=self.p_list,
            shell_norms={p: rec[keep] for p, rec in self.shell_norms.items()},
            field_l2=self.field_l2[keep],
            field_linf=self.field_linf[keep],
            snapshots=[(t, f) for t, f in self.snapshots if t0 - 1e-12 <= t <= t1 + 1e-12],
            aborted=self.aborted,
            mean_removed=self.mean_removed,
        )


def chemin_lerner_norm(traj: Trajectory, r, idx: BesovIndex) -> float:
    """Time L^r inside the shells, l^q across them (trapezoidal quadrature)."""
    rec = traj.series(idx.p)
    r = float(r)
    if math.isinf(r):
        inner = np.max(rec, axis=0)
    else:
        inner = np.trapezoid(rec**r, traj.times, axis=0) ** (1.0 / r)
    js = np.array(list(traj.shells()), dtype=float)
    return _lq_aggregate(2.0 ** (js * idx.s) * inner, idx.q)


def classical_time_besov_norm(traj: Trajectory, r, idx: BesovIndex) -> float:
    """L^r-in-time of the instantaneous Besov norm (aggregation order swapped)."""
    rec = traj.series(idx.p)
    js = np.array(list(traj.shells()), dtype=float)
    per_sample = np.array([_lq_aggregate(2.0 ** (js * idx.s) * row, idx.q) for row in rec])
    r = float(r)
    if math.isinf(r):
        return float(np.max(per_sample))
    return float(np.trapezoid(per_sample**r, traj.times) ** (1.0 / r))


# ---------------------------------------------------------------------------
# Holder machinery

def fit_holder_exponent(js: np.ndarray, linf_norms: np.ndarray) -> tuple:
    """Least-squares slope of log2 norms against j; returns (alpha_hat, residual)."""
    linf_norms = np.asarray(linf_norms, dtype=float)
    peak = float(np.max(linf_norms)) if linf_norms.size else 0.0
    usable = linf_norms > 1e-13 * peak  # FFT noise in empty shells is not content
    if peak == 0.0 or int(usable.sum()) < 3:
        raise DegenerateFitError("need at least 3 shells with nonzero norm")
    x = np.asarray(js, dtype=float)[usable]
    y = np.log2(linf_norms[usable])
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((slope * x + intercept - y) ** 2)))
    return float(-slope), residual


def holder_estimate(f: SpectralField, decomp: DyadicDecomposition,
                    fit_range: tuple | None = None, *, oversample: bool = False) -> tuple:
    """Holder exponent from the decay of shell L^inf norms.

    The default fit range is the interior shells [1, j_max - 1].
    """
    if fit_range is None:
        fit_range = (decomp.j_min + 1, decomp.j_max - 1)
    js = np.arange(fit_range[0], fit_range[1] + 1)
    norms = np.array([
        lp_norm(decomp.shell_physical(f, j), math.inf, oversample=oversample) for j in js
    ])
    return fit_holder_exponent(js, norms)


def holder_norm(f: SpectralField, alpha: float, decomp: DyadicDecomposition) -> float:
    """C^alpha norm as max(L^inf, sup_j 2^{j alpha} |Delta_j f|_inf)."""
    linf = lp_norm(RealField(f.grid, np.fft.ifftn(f.coeffs, norm="forward").real), math.inf)
    shells = decomp.shell_norms(f, math.inf)
    js = np.array(list(decomp.shells()), dtype=float)
    return max(linf, float(np.max(2.0 ** (js * alpha) * shells)))


def holder_sup_from_records(traj: Trajectory, alpha: float) -> float:
    """sup over samples of the record-based C^alpha norm."""
    shells = traj.series(math.inf)
    js = np.array(list(traj.shells()), dtype=float)
    per_sample = np.maximum(traj.field_linf, np.max(2.0 ** (js * alpha) * shells, axis=1))
    return float(np.max(per_sample))


def holder_estimate_from_records(traj: Trajectory, sample: int,
                                 fit_range: tuple | None = None) -> tuple:
    if fit_range is None:
        fit_range = (traj.j_min + 1, traj.j_max - 1)
    js = np.arange(fit_range[0], fit_range[1] + 1)
    row = traj.series(math.inf)[sample]
    norms = np.array([row[j - traj.j_min] for j in js])
    return fit_holder_exponent(js, norms)


# ---------------------------------------------------------------------------
# Measurement utilities used by the audits

def partition_field_residual(f: SpectralField, decomp: DyadicDecomposition) -> float:
    """Relative L^2 error of sum_j Delta_j f against f (band-limited f)."""
    total = np.zeros(f.grid.shape, dtype=np.complex128)
    for j in decomp.shells():
        total += decomp.project_shell(f, j).coeffs
    denom = l2_norm_spectral(f)
    if denom == 0.0:
        return 0.0
    return l2_norm_spectral(SpectralField(f.grid, total - f.coeffs)) / denom


def orthogonality_ratio(f: SpectralField, decomp: DyadicDecomposition, j: int, k: int) -> float:
    """|Delta_j Delta_k f|_2 / |f|_2; zero whenever |j - k| >= 2."""
    denom = l2_norm_spectral(f)
    if denom == 0.0:
        return 0.0
    c = f.coeffs * decomp.weight(j) * decomp.weight(k)
    return l2_norm_spectral(SpectralField(f.grid, c)) / denom


def almost_orthogonality_constant(f: SpectralField, decomp: DyadicDecomposition) -> float:
    """Smallest C with |f|_2^2 / C <= sum_j |Delta_j f|_2^2 <= C |f|_2^2."""
    total = sum(l2_norm_spectral(decomp.project_shell(f, j)) ** 2 for j in decomp.shells())
    denom = l2_norm_spectral(f) ** 2
    if denom == 0.0:
        return 1.0
    ratio = total / denom
    return max(ratio, 1.0 / ratio)


def bernstein_derivative_ratio(f: SpectralField, decomp: DyadicDecomposition, j: int, p,
                               *, oversample: bool = False) -> float:
    """|grad Delta_j f|_p / (2^{j+1} |Delta_j f|_p), the sharp-constant check."""
    g = decomp.project_shell(f, j)
    comps = [np.fft.ifftn(1j * f.grid.xi_float[c] * g.coeffs, norm="forward").real
             for c in range(f.grid.d)]
    mag = np.sqrt(sum(v**2 for v in comps))
    if math.isinf(float(p)) and oversample:
        from .fields import pad_spectrum

        big = [np.fft.ifftn(pad_spectrum(1j * f.grid.xi_float[c] * g.coeffs, 2 * f.grid.n),
                            norm="forward").real for c in range(f.grid.d)]
        grad_norm = float(np.max(np.sqrt(sum(v**2 for v in big))))
    else:
        grad_norm = lp_norm(RealField(f.grid, mag), p)
    base = lp_norm(decomp.shell_physical(f, j), p, oversample=oversample)
    if base == 0.0:
        return 0.0
    return grad_norm / (2.0 ** (j + 1) * base)


def bernstein_embedding_constant(f: SpectralField, decomp: DyadicDecomposition,
                                 j: int, p, q) -> float:
    """Fitted C in |Delta_j f|_q <= C 2^{j d (1/p - 1/q)} |Delta_j f|_p."""
    g = decomp.shell_physical(f, j)
    lo = lp_norm(g, p)
    if lo == 0.0:
        return 0.0
    hi = lp_norm(g, q, oversample=math.isinf(float(q)))
    gain = 2.0 ** (j * f.grid.d * (1.0 / float(p) - (0.0 if math.isinf(float(q)) else 1.0 / float(q))))
    return hi / (gain * lo)


def interpolation_slack(g: RealField, p: float, q: float) -> float:
    """|g|_q^q vs |g|_inf^{q-p} |g|_p^p with grid norms; >= 0 when the bound holds."""
    lhs = lp_norm(g, q) ** q
    rhs = lp_norm(g, math.inf) ** (q - p) * lp_norm(g, p) ** p
    return rhs - lhs
