"""Frequency-interaction decomposition of the advection term, with certificates.

The product u . grad(theta) is split by shell pairs (a = velocity shell,
b = scalar shell) into three classes: low-high (a <= b - 2, written as
div(S_{b-1} u Delta_b theta)), high-low (b <= a - 2, written as
Delta_a u . grad S_{a-1} theta), and the high-high remainder |a - b| <= 1.
These classes partition all pairs, so after applying Delta_j the three
pieces reconstruct Delta_j(u . grad theta) exactly for fields whose
spectrum lies inside the fully covered annulus 1 <= |xi| <= 2^{j_max}.

The certificate quantities J1, J2, J3 are sums of norms over the narrower
index windows |j - k| <= 2 and k >= j - 1, |k - l| <= 2 used by the
analytical bounds; the decomposition itself is the binding correctness
check, the J windows are bound bookkeeping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import exponents
from .drift import velocity_from_theta
from .dyadic import DyadicDecomposition, holder_norm
from .fields import (
    RealField,
    SpectralField,
    VectorField,
    advection_term,
    l2_norm_spectral,
    lp_norm,
    multiply_coeffs,
)


class ExponentRangeError(ValueError):
    """Requested (p, q) pair violates the admissible exponent window."""


@dataclass
class BonySplit:
    j: int
    low_high: SpectralField
    high_low: SpectralField
    high_high: SpectralField
    edge: bool
    dropped_mass: float

    def total(self) -> SpectralField:
        return SpectralField(
            self.low_high.grid,
            self.low_high.coeffs + self.high_low.coeffs + self.high_high.coeffs,
        )


class BonyAnalyzer:
    """Shared interaction sums for one (u, theta) pair; split(j) is a mask."""

    def __init__(self, u: VectorField, theta: SpectralField, decomp: DyadicDecomposition):
        self.grid = theta.grid
        self.decomp = decomp
        grid = self.grid
        d = grid.d
        xi = grid.xi_float

        low_high = np.zeros(grid.shape, dtype=np.complex128)
        high_low = np.zeros(grid.shape, dtype=np.complex128)
        for b in decomp.shells():
            tb = theta.coeffs * decomp.weight(b)
            su = decomp.low_pass_weight(b - 1)
            # low-high: div(S_{b-1} u Delta_b theta)
            for c in range(d):
                low_high += 1j * xi[c] * multiply_coeffs(grid, u[c].coeffs * su, tb)
            # high-low: Delta_b u . grad S_{b-1} theta (b plays the velocity index)
            st = theta.coeffs * decomp.low_pass_weight(b - 1)
            for c in range(d):
                high_low += multiply_coeffs(grid, u[c].coeffs * decomp.weight(b),
                                            1j * xi[c] * st)
        self._low_high = low_high
        self._high_low = high_low
        self._high_high = self._exact_remainder(u, theta)

        covered_theta = sum(decomp.project_shell(theta, j).coeffs for j in decomp.shells())
        dropped = l2_norm_spectral(SpectralField(grid, theta.coeffs - covered_theta))
        for c in range(d):
            covered_u = sum(decomp.project_shell(u[c], j).coeffs for j in decomp.shells())
            dropped += l2_norm_spectral(SpectralField(grid, u[c].coeffs - covered_u))
        self.dropped_mass = dropped

    def _exact_remainder(self, u, theta):
        grid = self.grid
        decomp = self.decomp
        xi = grid.xi_float
        out = np.zeros(grid.shape, dtype=np.complex128)
        for a in decomp.shells():
            tnear = np.zeros(grid.shape, dtype=np.complex128)
            for b in (a - 1, a, a + 1):
                if decomp.j_min <= b <= decomp.j_max:
                    tnear += theta.coeffs * decomp.weight(b)
            for c in range(grid.d):
                out += 1j * xi[c] * multiply_coeffs(grid, u[c].coeffs * decomp.weight(a), tnear)
        return out

    def split(self, j: int) -> BonySplit:
        decomp = self.decomp
        w = decomp.weight(j)
        edge = j in (decomp.j_min, decomp.j_max)
        return BonySplit(
            j=j,
            low_high=SpectralField(self.grid, w * self._low_high),
            high_low=SpectralField(self.grid, w * self._high_low),
            high_high=SpectralField(self.grid, w * self._high_high),
            edge=edge,
            dropped_mass=self.dropped_mass,
        )


def bony_split(u: VectorField, theta: SpectralField, j: int,
               decomp: DyadicDecomposition) -> BonySplit:
    return BonyAnalyzer(u, theta, decomp).split(j)


def reconstruction_error(u: VectorField, theta: SpectralField, j: int,
                         decomp: DyadicDecomposition, analyzer: BonyAnalyzer | None = None) -> float:
    """Relative L^2 error of the three-way split against the direct product."""
    if analyzer is None:
        analyzer = BonyAnalyzer(u, theta, decomp)
    split = analyzer.split(j)
    direct = decomp.project_shell(advection_term(u, theta), j)
    denom = l2_norm_spectral(direct)
    diff = l2_norm_spectral(SpectralField(theta.grid, split.total().coeffs - direct.coeffs))
    if denom == 0.0:
        return diff
    return diff / denom


# ---------------------------------------------------------------------------
# Certificate quantities over the analytical index windows

def _physical_norm(grid, coeffs, q) -> float:
    return lp_norm(RealField(grid, np.fft.ifftn(coeffs, norm="forward").real), q)


def interaction_norms(u: VectorField, theta: SpectralField, j: int, q,
                      decomp: DyadicDecomposition) -> tuple:
    """(J1, J2, J3): summed L^q norms of the windowed interaction terms."""
    grid = theta.grid
    xi = grid.xi_float
    w_j = decomp.weight(j)
    d = grid.d

    j1 = 0.0
    j2 = 0.0
    for k in range(max(j - 2, decomp.j_min), min(j + 2, decomp.j_max) + 1):
        tk = theta.coeffs * decomp.weight(k)
        su = decomp.low_pass_weight(k - 1)
        acc = np.zeros(grid.shape, dtype=np.complex128)
        for c in range(d):
            acc += 1j * xi[c] * multiply_coeffs(grid, u[c].coeffs * su, tk)
        j1 += _physical_norm(grid, w_j * acc, q)

        st = theta.coeffs * decomp.low_pass_weight(k - 1)
        acc = np.zeros(grid.shape, dtype=np.complex128)
        for c in range(d):
            acc += multiply_coeffs(grid, u[c].coeffs * decomp.weight(k), 1j * xi[c] * st)
        j2 += _physical_norm(grid, w_j * acc, q)

    j3 = 0.0
    for k in range(max(j - 1, decomp.j_min), decomp.j_max + 1):
        for l in range(max(k - 2, decomp.j_min), min(k + 2, decomp.j_max) + 1):
            tl = theta.coeffs * decomp.weight(l)
            acc = np.zeros(grid.shape, dtype=np.complex128)
            for c in range(d):
                acc += 1j * xi[c] * multiply_coeffs(grid, u[c].coeffs * decomp.weight(k), tl)
            j3 += _physical_norm(grid, w_j * acc, q)
    return j1, j2, j3


def _require_admissible(alpha: float, p: float, q: float):
    a = Fraction(alpha).limit_denominator(1 << 40)
    if not 0 < a < Fraction(1, 2):
        return  # window constraint applies only below the branch point
    window = exponents.q_range(a, Fraction(p).limit_denominator(1 << 40))
    qf = Fraction(q).limit_denominator(1 << 40)
    if not window.contains(qf):
        chain = exponents.sign_chain(a, window.p, qf)
        raise ExponentRangeError(
            f"q={q} outside the admissible window ({float(window.lo):g}, {float(window.hi):g}); "
            f"the sign chain -alpha < 1 - alpha - p/q - alpha(1 - p/q) < 0 fails: "
            f"middle exponent = {float(chain['e3']):g}, alpha = {float(a):g}"
        )


def holder_envelopes(theta: SpectralField, j: int, q: float, p: float, alpha: float,
                     decomp: DyadicDecomposition, calpha: float) -> tuple:
    """Analytic right sides of the three interaction bounds with constant 1.

    Shell sums use the measured |Delta_l theta|_p and are truncated to the
    resolved range.
    """
    shells = np.array(list(decomp.shells()), dtype=float)
    hp = decomp.shell_norms(theta, p)
    ratio = 0.0 if math.isinf(float(q)) else p / q
    weighted = (2.0**shells * hp) ** ratio
    prefactor = calpha ** (2.0 - ratio)

    e1 = 1.0 - ratio - alpha * (1.0 - ratio)
    low = shells <= j
    r1 = prefactor * 2.0 ** (j * (1.0 - alpha)) * float(np.sum((2.0 ** (shells * e1) * weighted)[low]))

    near = np.abs(shells - j) <= 2
    r2 = prefactor * 2.0 ** (j * (2.0 - alpha - ratio - alpha * (1.0 - ratio))) * float(
        np.sum(weighted[near]))

    e3 = 1.0 - alpha - ratio - alpha * (1.0 - ratio)
    high = shells >= j - 1
    r3 = prefactor * 2.0**j * float(np.sum((2.0 ** (shells * e3) * weighted)[high]))
    return r1, r2, r3


@dataclass
class InteractionCertificate:
    j: int
    q: float
    p: float
    alpha: float
    measured: tuple
    envelope: tuple
    ratios: tuple
    edge: bool


def j_bound_certificate(theta: SpectralField, law, j: int, q, p, alpha: float,
                        decomp: DyadicDecomposition, calpha: float | None = None) -> InteractionCertificate:
    """Measured J terms against their analytic envelopes, as ratio evidence.

    A certificate family passes when the ratios stay within a bounded
    spread across interior shells (one constant serves all shells).
    """
    q = float(q)
    p = float(p)
    _require_admissible(alpha, p, q)
    if calpha is None:
        calpha = holder_norm(theta, alpha, decomp)
    u = velocity_from_theta(theta, law)
    measured = interaction_norms(u, theta, j, q, decomp)
    envelope = holder_envelopes(theta, j, q, p, alpha, decomp, calpha)
    ratios = tuple(
        0.0 if m == 0.0 else (math.inf if e == 0.0 else m / e)
        for m, e in zip(measured, envelope)
    )
    return InteractionCertificate(
        j=j, q=q, p=p, alpha=alpha, measured=measured, envelope=envelope,
        ratios=ratios, edge=j in (decomp.j_min, decomp.j_max),
    )


def certificate_suite(theta: SpectralField, law, q, p, alpha: float,
                      decomp: DyadicDecomposition, shells=None,
                      max_spread: float = 1e2) -> dict:
    """Certificates over interior shells plus the per-family ratio spreads."""
    if shells is None:
        shells = list(decomp.interior_shells())
    certs = [j_bound_certificate(theta, law, j, q, p, alpha, decomp) for j in shells]
    spreads = []
    finite = True
    for i in range(3):
        vals = [c.ratios[i] for c in certs]
        finite = finite and all(math.isfinite(v) for v in vals)
        positive = [v for v in vals if v > 0]
        if not positive:
            spreads.append(1.0)
        elif len(positive) < len(vals):
            spreads.append(math.inf)
        else:
            spreads.append(max(positive) / min(positive))
    passed = finite and all(s <= max_spread for s in spreads)
    return {"certificates": certs, "spreads": tuple(spreads), "passed": passed}


# ---------------------------------------------------------------------------
# Geometric sum lemmas and the high-frequency tail obstruction

def geometric_sum_check(alpha, p, q, s, j: int, j_lo: int, j_hi: int, which: str) -> tuple:
    """Finite truncation of a weighted geometric shell sum vs 8 * 2^{j e}.

    which = "low" sums 2^{s l e1} over l in [j_lo, j], e1 = 1 - p/q - a(1 - p/q);
    which = "high" sums 2^{s k e3} over k in [max(j-1, j_lo), j_hi],
    e3 = 1 - a - p/q - a(1 - p/q). Returns (truncated_sum^{1/s}, bound).
    """
    a, p, q, s = (float(x) for x in (alpha, p, q, s))
    ratio = p / q
    if which == "low":
        e = 1.0 - ratio - a * (1.0 - ratio)
        idx = np.arange(j_lo, j + 1, dtype=float)
    elif which == "high":
        e = 1.0 - a - ratio - a * (1.0 - ratio)
        idx = np.arange(max(j - 1, j_lo), j_hi + 1, dtype=float)
    else:
        raise ValueError("which must be 'low' or 'high'")
    value = float(np.sum(2.0 ** (s * idx * e))) ** (1.0 / s)
    return value, 8.0 * 2.0 ** (j * e)


def tail_exponent(alpha, p) -> Fraction:
    """Exact exponent 1 - alpha - alpha_p driving the high-high tail."""
    a = exponents.as_fraction(alpha)
    p = exponents.as_fraction(p)
    alpha_p = (1 - 2 / p) * a
    return 1 - a - alpha_p


def obstruction_partial_sums(alpha, p, j: int = 1, count: int = 40) -> np.ndarray:
    """Partial sums of the tail sum_{k >= j-1} 2^{k(1-a-a_p)} 2^{k a_p} h_k
    on the synthetic profile h_k = 2^{-k a_p}.

    The summand collapses to 2^{k (1 - a - a_p)}: a positive exponent makes
    the partial sums diverge monotonically, a negative one makes them
    converge to a geometric limit.
    """
    e = float(tail_exponent(alpha, p))
    ks = np.arange(j - 1, j - 1 + count, dtype=float)
    return np.cumsum(2.0 ** (ks * e))
