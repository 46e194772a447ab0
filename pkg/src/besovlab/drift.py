"""Constitutive velocity laws for the active scalar.

Three families: a matrix of degree-0 singular-integral symbols applied as
u_j = d_i T_ij theta, the SQG law u = perp-grad (-Lap)^{-1/2} theta, and
the modified SQG law u = perp-grad (-Lap)^{beta/2 - 1} theta. All laws
produce mean-zero, divergence-free velocities; strict mode rejects any
matrix whose divergence residual exceeds 1e-10.

User matrices are read from config as expressions in xi1..xid, |xi| and
constants, parsed through a restricted arithmetic grammar (no names, calls
or attributes beyond the whitelisted symbols).
"""

from __future__ import annotations

import ast
import math

import numpy as np

from .fields import (
    FieldError,
    Grid,
    RealField,
    SpectralField,
    SymbolError,
    VectorField,
    evaluate_symbol,
    lp_norm,
    require_mean_zero,
)

STRICT_DIVERGENCE_TOL = 1e-10


class DriftError(ValueError):
    """Invalid drift law or violated law precondition."""


# ---------------------------------------------------------------------------
# Restricted expression grammar for config-defined symbols

_ALLOWED_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
_ALLOWED_UNARY = (ast.UAdd, ast.USub)


def parse_symbol_expression(expr: str, d: int):
    """Compile an expression over xi1..xid, |xi| and constants to a symbol.

    Accepted operators: + - * / ^ (or **) and parentheses. Everything else
    is rejected before evaluation.
    """
    text = expr.replace("|xi|", "rho").replace("^", "**")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise SymbolError(f"cannot parse symbol expression {expr!r}: {exc}") from None
    allowed_names = {f"xi{i + 1}" for i in range(d)} | {"rho"}
    structural = (ast.Expression, ast.Constant, ast.Name, ast.BinOp, ast.UnaryOp, ast.Load,
                  *_ALLOWED_BINOPS, *_ALLOWED_UNARY)
    for node in ast.walk(tree):
        if not isinstance(node, structural):
            raise SymbolError(f"construct {type(node).__name__} not allowed in {expr!r}")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise SymbolError(f"non-numeric constant in {expr!r}")
        if isinstance(node, ast.Name) and node.id not in allowed_names:
            raise SymbolError(f"unknown name {node.id!r} in {expr!r}; allowed: "
                              + ", ".join(sorted(allowed_names)) + ", |xi|")
        if isinstance(node, ast.BinOp) and not isinstance(node.op, _ALLOWED_BINOPS):
            raise SymbolError(f"operator not allowed in {expr!r}")
        if isinstance(node, ast.UnaryOp) and not isinstance(node.op, _ALLOWED_UNARY):
            raise SymbolError(f"unary operator not allowed in {expr!r}")
    code = compile(tree, "<symbol>", "eval")

    def symbol(xi, rho):
        safe = np.where(rho > 0, rho, 1.0)
        env = {f"xi{i + 1}": xi[i] for i in range(d)}
        env["rho"] = safe
        return eval(code, {"__builtins__": {}}, env)

    return symbol


class MultiplierMatrix:
    """d x d table of bounded degree-0 symbols; entries may be None (zero)."""

    def __init__(self, name: str, entries, degree: int = 0):
        self.name = name
        self.entries = tuple(tuple(row) for row in entries)
        self.degree = degree
        d = len(self.entries)
        if any(len(row) != d for row in self.entries):
            raise DriftError("symbol matrix must be square")
        self.d = d
        self._tables = {}

    def tables(self, grid: Grid):
        if grid.d != self.d:
            raise DriftError(f"matrix is {self.d}x{self.d} but grid has d={grid.d}")
        key = (grid.d, grid.n)
        if key not in self._tables:
            zero = np.zeros(grid.shape, dtype=np.complex128)
            self._tables[key] = tuple(
                tuple(zero if fn is None else evaluate_symbol(grid, fn) for fn in row)
                for row in self.entries
            )
        return self._tables[key]

    def bound(self, grid: Grid) -> float:
        return max(float(np.max(np.abs(t))) for row in self.tables(grid) for t in row)

    def divergence_residual(self, grid: Grid) -> float:
        """max over resolved xi of |xi_i xi_j m_ij| / |xi|^2.

        The quadratic form is paired as xi_i xi_j (m_ij + m_ji) with exact
        integer products, so antisymmetric matrices cancel exactly.
        """
        t = self.tables(grid)
        acc = np.zeros(grid.shape, dtype=np.complex128)
        for i in range(self.d):
            acc += (grid.xi[i] * grid.xi[i]).astype(np.float64) * t[i][i]
            for j in range(i + 1, self.d):
                acc += (grid.xi[i] * grid.xi[j]).astype(np.float64) * (t[i][j] + t[j][i])
        ratio = np.abs(acc) / grid.rho_safe**2
        ratio[grid.origin] = 0.0
        return float(np.max(ratio))

    def homogeneity_error(self, samples: int = 256, seed: int = 0) -> float:
        """max |m(2 xi) - m(xi)| over random integer wavevectors (degree-0 check)."""
        rng = np.random.default_rng(seed)
        pts = rng.integers(-8, 9, size=(samples, self.d)).astype(np.float64)
        pts = pts[np.any(pts != 0, axis=1)]
        xi = tuple(pts[:, i] for i in range(self.d))
        xi2 = tuple(2.0 * x for x in xi)
        rho = np.sqrt(sum(x * x for x in xi))
        worst = 0.0
        for row in self.entries:
            for fn in row:
                if fn is None:
                    continue
                a = np.asarray(fn(xi, rho), dtype=np.complex128)
                b = np.asarray(fn(xi2, 2.0 * rho), dtype=np.complex128)
                worst = max(worst, float(np.max(np.abs(a - b))))
        return worst


def constant_antisymmetric_matrix(d: int = 2) -> MultiplierMatrix:
    def one(xi, rho):
        return np.ones_like(rho) + 0j

    def minus_one(xi, rho):
        return -np.ones_like(rho) + 0j

    entries = [[None] * d for _ in range(d)]
    entries[0][1] = one
    entries[1][0] = minus_one
    return MultiplierMatrix("constant_antisymmetric", entries)


def ratio_antisymmetric_matrix(d: int = 2) -> MultiplierMatrix:
    """Antisymmetric matrix with entries +-xi1 xi2 / |xi|^2 (genuinely degree 0)."""

    def plus(xi, rho):
        safe2 = np.where(rho > 0, rho * rho, 1.0)
        return xi[0] * xi[1] / safe2 + 0j

    def minus(xi, rho):
        safe2 = np.where(rho > 0, rho * rho, 1.0)
        return -xi[0] * xi[1] / safe2 + 0j

    entries = [[None] * d for _ in range(d)]
    entries[0][1] = plus
    entries[1][0] = minus
    return MultiplierMatrix("ratio_antisymmetric", entries)


def matrix_from_expressions(rows, d: int, name: str = "user") -> MultiplierMatrix:
    if len(rows) != d or any(len(r) != d for r in rows):
        raise DriftError(f"matrix must be {d}x{d}")
    entries = [[None if str(e).strip() in ("0", "") else parse_symbol_expression(str(e), d)
                for e in row] for row in rows]
    return MultiplierMatrix(name, entries)


# ---------------------------------------------------------------------------
# Velocity laws

class ZeroVelocity:
    """Disabled drift: u = 0 (pure diffusion runs)."""

    name = "zero"

    def component_symbols(self, grid: Grid):
        zero = np.zeros(grid.shape, dtype=np.complex128)
        return (zero,) * grid.d


class GeneralCZ:
    """u_j = d_i T_ij theta for a matrix of degree-0 symbols."""

    name = "general_cz"

    def __init__(self, matrix: MultiplierMatrix, strict: bool = True):
        self.matrix = matrix
        self.strict = strict
        self._cache = {}

    def component_symbols(self, grid: Grid):
        key = (grid.d, grid.n)
        if key not in self._cache:
            if self.strict:
                residual = self.matrix.divergence_residual(grid)
                if residual > STRICT_DIVERGENCE_TOL:
                    raise DriftError(
                        f"matrix {self.matrix.name!r} violates the divergence-free "
                        f"condition xi_i xi_j m_ij = 0: residual {residual:.3e}"
                    )
            t = self.matrix.tables(grid)
            comps = []
            for j in range(grid.d):
                acc = np.zeros(grid.shape, dtype=np.complex128)
                for i in range(grid.d):
                    acc += grid.xi_float[i] * t[i][j]
                comps.append(1j * acc)
            self._cache[key] = tuple(comps)
        return self._cache[key]


class SQG:
    """u = perp-grad (-Lap)^{-1/2} theta; two dimensions only."""

    name = "sqg"

    def __init__(self):
        self._cache = {}

    def component_symbols(self, grid: Grid):
        if grid.d != 2:
            raise DriftError("SQG drift requires d = 2")
        key = (grid.d, grid.n)
        if key not in self._cache:
            inv = np.zeros(grid.shape)
            nz = grid.rho > 0
            inv[nz] = 1.0 / grid.rho[nz]
            self._cache[key] = (
                -1j * grid.xi_float[1] * inv,
                1j * grid.xi_float[0] * inv,
            )
        return self._cache[key]


class ModifiedSQG:
    """u = perp-grad (-Lap)^{beta/2 - 1} theta, 1 < beta < 2; d = 2."""

    name = "modified_sqg"

    def __init__(self, beta: float):
        if not 1.0 < beta < 2.0:
            raise DriftError(f"modified SQG needs beta in (1, 2), got {beta}")
        self.beta = float(beta)
        self._cache = {}

    def component_symbols(self, grid: Grid):
        if grid.d != 2:
            raise DriftError("modified SQG drift requires d = 2")
        key = (grid.d, grid.n)
        if key not in self._cache:
            power = np.zeros(grid.shape)
            nz = grid.rho > 0
            power[nz] = grid.rho[nz] ** (self.beta - 2.0)
            self._cache[key] = (
                -1j * grid.xi_float[1] * power,
                1j * grid.xi_float[0] * power,
            )
        return self._cache[key]


def law_from_config(spec: dict):
    kind = spec.get("law")
    if kind == "zero":
        return ZeroVelocity()
    if kind == "sqg":
        return SQG()
    if kind == "modified_sqg":
        return ModifiedSQG(float(spec["beta"]))
    if kind == "general_cz":
        matrix = spec.get("matrix", "constant_antisymmetric")
        if matrix == "constant_antisymmetric":
            m = constant_antisymmetric_matrix(int(spec.get("d", 2)))
        elif matrix == "ratio_antisymmetric":
            m = ratio_antisymmetric_matrix(int(spec.get("d", 2)))
        else:
            m = matrix_from_expressions(matrix, len(matrix))
        return GeneralCZ(m, strict=bool(spec.get("strict", True)))
    raise DriftError(f"unknown drift law {kind!r}")


def velocity_from_theta(theta: SpectralField, law) -> VectorField:
    require_mean_zero(theta)
    symbols = law.component_symbols(theta.grid)
    comps = tuple(SpectralField(theta.grid, s * theta.coeffs) for s in symbols)
    return VectorField(theta.grid, comps)


def check_divergence_free(u: VectorField) -> float:
    """max_xi |xi . u_hat(xi)| normalized by max(1, sup_xi |u_hat(xi)|)."""
    grid = u.grid
    div = np.zeros(grid.shape, dtype=np.complex128)
    mag2 = np.zeros(grid.shape)
    for c in range(grid.d):
        div += grid.xi_float[c] * u[c].coeffs
        mag2 += np.abs(u[c].coeffs) ** 2
    denom = max(1.0, float(np.sqrt(np.max(mag2))))
    return float(np.max(np.abs(div))) / denom


def drift_shell_bound_audit(theta: SpectralField, law, decomp, qs=(2.0, math.inf)) -> dict:
    """Per-shell ratios |Delta_k u|_q / (2^k |Delta_k theta|_q).

    Shells with no scalar content are skipped and reported as absent.
    """
    u = velocity_from_theta(theta, law)
    grid = theta.grid
    scalar_norms = {float(q): decomp.shell_norms(theta, q) for q in qs}
    floors = {q: 1e-13 * np.max(norms) for q, norms in scalar_norms.items()}
    shells = {}
    for i, k in enumerate(decomp.shells()):
        ratios = {}
        comps = [np.fft.ifftn(u[c].coeffs * decomp.weight(k), norm="forward").real
                 for c in range(grid.d)]
        speed = RealField(grid, np.sqrt(sum(v**2 for v in comps)))
        for q in qs:
            tn = scalar_norms[float(q)][i]
            if tn <= floors[float(q)]:  # transform noise is not shell content
                continue
            ratios[float(q)] = lp_norm(speed, q) / (2.0**k * tn)
        if ratios:
            shells[k] = ratios
    max_ratio = max((r for by_q in shells.values() for r in by_q.values()), default=0.0)
    return {"shells": shells, "max_ratio": max_ratio,
            "absent": [k for k in decomp.shells() if k not in shells]}
