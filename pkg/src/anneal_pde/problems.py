"""Cost builders for the wind-driven gyre and the nonlinear ODE demo.

The gyre equation on the unit square, with psi = 0 on the boundary::

    psi_x + eps * (psi_xx + psi_yy) + d(tau_x)/dy = 0,   tau_x = -cos(pi y)

Three discretizations are provided: finite differences on an ``N x N``
grid, a truncated sine expansion, and the monomial expansion of
``(y')**2 - 4 x**2 = 0`` with ``y(0) = 1``, ``y(1) = 2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .encoding import RealCost
from .errors import ConfigError, DimensionError, NumericError


@dataclass(frozen=True)
class StommelConfig:
    """Grid size, friction and the weight given to the ``psi = 0`` boundary rows.

    ``boundary_weight`` multiplies the boundary equations.  It does not move
    the exact least-squares solution, but it changes the conditioning of the
    quadratic cost: ``"auto"`` matches the interior diagonal ``4 eps / h**2``.
    """

    N: int = 11
    epsilon: float = 0.1
    boundary_weight: float | str = 1.0

    def __post_init__(self):
        if self.N < 3:
            raise ConfigError(f"N must be >= 3, got {self.N}")
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        bw = self.boundary_weight
        if isinstance(bw, str):
            if bw != "auto":
                raise ConfigError(f"boundary_weight must be a positive number or 'auto', got {bw!r}")
        elif not bw > 0:
            raise ConfigError(f"boundary_weight must be > 0, got {bw}")

    @property
    def spacing(self) -> float:
        return 1.0 / (self.N - 1)

    @property
    def resolved_boundary_weight(self) -> float:
        if self.boundary_weight == "auto":
            return 4.0 * self.epsilon / self.spacing ** 2
        return float(self.boundary_weight)


@dataclass(frozen=True)
class SpectralConfig:
    n_x: int = 10
    epsilon: float = 0.1
    n_y: int = 2
    nodes: int = 64

    def __post_init__(self):
        if self.n_x < 1:
            raise ConfigError(f"n_x must be >= 1, got {self.n_x}")
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if self.nodes < 2 * max(self.n_x, self.n_y) + 2:
            raise ConfigError(f"{self.nodes} quadrature nodes too few for mode {max(self.n_x, self.n_y)}")

    @property
    def modes(self) -> list[tuple[int, int]]:
        """Basis ordering: zonal index outer, meridional inner."""
        return [(n, m) for n in range(1, self.n_x + 1) for m in range(1, self.n_y + 1)]


@dataclass(frozen=True)
class NonlinearConfig:
    n_basis: int = 4
    bc_penalty: float = 10.0

    def __post_init__(self):
        if self.n_basis < 2:
            raise ConfigError(f"n_basis must be >= 2, got {self.n_basis}")
        if not self.bc_penalty > 0:
            raise ConfigError(f"bc_penalty must be > 0, got {self.bc_penalty}")


@dataclass(frozen=True)
class LinearSystem:
    """``A w = v`` with ``A`` in CSR form; unknowns are row-major ``psi[j, i]``."""

    A: sp.csr_matrix
    v: np.ndarray
    N: int

    @property
    def spacing(self) -> float:
        return 1.0 / (self.N - 1)

    def triplets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        coo = self.A.tocoo()
        return coo.row, coo.col, coo.data

    def residual_cost(self, w) -> float:
        """``|A w - v|^2`` evaluated directly, free of the cancellation in the expanded form."""
        r = self.A @ np.asarray(w, dtype=float) - self.v
        return float(r @ r)


def grid_index(i: int, j: int, N: int) -> int:
    """Unknown index of grid point ``(x_i, y_j)``."""
    return j * N + i


def wind_curl(y):
    """d(tau_x)/dy for tau_x = -cos(pi y)."""
    return np.pi * np.sin(np.pi * np.asarray(y))


def build_stommel_fd(config: StommelConfig) -> LinearSystem:
    """Second-order central differences; boundary rows are ``kappa * psi = 0``."""
    N, eps = config.N, config.epsilon
    kappa = config.resolved_boundary_weight
    d = config.spacing
    y = np.linspace(0.0, 1.0, N)
    rows, cols, vals = [], [], []
    v = np.zeros(N * N)
    lap = eps / d ** 2
    adv = 1.0 / (2.0 * d)
    for j in range(N):
        for i in range(N):
            k = grid_index(i, j, N)
            if i in (0, N - 1) or j in (0, N - 1):
                rows.append(k); cols.append(k); vals.append(kappa)
                continue
            stencil = [
                (grid_index(i + 1, j, N), lap + adv),
                (grid_index(i - 1, j, N), lap - adv),
                (grid_index(i, j + 1, N), lap),
                (grid_index(i, j - 1, N), lap),
                (k, -4.0 * lap),
            ]
            for col, a in stencil:
                rows.append(k); cols.append(col); vals.append(a)
            v[k] = -wind_curl(y[j])
    A = sp.csr_matrix((vals, (rows, cols)), shape=(N * N, N * N))
    A.sum_duplicates()
    return LinearSystem(A, v, N)


def least_squares_quadratic(system: LinearSystem) -> RealCost:
    """``|A w - v|^2`` as ``w.J.w + h.w + c`` with ``J = A'A``, ``h = -2 A'v``."""
    A = system.A
    J = (A.T @ A).toarray()
    h = -2.0 * (A.T @ system.v)
    return RealCost(J, np.asarray(h).ravel(), float(system.v @ system.v))


def stommel_fd_cost(config: StommelConfig) -> RealCost:
    return least_squares_quadratic(build_stommel_fd(config))


def _spectral_operator(config: SpectralConfig, x, y):
    """``G[k]`` on the tensor grid ``(x[:, None], y[None, :])`` for every mode ``k``."""
    eps = config.epsilon
    X, Y = np.meshgrid(x, y, indexing="ij")
    G = []
    for n, m in config.modes:
        sx, cx = np.sin(np.pi * n * X), np.cos(np.pi * n * X)
        sy = np.sin(np.pi * m * Y)
        G.append(np.pi * n * cx * sy - eps * np.pi ** 2 * (n * n + m * m) * sx * sy)
    return np.array(G), X, Y


def gauss_legendre_unit(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    t, wt = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (t + 1.0), 0.5 * wt


def build_stommel_spectral(config: SpectralConfig) -> RealCost:
    """Sine-basis least squares, integrals by tensor Gauss-Legendre quadrature."""
    x, wx = gauss_legendre_unit(config.nodes)
    G, X, Y = _spectral_operator(config, x, x)
    W = np.outer(wx, wx)
    B = wind_curl(Y)
    Gw = G * W
    K = G.shape[0]
    J = Gw.reshape(K, -1) @ G.reshape(K, -1).T
    h = 2.0 * Gw.reshape(K, -1) @ B.ravel()
    const = float(np.sum(W * B * B))
    return RealCost(J, h, const)


def nonlinear_tensors(n_basis: int):
    """Closed-form integrals for the monomial basis ``phi_m = x**m``.

    Returns ``(Jq, J2, const)`` where ``Jq[i,j,p,q] = int phi_i' phi_j' phi_p' phi_q'``,
    ``J2[i,j] = int -8 x^2 phi_i' phi_j'`` and ``const = int 16 x^4``.
    """
    Jq = np.zeros((n_basis,) * 4)
    for i in range(1, n_basis):
        for j in range(1, n_basis):
            for p in range(1, n_basis):
                for q in range(1, n_basis):
                    Jq[i, j, p, q] = i * j * p * q / (i + j + p + q - 3)
    J2 = np.zeros((n_basis, n_basis))
    for i in range(1, n_basis):
        for j in range(1, n_basis):
            J2[i, j] = -8.0 * i * j / (i + j + 1)
    return Jq, J2, 16.0 / 5.0


def build_nonlinear_ode(config: NonlinearConfig) -> RealCost:
    """Quartic cost for ``(y')^2 - 4x^2 = 0`` plus a boundary-value penalty.

    The penalty ``lam * ((y(0) - 1)^2 + (y(1) - 2)^2)`` is quadratic in the
    coefficients and vanishes at the exact solution ``y = 1 + x^2``.
    """
    n = config.n_basis
    lam = config.bc_penalty
    Jq, J2, const = nonlinear_tensors(n)
    quartic: dict[tuple[int, int, int, int], float] = {}
    for key in np.ndindex(*Jq.shape):
        if Jq[key] != 0.0:
            k = tuple(sorted(key))
            quartic[k] = quartic.get(k, 0.0) + float(Jq[key])
    # y(0) = w_0 and y(1) = sum(w)
    e0 = np.zeros(n)
    e0[0] = 1.0
    ones = np.ones(n)
    J = J2 + lam * (np.outer(e0, e0) + np.outer(ones, ones))
    h = lam * (-2.0 * e0 - 4.0 * ones)
    return RealCost(J, h, const + lam * 5.0, quartic)


def nonlinear_residual_cost(config: NonlinearConfig) -> RealCost:
    """The same cost without the boundary penalty."""
    Jq, J2, const = nonlinear_tensors(config.n_basis)
    quartic = {key: float(Jq[key]) for key in np.ndindex(*Jq.shape) if Jq[key] != 0.0}
    return RealCost(J2, np.zeros(config.n_basis), const, quartic)


def solve_quadratic_exact(cost: RealCost, tol: float = 1e-10) -> np.ndarray:
    """Minimizer of ``w.J.w + h.w + c`` (least-norm if ``J`` is singular)."""
    if cost.is_quartic:
        raise ValueError("solve_quadratic_exact needs a quadratic cost")
    evals, evecs = scipy.linalg.eigh(cost.J)
    top = max(abs(evals[-1]), abs(evals[0]), 1e-300)
    if evals[0] < -tol * top:
        raise NumericError(f"J is indefinite: smallest eigenvalue {evals[0]:.3e}, largest {evals[-1]:.3e}")
    keep = evals > tol * top
    rhs = evecs.T @ (-0.5 * cost.h)
    w = evecs[:, keep] @ (rhs[keep] / evals[keep])
    return w


def stommel_fd_field(w, N: int) -> np.ndarray:
    """``psi[j, i]`` at ``(x_i, y_j)``; boundary values are forced to zero."""
    w = np.asarray(w, dtype=float)
    if w.shape != (N * N,):
        raise DimensionError(f"expected {N * N} values, got shape {w.shape}")
    psi = w.reshape(N, N).copy()
    psi[0, :] = psi[-1, :] = psi[:, 0] = psi[:, -1] = 0.0
    return psi


def spectral_field(w, config: SpectralConfig, resolution: int = 41) -> np.ndarray:
    """Sine-series streamfunction ``psi[j, i]`` on a uniform grid including the edges."""
    w = np.asarray(w, dtype=float)
    modes = config.modes
    if w.shape != (len(modes),):
        raise DimensionError(f"expected {len(modes)} coefficients, got shape {w.shape}")
    g = np.linspace(0.0, 1.0, resolution)
    psi = np.zeros((resolution, resolution))
    for c, (n, m) in zip(w, modes):
        psi += c * np.outer(np.sin(np.pi * m * g), np.sin(np.pi * n * g))
    return psi


def nonlinear_field(w, resolution: int = 101) -> np.ndarray:
    """Samples of ``y(x) = sum_m w_m x**m`` on a uniform grid of [0, 1]."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.shape[0] < 1:
        raise DimensionError("coefficient vector must be 1-D and non-empty")
    x = np.linspace(0.0, 1.0, resolution)
    return np.polynomial.polynomial.polyval(x, w)


def field_from_solution(kind: str, w, config=None, resolution: int | None = None) -> np.ndarray:
    """Render a solution vector as a field for output.

    ``kind`` is ``"fd"``, ``"spectral"`` or ``"nonlinear"``.
    """
    if kind == "fd":
        N = config.N if config is not None else int(round(math.sqrt(len(w))))
        return stommel_fd_field(w, N)
    if kind == "spectral":
        return spectral_field(w, config or SpectralConfig(), resolution or 41)
    if kind == "nonlinear":
        return nonlinear_field(w, resolution or 101)
    raise ValueError(f"unknown problem kind {kind!r}")
