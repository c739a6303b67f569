"""Monte Carlo construction of mild solutions of the fractional stochastic
neutral system

    D^a (X(t) + g(t, X(t))) = A X(t) + b(t, X(t)) + sigma(t, X(t)) dW/dt,
    I^(1-a) (X + g(., X))|_{t=0} = rho,        a in (1/2, 1],

on a uniform grid t_n = n*dt.  Three equivalent representations are
discretised:

* ``simulate_mild``  marches the variation-of-constants form
  X(t) = t^(a-1) E_{a,a}(t^a A) rho - g(t, X(t))
         - int_0^t A (t-s)^(a-1) E_{a,a}((t-s)^a A) g(s, X(s)) ds
         + int_0^t   (t-s)^(a-1) E_{a,a}((t-s)^a A) b(s, X(s)) ds
         + int_0^t   (t-s)^(a-1) E_{a,a}((t-s)^a A) sigma(s, X(s)) dW(s).
* ``simulate_integral_form``  marches the second-kind Volterra form with the
  constant kernel (t-s)^(a-1)/Gamma(a) and the linear memory term A X(s)
  (the self-consistent form; a literal variant with A g(s, X(s)) under the
  integral is available behind ``as_printed=True`` for comparison).
* ``picard_path_solve``  iterates the whole-path solution operator to its
  fixed point on one path; the marching schemes are its triangular solve.

Quadrature conventions (shared): on each cell the singular scalar factor
(t_n - s)^(a-1) is integrated exactly and multiplies the left-point values
of kernel and coefficient (Ito convention).  The stochastic convolution uses
variance-matched weights kappa so that the per-cell Ito isometry is exact
even on the singular last cell (2a - 1 > 0).  Coefficient evaluations at the
singular node 0 use the convention X_0 := 0; their cell contributions vanish
under refinement and are exactly zero for vanishing coefficient families.
The state at t = 0 exists only in weighted coordinates,
t^(1-a) X(t) -> rho / Gamma(a); ``values`` holds NaN there.

Paths are independent given their increments; all reductions here are
per-path, so results do not depend on how paths are chunked or scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from .coefficients import CoefficientSet
from .errors import ConvergenceError, SimulationNumericError
from .fraccalc import DEFAULT_POLICY, FractionalOrder, MLEvalPolicy, beta_fn, gamma_fn, ml_matrix, ml_scalar
from .spectral import eigen_decomposition

__all__ = [
    "TimeGrid",
    "SystemSpec",
    "BrownianEnsemble",
    "PathEnsemble",
    "PicardResult",
    "brownian_increments",
    "simulate_mild",
    "simulate_integral_form",
    "picard_path_solve",
    "closed_form_homogeneous",
]


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid 0 = t_0 < ... < t_N = T."""

    T: float
    N: int

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if self.N < 2:
            raise ValueError(f"N must be >= 2, got {self.N}")

    @property
    def dt(self) -> float:
        return self.T / self.N

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.dt


@dataclass(frozen=True)
class SystemSpec:
    """Problem instance: drift matrix, weighted initial datum, coefficients,
    and the fractional/moment orders."""

    A: np.ndarray
    rho: np.ndarray
    coeffs: CoefficientSet
    order: FractionalOrder

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.A, dtype=float))
        rho = np.atleast_1d(np.asarray(self.rho, dtype=float))
        if a.shape[0] != a.shape[1]:
            raise ValueError(f"A must be square, got {a.shape}")
        if rho.shape != (a.shape[0],):
            raise ValueError(f"rho shape {rho.shape} does not match A {a.shape}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(rho))):
            raise ValueError("A and rho must be finite")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "rho", rho)

    @property
    def n(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class BrownianEnsemble:
    """Per-path Brownian increments, Normal(0, dt), shape (n_paths, N).

    Path i is generated from a counter-based stream keyed by
    (master_seed, i) alone, so the ensemble is independent of scheduling and
    reproducible path by path.
    """

    increments: np.ndarray
    master_seed: int
    n_paths: int


@dataclass(frozen=True)
class PathEnsemble:
    """Simulated states on a grid.

    ``values[i, j]`` is X(t_j) for path i (NaN at j = 0 where X diverges like
    t^(a-1)); ``weighted[i, j]`` is t_j^(1-a) X(t_j) with the finite limit
    rho/Gamma(a) stored at j = 0.
    """

    values: np.ndarray
    weighted: np.ndarray
    grid: TimeGrid
    scheme_tag: str
    master_seed: int
    n_paths: int


@dataclass(frozen=True)
class PicardResult:
    values: np.ndarray
    weighted: np.ndarray
    grid: TimeGrid
    iterations: int
    contraction_ratio: float


def brownian_increments(grid: TimeGrid, n_paths: int, master_seed: int) -> BrownianEnsemble:
    """Draw the increment matrix (n_paths, N), path i keyed by (master_seed, i)."""
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    sqrt_dt = math.sqrt(grid.dt)
    out = np.empty((n_paths, grid.N))
    for i in range(n_paths):
        seq = np.random.SeedSequence(master_seed, spawn_key=(i,))
        rng = np.random.Generator(np.random.Philox(seq))
        out[i] = rng.standard_normal(grid.N) * sqrt_dt
    return BrownianEnsemble(increments=out, master_seed=int(master_seed), n_paths=int(n_paths))


class _KernelTable:
    """Grid kernels E_{a,a}((m dt)^a A) and the shared quadrature weights.

    d[m-1]     exact integral of (t_n - s)^(a-1) over the cell with lag m,
    kappa[m-1] variance-matched stochastic weight for the same cell,
    homog[n]   t_n^(a-1) E_{a,a}(t_n^a A) rho.

    ``scalar`` is True for one-dimensional systems, where kernels are kept
    as plain floats and the convolutions reduce to BLAS dot products.
    """

    def __init__(self, system: SystemSpec, grid: TimeGrid, policy: MLEvalPolicy):
        alpha = system.order.alpha
        n_steps = grid.N
        dt = grid.dt
        dim = system.n
        self.scalar = dim == 1
        m = np.arange(n_steps + 1, dtype=float)
        self.d = dt**alpha * np.diff(m**alpha) / alpha
        self.kappa = dt ** (alpha - 1.0) * np.sqrt(
            np.diff(m ** (2.0 * alpha - 1.0)) / (2.0 * alpha - 1.0)
        )
        times = grid.nodes
        if self.scalar:
            a_val = float(system.A[0, 0])
            self.E = np.empty(n_steps + 1)
            for k in range(n_steps + 1):
                self.E[k] = ml_scalar(alpha, alpha, (times[k] ** alpha) * a_val, policy)
            self.homog = np.zeros(n_steps + 1)
            self.homog[1:] = times[1:] ** (alpha - 1.0) * self.E[1:] * system.rho[0]
        else:
            decomp = eigen_decomposition(system.A)
            self.E = np.empty((n_steps + 1, dim, dim))
            for k in range(n_steps + 1):
                dec = None
                if decomp is not None:
                    dec = ((times[k] ** alpha) * decomp[0], decomp[1])
                self.E[k] = ml_matrix(alpha, alpha, (times[k] ** alpha) * system.A,
                                      policy, decomposition=dec)
            self.homog = np.zeros((n_steps + 1, dim))
            self.homog[1:] = times[1:, None] ** (alpha - 1.0) * np.einsum(
                "nij,j->ni", self.E[1:], system.rho
            )


def _convolve_step(weights, history, n, scalar):
    """sum_{j=0}^{n-1} weights[n-j] history[j]  (weights indexed by lag-1).

    einsum without BLAS: its reduction order depends only on the lag length,
    so results are bit-identical no matter how paths are chunked.
    """
    w = weights[:n][::-1]
    if scalar:
        return np.einsum("m,mp->p", w, history[:n])
    return np.einsum("mik,mpk->pi", w, history[:n])


def _solve_neutral(rhs, g_fn, t, L_g, tol, max_iter):
    """Fixed point x = rhs - g(t, x); linear convergence at rate L_g < 1.

    Each path is frozen the moment its own update falls below tolerance, so
    a path's iterate sequence depends on that path alone and results are
    identical under any batching of the ensemble.
    """
    x = rhs.copy()
    scalar = x.ndim == 1
    active = np.arange(x.shape[0])
    # non-finite states propagate deliberately; the finiteness check after
    # this solve reports them per path
    with np.errstate(invalid="ignore", over="ignore"):
        for _ in range(max_iter):
            xa = x[active]
            x_new = rhs[active] - g_fn(t, xa)
            if scalar:
                step = np.abs(x_new - xa)
                size = np.abs(x_new)
            else:
                step = np.max(np.abs(x_new - xa), axis=-1)
                size = np.max(np.abs(x_new), axis=-1)
            x[active] = x_new
            done = step <= tol * (1.0 + size)
            done |= ~np.isfinite(size)
            active = active[~done]
            if active.size == 0:
                return x
    raise ConvergenceError(
        "neutral-term fixed point did not converge "
        f"(L_g={L_g}; requires L_g < 1 and finite states)"
    )


def _check_finite(x, n, scheme):
    if np.all(np.isfinite(x)):
        return
    if x.ndim == 1:
        bad = np.nonzero(~np.isfinite(x))[0]
    else:
        bad = np.nonzero(~np.all(np.isfinite(x), axis=-1))[0]
    raise SimulationNumericError(
        f"{scheme}: non-finite state at node {n} for paths {bad[:8].tolist()}",
        path_indices=bad.tolist(),
        node=n,
    )


def _package(x_hist, system, grid, tag, master_seed, n_paths):
    """Assemble a PathEnsemble from time-major states (N+1, P, dim)."""
    alpha = system.order.alpha
    times = grid.nodes
    values = np.transpose(x_hist, (1, 0, 2)).copy()
    values[:, 0, :] = np.nan
    weighted = np.empty_like(values)
    weighted[:, 0, :] = system.rho / gamma_fn(alpha)
    weighted[:, 1:, :] = times[None, 1:, None] ** (1.0 - alpha) * values[:, 1:, :]
    return PathEnsemble(values=values, weighted=weighted, grid=grid, scheme_tag=tag,
                        master_seed=master_seed, n_paths=n_paths)


def _march(system, grid, increments, table, *, integral_form, as_printed=False,
           fp_tol=1e-12, fp_max_iter=100, scheme_tag="mild"):
    """Shared time-marching core for the mild and integral-form schemes."""
    alpha = system.order.alpha
    coeffs = system.coeffs
    n_steps, dt, dim = grid.N, grid.dt, system.n
    n_paths = increments.shape[0]
    times = grid.nodes
    scalar = table.scalar
    inv_gamma = 1.0 / gamma_fn(alpha)

    if integral_form:
        # constant kernel 1/Gamma(a); memory term A X (or A g as printed)
        if scalar:
            w_mem = inv_gamma * table.d
            w_b = inv_gamma * table.d
            w_s = inv_gamma * table.kappa
        else:
            eye = np.eye(dim)
            w_mem = inv_gamma * table.d[:, None, None] * eye
            w_b = w_mem
            w_s = inv_gamma * table.kappa[:, None, None] * eye
    else:
        if scalar:
            a_val = float(system.A[0, 0])
            w_g = -table.d * a_val * table.E[1:]
            w_b = table.d * table.E[1:]
            w_s = table.kappa * table.E[1:]
        else:
            w_g = -table.d[:, None, None] * (system.A @ table.E[1:])
            w_b = table.d[:, None, None] * table.E[1:]
            w_s = table.kappa[:, None, None] * table.E[1:]

    shape = (n_steps + 1, n_paths) if scalar else (n_steps + 1, n_paths, dim)
    x_hist = np.zeros(shape)
    mem_hist = np.zeros(shape)      # g-values (mild) or A X / A g values (integral)
    b_hist = np.zeros(shape)
    s_dw_hist = np.zeros(shape)

    def coeff(fn, t, x):
        val = fn(t, x if not scalar else x[:, None])
        return np.asarray(val)[:, 0] if scalar else np.asarray(val)

    # node-0 convention X_0 := 0 for coefficient evaluation
    zero_state = np.zeros((n_paths,) if scalar else (n_paths, dim))
    if not integral_form:
        mem_hist[0] = coeff(coeffs.g, 0.0, zero_state)
    elif as_printed:
        mem_hist[0] = coeff(coeffs.g, 0.0, zero_state)
        if not scalar:
            mem_hist[0] = mem_hist[0] @ system.A.T
        else:
            mem_hist[0] = mem_hist[0] * float(system.A[0, 0])
    b_hist[0] = coeff(coeffs.b, 0.0, zero_state)
    sig0 = coeff(coeffs.sigma, 0.0, zero_state)
    s_dw_hist[0] = sig0 * (increments[:, 0] if scalar else increments[:, 0, None])

    # exact first-cell weight for the singular memory cell of the integral
    # form: int_0^dt s^(a-1) (t_n - s)^(a-1) ds, applied to A rho / Gamma(a)
    rho_w = system.rho / gamma_fn(alpha)
    a_rho_w = (system.A @ rho_w)
    b_aa = beta_fn(alpha, alpha)

    homog = table.homog
    g_fn = coeffs.g if not scalar else (lambda t, x: coeff(coeffs.g, t, x))

    for n in range(1, n_steps + 1):
        t_n = times[n]
        if integral_form:
            rhs = t_n ** (alpha - 1.0) * inv_gamma * (system.rho[0] if scalar else system.rho)
            rhs = rhs + _convolve_step(w_mem, mem_hist, n, scalar)
            rhs = rhs + _convolve_step(w_b, b_hist, n, scalar)
            rhs = rhs + _convolve_step(w_s, s_dw_hist, n, scalar)
            if not as_printed:
                cell0 = b_aa * betainc(alpha, alpha, dt / t_n) * t_n ** (2.0 * alpha - 1.0)
                rhs = rhs + inv_gamma * cell0 * (a_rho_w[0] if scalar else a_rho_w)
        else:
            rhs = homog[n] + _convolve_step(w_g, mem_hist, n, scalar)
            rhs = rhs + _convolve_step(w_b, b_hist, n, scalar)
            rhs = rhs + _convolve_step(w_s, s_dw_hist, n, scalar)

        x = _solve_neutral(rhs, g_fn, t_n, coeffs.L_g, fp_tol, fp_max_iter)
        _check_finite(x, n, scheme_tag)
        x_hist[n] = x

        if integral_form:
            if as_printed:
                gval = coeff(coeffs.g, t_n, x)
                mem_hist[n] = gval * float(system.A[0, 0]) if scalar else gval @ system.A.T
            else:
                mem_hist[n] = x * float(system.A[0, 0]) if scalar else x @ system.A.T
        else:
            mem_hist[n] = coeff(coeffs.g, t_n, x)
        b_hist[n] = coeff(coeffs.b, t_n, x)
        if n < n_steps:
            sig = coeff(coeffs.sigma, t_n, x)
            s_dw_hist[n] = sig * (increments[:, n] if scalar else increments[:, n, None])

    if scalar:
        x_hist = x_hist[:, :, None]
    return x_hist


def _run_chunked(system, grid, ensemble, tag, chunk_size, march_kwargs):
    if system.coeffs.L_g >= 1.0:
        raise ValueError(
            f"the neutral fixed point requires L_g < 1, got L_g={system.coeffs.L_g}"
        )
    table = _KernelTable(system, grid, march_kwargs.pop("policy"))
    inc = ensemble.increments
    if inc.shape[1] != grid.N:
        raise ValueError(
            f"ensemble has {inc.shape[1]} increments per path, grid expects {grid.N}"
        )
    n_paths = inc.shape[0]
    if not chunk_size or chunk_size >= n_paths:
        x_hist = _march(system, grid, inc, table, scheme_tag=tag, **march_kwargs)
    else:
        parts = []
        for lo in range(0, n_paths, chunk_size):
            parts.append(
                _march(system, grid, inc[lo:lo + chunk_size], table,
                       scheme_tag=tag, **march_kwargs)
            )
        x_hist = np.concatenate(parts, axis=1)
    return _package(x_hist, system, grid, tag, ensemble.master_seed, n_paths)


def simulate_mild(system: SystemSpec, grid: TimeGrid, ensemble: BrownianEnsemble,
                  policy: MLEvalPolicy = DEFAULT_POLICY, fp_tol=1e-12,
                  fp_max_iter=100, chunk_size=None) -> PathEnsemble:
    """March the variation-of-constants scheme over the ensemble.

    Kernel matrices E_{a,a}((m dt)^a A) are precomputed once and shared;
    ``chunk_size`` only batches paths (results are identical for any value).
    """
    return _run_chunked(system, grid, ensemble, "mild", chunk_size,
                        dict(integral_form=False, policy=policy,
                             fp_tol=fp_tol, fp_max_iter=fp_max_iter))


def simulate_integral_form(system: SystemSpec, grid: TimeGrid, ensemble: BrownianEnsemble,
                           policy: MLEvalPolicy = DEFAULT_POLICY, as_printed=False,
                           fp_tol=1e-12, fp_max_iter=100, chunk_size=None) -> PathEnsemble:
    """March the second-kind Volterra scheme (memory term A X).

    ``as_printed=True`` switches the memory term to + A g(s, X(s)) for
    side-by-side comparison with the self-consistent form.
    """
    tag = "integral_form_as_printed" if as_printed else "integral_form"
    return _run_chunked(system, grid, ensemble, tag, chunk_size,
                        dict(integral_form=True, as_printed=as_printed, policy=policy,
                             fp_tol=fp_tol, fp_max_iter=fp_max_iter))


def picard_path_solve(system: SystemSpec, grid: TimeGrid, path_increments,
                      max_iter=200, tol=1e-10,
                      policy: MLEvalPolicy = DEFAULT_POLICY) -> PicardResult:
    """Whole-path fixed-point iteration of the solution operator on one path.

    Starts from the zero path and applies the full right-hand side of the
    variation-of-constants form with all state evaluations held at the
    previous iterate.  Stops when the weighted sup-norm change drops below
    ``tol``; raises :class:`ConvergenceError` with the last contraction-ratio
    estimate otherwise.  The fixed point coincides with the time-marching
    solution of the same discrete system.
    """
    if system.coeffs.L_g >= 1.0:
        raise ValueError("picard_path_solve requires L_g < 1")
    inc = np.atleast_1d(np.asarray(path_increments, dtype=float))
    if inc.ndim != 1 or inc.shape[0] != grid.N:
        raise ValueError(f"path_increments must have shape ({grid.N},)")
    table = _KernelTable(system, grid, policy)
    alpha = system.order.alpha
    coeffs = system.coeffs
    n_steps, dim = grid.N, system.n
    times = grid.nodes
    w_time = times[1:] ** (1.0 - alpha)

    if table.scalar:
        a_val = float(system.A[0, 0])
        w_g = -table.d * a_val * table.E[1:]
        w_b = table.d * table.E[1:]
        w_s = table.kappa * table.E[1:]
    else:
        w_g = -table.d[:, None, None] * (system.A @ table.E[1:])
        w_b = table.d[:, None, None] * table.E[1:]
        w_s = table.kappa[:, None, None] * table.E[1:]
    homog = table.homog

    def conv_full(weights, hist):
        """(weights * hist)[n] = sum_{m=1..n} weights[m] hist[n-m], all n."""
        if table.scalar:
            w_full = np.concatenate(([0.0], weights))
            return np.convolve(w_full, hist)[: n_steps + 1]
        out = np.zeros((n_steps + 1, dim))
        for i in range(dim):
            for k in range(dim):
                w_full = np.concatenate(([0.0], weights[:, i, k]))
                out[:, i] += np.convolve(w_full, hist[:, k])[: n_steps + 1]
        return out

    def coeff_history(fn, states, with_increments=False):
        """Left-point coefficient values node by node (X_0 := 0)."""
        out = np.zeros_like(states)
        for j in range(n_steps + 1):
            state = states[j : j + 1]  # shape (1,) scalar mode, (1, dim) otherwise
            if j == 0:
                state = np.zeros_like(state)
            val = np.asarray(fn(times[j], state))
            out[j] = float(np.ravel(val)[0]) if table.scalar else val[0]
            if with_increments:
                out[j] = out[j] * (inc[j] if j < n_steps else 0.0)
        return out

    x = np.zeros((n_steps + 1,) if table.scalar else (n_steps + 1, dim))
    prev_change = None
    ratio = math.nan
    iterations = 0
    for iterations in range(1, max_iter + 1):
        g_hist = coeff_history(coeffs.g, x)
        b_hist = coeff_history(coeffs.b, x)
        s_dw = coeff_history(coeffs.sigma, x, with_increments=True)

        x_new = homog + conv_full(w_g, g_hist) + conv_full(w_b, b_hist) + conv_full(w_s, s_dw)
        x_new = x_new - g_hist  # neutral term at the previous iterate
        x_new[0] = 0.0

        diff = x_new[1:] - x[1:]
        change = np.max(np.abs(w_time * diff)) if table.scalar else np.max(
            np.abs(w_time[:, None] * diff)
        )
        if prev_change is not None and prev_change > 0:
            ratio = change / prev_change
        prev_change = change
        x = x_new
        if change <= tol:
            break
    else:
        raise ConvergenceError(
            f"Picard iteration did not reach tol={tol} in {max_iter} sweeps; "
            f"last contraction ratio estimate {ratio:.4g}"
        )

    x_hist = x[:, None, None] if table.scalar else x[:, None, :]
    ens = _package(x_hist, system, grid, "picard", 0, 1)
    return PicardResult(values=ens.values[0], weighted=ens.weighted[0], grid=grid,
                        iterations=iterations, contraction_ratio=float(ratio))


def closed_form_homogeneous(a_mat, rho, alpha, grid: TimeGrid,
                            policy: MLEvalPolicy = DEFAULT_POLICY) -> PathEnsemble:
    """Exact homogeneous solution X(t) = t^(a-1) E_{a,a}(t^a A) rho.

    Returned as a single deterministic path (NaN value at node 0; weighted
    value rho/Gamma(a) there).  For alpha = 1 this reduces to exp(t A) rho.
    """
    a_mat = np.atleast_2d(np.asarray(a_mat, dtype=float))
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    dim = a_mat.shape[0]
    times = grid.nodes
    vals = np.full((1, grid.N + 1, dim), np.nan)
    weighted = np.empty((1, grid.N + 1, dim))
    weighted[0, 0] = rho / gamma_fn(alpha)
    if dim == 1:
        a_val = float(a_mat[0, 0])
        for n in range(1, grid.N + 1):
            e = ml_scalar(alpha, alpha, (times[n] ** alpha) * a_val, policy)
            vals[0, n, 0] = times[n] ** (alpha - 1.0) * e * rho[0]
            weighted[0, n, 0] = e * rho[0]
    else:
        decomp = eigen_decomposition(a_mat)
        for n in range(1, grid.N + 1):
            dec = None
            if decomp is not None:
                dec = ((times[n] ** alpha) * decomp[0], decomp[1])
            e = ml_matrix(alpha, alpha, (times[n] ** alpha) * a_mat, policy,
                          decomposition=dec)
            weighted[0, n] = e @ rho
            vals[0, n] = times[n] ** (alpha - 1.0) * weighted[0, n]
    return PathEnsemble(values=vals, weighted=weighted, grid=grid,
                        scheme_tag="closed_form", master_seed=0, n_paths=1)
