"""Transition density, stationary normalization, and convergence diagnostics.

The density at elapsed time t factors through the eigenbasis:

    p(t, x, y) = e^{-sbar(x)/2} [ sum_n e^{-Lambda_n t} B~_n(x) B~_n(y) ]
                 e^{+sbar(y)/2} pi0(y),

with B~_n the C-orthonormal polynomial combinations and pi0 the unnormalized
neutral stationary density. Series cutoffs: n_max eigenpairs, coefficients
kept through total degree m_max. The stationary density itself is
pi(y) = C_stat e^{-sbar(y)} pi0(y) with C_stat computed from the lead
eigenvector without any quadrature.
"""

import warnings

import numpy as np

from . import model as model_mod
from .errors import NumericalError, ParameterError
from .indexing import BasisEnumeration, total_count
from .jacobi import log_R_at_zero
from .simplex import clamp_simplex, to_cube

DEFAULT_N_MAX = 562    # eigenpairs kept; level-36 block size for K=3
DEFAULT_M_MAX = 36     # coefficient degree kept
TAIL_WARN_THRESHOLD = 1e-8


def _resolve_cutoffs(sd, n_max, m_max):
    U = sd.size
    if n_max is None:
        n_max = min(DEFAULT_N_MAX, U)
    if not 1 <= n_max <= U:
        raise ParameterError(f"n_max must be in 1..{U}, got {n_max}")
    if m_max is None:
        m_max = min(DEFAULT_M_MAX, sd.D)
    if not 0 <= m_max <= sd.D:
        raise ParameterError(f"m_max must be in 0..{sd.D}, got {m_max}")
    u_m = total_count(sd.params.K, m_max)
    return n_max, u_m


def _phi_at(sd, pts, n_max, u_m):
    """Evaluate the first n_max orthonormal combinations at simplex points.

    Returns an array of shape (n_max,) + pts.shape[:-1].
    """
    xi = to_cube(clamp_simplex(pts))
    P = sd.basis.eval_prefix_cube(xi, count=u_m)
    return np.tensordot(sd.coeffs[:n_max, :u_m], P, axes=(1, 0))


def smooth_kernel(sd, t, x, y, n_max=None, m_max=None):
    """Density with the neutral stationary kernel divided out.

    Returns e^{-sbar(x)/2} [sum_n e^{-Lambda_n t} B~_n(x) B~_n(y)]
    e^{+sbar(y)/2} as an (Mx, My) array over two point batches; the full
    density is this times pi0(y). Bounded up to the boundary, which makes it
    the right integrand for kernel-weighted quadrature.
    """
    if not t > 0:
        raise ParameterError(f"elapsed time must be > 0, got {t}")
    n_max, u_m = _resolve_cutoffs(sd, n_max, m_max)
    p = sd.params
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    phi_x = _phi_at(sd, x, n_max, u_m)           # (n_max, Mx)
    phi_y = _phi_at(sd, y, n_max, u_m)           # (n_max, My)
    decay = np.exp(-sd.eigenvalues[:n_max] * t)
    kernel = (phi_x * decay[:, None]).T @ phi_y  # (Mx, My)
    wx = np.exp(-0.5 * model_mod.mean_fitness(p, x))
    wy = np.exp(0.5 * model_mod.mean_fitness(p, y))
    return kernel * wx[:, None] * wy[None, :]


def transition_density(sd, t, x, y, n_max=None, m_max=None,
                       clip_negative=False, warn_threshold=TAIL_WARN_THRESHOLD):
    """Evaluate the transition density from x after elapsed time t at y.

    Args:
        sd: SpectralDecomposition.
        t: elapsed time, > 0.
        x: start point, first K-1 coordinates.
        y: evaluation points, shape (..., K-1).
        n_max: eigenpairs kept (default min(562, available)).
        m_max: coefficient degree kept (default min(36, truncation)).
        clip_negative: zero out small negative excursions near the boundary.
        warn_threshold: warn when the first dropped term still carries
            weight e^{-Lambda_{n_max} t} above this.

    Returns the density at y (scalar for a single point).
    """
    if not t > 0:
        raise ParameterError(f"elapsed time must be > 0, got {t}")
    n_max, u_m = _resolve_cutoffs(sd, n_max, m_max)
    p = sd.params
    if n_max < sd.size:
        tail = np.exp(-sd.eigenvalues[n_max] * t)
        if tail > warn_threshold:
            warnings.warn(
                f"first dropped eigenterm retains weight {tail:.2e} at "
                f"t={t}; raise n_max or the truncation level", stacklevel=2)
    x = np.asarray(x, dtype=float)
    if x.shape != (p.K - 1,):
        raise ParameterError(
            f"start point needs shape ({p.K - 1},), got {x.shape}")
    phi_x = _phi_at(sd, x, n_max, u_m)           # (n_max,)
    phi_y = _phi_at(sd, y, n_max, u_m)           # (n_max,) + batch
    decay = np.exp(-sd.eigenvalues[:n_max] * t)
    kernel = np.tensordot(decay * phi_x, phi_y, axes=(0, 0))
    # log_stationary_unnormalized already carries e^{sbar(y)}, so the
    # intended net prefactor e^{+sbar(y)/2} * dirichlet(y) needs -1/2 here
    log_pref = (-0.5 * model_mod.mean_fitness(p, x)
                - 0.5 * model_mod.mean_fitness(p, y)
                + model_mod.log_stationary_unnormalized(p, y))
    out = kernel * np.exp(log_pref)
    neg = np.min(out) if out.size else 0.0
    if neg < 0:
        scale = max(np.max(out), 0.0)
        warnings.warn(
            f"truncation undershoot: most negative value {neg:.3e} "
            f"against maximum {scale:.3e}", stacklevel=2)
        if clip_negative:
            out = np.maximum(out, 0.0)
    return out if out.ndim else float(out)


def neutral_transition_density(p, t, x, y, D):
    """Transition density without selection, summed directly over the basis.

    Independent of the eigensolver path: with sigma = 0 the operator is
    already diagonal, so the series needs only the raw basis polynomials and
    their norms. Used to cross-check the general machinery.
    """
    if not p.is_neutral:
        raise ParameterError("this path requires a selection-free model")
    if not t > 0:
        raise ParameterError(f"elapsed time must be > 0, got {t}")
    enum = BasisEnumeration(p.K, D)
    from .basis import MultiJacobiBasis
    basis = MultiJacobiBasis(p.theta, enum)
    x = np.asarray(x, dtype=float)
    xi_x = to_cube(clamp_simplex(x))
    xi_y = to_cube(clamp_simplex(y))
    Px = basis.eval_prefix_cube(xi_x)
    Py = basis.eval_prefix_cube(xi_y)
    degrees = np.fromiter((sum(n) for n in enum.indices), dtype=float,
                          count=len(enum))
    lam = 0.5 * degrees * (degrees - 1.0 + p.theta_total)
    weights = np.exp(-lam * t - basis.log_norms_all())
    kernel = np.tensordot(weights * Px, Py, axes=(0, 0))
    out = kernel * np.exp(model_mod.log_stationary_unnormalized(p, y))
    return out if np.ndim(out) else float(out)


def normalizing_constant(sd, m_max=None):
    """Stationary normalizer from the lead eigenvector alone.

    C_stat = sum_m u_{0,m}^2 C_m / (sum_m u_{0,m} P_m(corner))^2, evaluated
    at the corner where every stick coordinate vanishes; no quadrature.
    """
    _, u_m = _resolve_cutoffs(sd, 1, m_max)
    p = sd.params
    u0 = sd.coeffs[0, :u_m]
    num = float(np.sum(u0 ** 2 * np.exp(sd.log_norms[:u_m])))
    den = 0.0
    for pos, m in enumerate(sd.basis.enumeration.indices[:u_m]):
        if u0[pos] == 0.0:
            continue
        lr = 0.0
        sign = 1.0
        for j, mj in enumerate(m):
            a, _ = sd.basis.axis_params(j, 0)
            lr += log_R_at_zero(mj, a)
            if mj % 2:
                sign = -sign
        den += u0[pos] * sign * np.exp(lr)
    if abs(den) < 1e-300 * max(1.0, abs(num)):
        raise NumericalError("lead eigenvector vanishes at the corner; "
                             "cannot form the stationary normalizer")
    return num / den ** 2


def stationary_density(sd, y, m_max=None):
    """Normalized stationary density e^{sbar(y)} pi0(y) / C_stat."""
    c = normalizing_constant(sd, m_max=m_max)
    p = sd.params
    return np.exp(model_mod.log_stationary_unnormalized(p, y)) / c


def distance_to_stationarity(sd, x, times, n_max=None, m_max=None):
    """Chi-square divergence of p(t, x, .) from the stationary law.

    d(t)^2 = sum_{n >= 1} e^{-2 Lambda_n t} e^{-sbar(x)} B~_n(x)^2; decreasing
    in t with decay rate 2 Lambda_1. Each term carries its realized
    (truncated) squared norm as divisor; with full coefficients that is 1.
    """
    n_max, u_m = _resolve_cutoffs(sd, n_max, m_max)
    times = np.asarray(times, dtype=float)
    if np.any(times <= 0):
        raise ParameterError("times must be positive")
    x = np.asarray(x, dtype=float)
    phi_x = _phi_at(sd, x, n_max, u_m)
    norms = (sd.coeffs[1:n_max, :u_m] ** 2
             * np.exp(sd.log_norms[:u_m])[None, :]).sum(axis=1)
    amp = (np.exp(-model_mod.mean_fitness(sd.params, x))
           * phi_x[1:] ** 2 / norms)
    return np.exp(-2.0 * np.outer(times, sd.eigenvalues[1:n_max])) @ amp


def make_grid(K, resolution):
    """Interior lattice on the simplex: midpoint offsets at 1/resolution pitch.

    Returns an (M, K-1) array of points with every coordinate and the implied
    last coordinate at least half a cell away from the boundary.
    """
    if resolution < 2:
        raise ParameterError(f"grid resolution must be >= 2, got {resolution}")
    h = 1.0 / resolution
    axes = [np.arange(resolution) * h + 0.5 * h for _ in range(K - 1)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    keep = pts.sum(axis=1) <= 1.0 - 0.5 * h
    return pts[keep]


def write_density_csv(path, points, values, K):
    """Density table export: one row per point, columns y_1..y_{K-1},p."""
    header = ",".join(f"y_{i + 1}" for i in range(K - 1)) + ",p"
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        for pt, v in zip(points, values):
            coords = ",".join(f"{c:.17g}" for c in pt)
            fh.write(f"{coords},{v:.17g}\n")


def write_distance_csv(path, times, distances):
    """Distance-curve export: (t, d2) rows."""
    with open(path, "w", newline="") as fh:
        fh.write("t,d2\n")
        for t, d in zip(times, distances):
            fh.write(f"{t:.17g},{d:.17g}\n")
