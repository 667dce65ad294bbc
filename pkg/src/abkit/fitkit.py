"""Least-squares analysis of bridge-chain and resonator measurement data.

Covers four measurement families:

* resistance of bridge chains versus bridge count (ordinary least squares),
* per-unit resistivity from the geometric resistance ratio
  ``L/(W*t)`` of bridge plus contact pad (zero-intercept least squares),
* complex transmission of a feedline-coupled notch resonator,

      S21(f) = 1 - (Q_l/|Q_c|) * exp(i*phi) / (1 + 2i*Q_l*(f - f0)/f0),

  fitted by damped Gauss-Newton after circle-fit and phase-slope
  initialization, with ``1/Q_l = 1/Q_i + cos(phi)/|Q_c|``,
* power-dependent dielectric loss with saturable two-level-system defects,

      1/Q_i(n) = f_d0 / sqrt(1 + (n/n_c)^beta) + 1/q_hp.

All iterative fits share one damped Gauss-Newton engine with a hard cap of
200 iterations and report a convergence flag plus the final residual norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.constants import hbar as _HBAR

from .errors import FitError, InputError

MAX_ITERATIONS = 200

# Film thicknesses used when a chain-unit geometry does not state its own:
# bridges are sputtered at 400 nm, contact pads sit on the 200 nm base film.
DEFAULT_BRIDGE_THICKNESS_NM = 400.0
DEFAULT_PAD_THICKNESS_NM = 200.0


# ---------------------------------------------------------------------------
# Linear fits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    slope_stderr: float
    intercept_stderr: float
    r_squared: float
    residual_norm: float = 0.0


def linear_fit(points: Sequence[tuple[float, float]], weights: Sequence[float] | None = None) -> LinearFit:
    """Ordinary (or weighted) least squares line through ``points``.

    Requires at least 3 points with non-degenerate x.  Standard errors use the
    reduced chi-square convention; residuals are orthogonal to [1, x] in the
    weighted inner product.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InputError("linear_fit: points must be (x, y) pairs")
    n = pts.shape[0]
    if n < 3:
        raise InputError(f"linear_fit: need at least 3 points, got {n}")
    x, y = pts[:, 0], pts[:, 1]
    span = x.max() - x.min()
    if span <= 1e-300 or span < 1e-12 * max(abs(x.max()), abs(x.min()), 1.0):
        raise InputError("linear_fit: degenerate x values (all identical)")
    if weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (n,) or np.any(w <= 0):
            raise InputError("linear_fit: weights must be positive, one per point")

    design = np.column_stack([np.ones(n), x])
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(design * sw[:, None], y * sw, rcond=None)
    intercept, slope = coef
    resid = y - (intercept + slope * x)
    ssr = float(np.sum(w * resid**2))
    ybar = float(np.sum(w * y) / np.sum(w))
    sst = float(np.sum(w * (y - ybar) ** 2))
    if sst <= 1e-300:
        r_squared = 1.0 if ssr <= 1e-300 else 0.0
    else:
        r_squared = min(1.0, max(0.0, 1.0 - ssr / sst))

    s2 = ssr / (n - 2)
    cov = s2 * np.linalg.inv(design.T @ (design * w[:, None]))
    return LinearFit(
        slope=float(slope),
        intercept=float(intercept),
        slope_stderr=float(math.sqrt(max(cov[1, 1], 0.0))),
        intercept_stderr=float(math.sqrt(max(cov[0, 0], 0.0))),
        r_squared=r_squared,
        residual_norm=float(math.sqrt(ssr)),
    )


# ---------------------------------------------------------------------------
# Resistance-ratio geometry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Span:
    """One conducting element: length/width in um, thickness in nm."""

    length_um: float
    width_um: float
    thickness_nm: float

    def __post_init__(self) -> None:
        for name in ("length_um", "width_um", "thickness_nm"):
            if getattr(self, name) <= 0:
                raise InputError(f"Span: {name} must be positive, got {getattr(self, name)}")

    @property
    def ratio_per_m(self) -> float:
        return (self.length_um * 1e-6) / ((self.width_um * 1e-6) * (self.thickness_nm * 1e-9))


def bridge_span(length_um: float, width_um: float, thickness_nm: float = DEFAULT_BRIDGE_THICKNESS_NM) -> Span:
    return Span(length_um, width_um, thickness_nm)


def pad_span(length_um: float, width_um: float, thickness_nm: float = DEFAULT_PAD_THICKNESS_NM) -> Span:
    return Span(length_um, width_um, thickness_nm)


@dataclass(frozen=True)
class UnitGeometry:
    """Bridge plus optional contact pad of one chain unit."""

    bridge: Span
    pad: Span | None = None


def geometric_ratio(geometry: UnitGeometry) -> float:
    """Total resistance ratio ``L/(W*t)`` of bridge plus pad, in 1/m."""
    ratio = geometry.bridge.ratio_per_m
    if geometry.pad is not None:
        ratio += geometry.pad.ratio_per_m
    return ratio


@dataclass(frozen=True)
class ResistivityFit:
    rho_ohm_m: float
    rho_stderr: float
    residual_norm: float


def fit_resistivity(units: Sequence[tuple[UnitGeometry, float]]) -> ResistivityFit:
    """Zero-intercept least squares of unit resistance against geometric ratio.

    The slope is the material resistivity in Ohm*m.  Needs at least two units
    with distinct geometric ratios.
    """
    if len(units) < 2:
        raise InputError(f"fit_resistivity: need at least 2 units, got {len(units)}")
    ratios = np.array([geometric_ratio(g) for g, _ in units])
    res = np.array([float(r) for _, r in units])
    if ratios.max() - ratios.min() < 1e-12 * ratios.max():
        raise InputError("fit_resistivity: all geometric ratios identical (rank-deficient)")
    denom = float(np.sum(ratios**2))
    rho = float(np.sum(ratios * res) / denom)
    resid = res - rho * ratios
    ssr = float(np.sum(resid**2))
    stderr = math.sqrt(ssr / (len(units) - 1) / denom)
    return ResistivityFit(rho_ohm_m=rho, rho_stderr=stderr, residual_norm=math.sqrt(ssr))


# ---------------------------------------------------------------------------
# Damped Gauss-Newton engine
# ---------------------------------------------------------------------------


def _damped_gauss_newton(
    residual: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], np.ndarray],
    p0: np.ndarray,
    max_iter: int = MAX_ITERATIONS,
) -> tuple[np.ndarray, np.ndarray, bool]:
    """Minimize ``|residual(p)|^2``; returns (p, covariance, converged).

    Gauss-Newton steps with multiplicative damping of the normal equations
    (increased until a step lowers the cost).  The covariance is
    ``s^2 (J^T J)^-1`` with the reduced chi-square ``s^2``.
    """
    p = np.array(p0, dtype=float)
    r = residual(p)
    cost = float(r @ r)
    lam = 1e-4
    converged = False
    for _ in range(max_iter):
        jac = jacobian(p)
        grad = jac.T @ r
        hess = jac.T @ jac
        if np.max(np.abs(grad)) < 1e-14 * (1.0 + cost):
            converged = True
            break
        stepped = False
        for _ in range(40):
            damped = hess + lam * np.diag(np.clip(np.diag(hess), 1e-30, None))
            try:
                step = np.linalg.solve(damped, -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            p_new = p + step
            r_new = residual(p_new)
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                improvement = cost - cost_new
                p, r, cost = p_new, r_new, cost_new
                lam = max(lam * 0.3, 1e-12)
                stepped = True
                if improvement <= 1e-14 * max(cost, 1e-300) or np.all(
                    np.abs(step) <= 1e-12 * (1.0 + np.abs(p))
                ):
                    converged = True
                break
            lam *= 10.0
        if not stepped or converged:
            converged = converged or stepped
            break

    jac = jacobian(p)
    dof = max(r.size - p.size, 1)
    s2 = float(r @ r) / dof
    try:
        cov = s2 * np.linalg.inv(jac.T @ jac)
    except np.linalg.LinAlgError:
        cov = np.full((p.size, p.size), np.nan)
    return p, cov, converged


def _numeric_jacobian(residual: Callable[[np.ndarray], np.ndarray], p: np.ndarray) -> np.ndarray:
    r0 = residual(p)
    jac = np.empty((r0.size, p.size))
    for k in range(p.size):
        h = 1e-7 * max(1.0, abs(p[k]))
        dp = p.copy()
        dp[k] += h
        jac[:, k] = (residual(dp) - r0) / h
    return jac


# ---------------------------------------------------------------------------
# Notch resonator transmission
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NotchFitResult:
    """Notch resonance parameters; Q_c is the coupling magnitude |Q_c|."""

    f0: float
    q_loaded: float
    q_internal: float
    q_coupling: float
    phi: float
    f0_stderr: float = 0.0
    q_loaded_stderr: float = 0.0
    q_internal_stderr: float = 0.0
    q_coupling_stderr: float = 0.0
    phi_stderr: float = 0.0
    converged: bool = True
    residual_norm: float = 0.0
    diagnostics: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        for name in ("f0", "q_loaded", "q_internal", "q_coupling"):
            if getattr(self, name) <= 0:
                raise InputError(f"NotchFitResult: {name} must be positive, got {getattr(self, name)}")
        lhs = 1.0 / self.q_loaded
        rhs = 1.0 / self.q_internal + math.cos(self.phi) / self.q_coupling
        if abs(lhs - rhs) > 1e-6 * abs(lhs):
            raise InputError(
                "NotchFitResult: 1/q_loaded must equal 1/q_internal + cos(phi)/q_coupling"
            )


def notch_result(f0: float, q_internal: float, q_coupling: float, phi: float = 0.0) -> NotchFitResult:
    """Consistent NotchFitResult from internal/coupling quality factors."""
    inv_ql = 1.0 / q_internal + math.cos(phi) / q_coupling
    if inv_ql <= 0:
        raise InputError("notch_result: parameters give a non-positive loaded Q")
    return NotchFitResult(f0=f0, q_loaded=1.0 / inv_ql, q_internal=q_internal, q_coupling=q_coupling, phi=phi)


def notch_s21(f, result: NotchFitResult) -> np.ndarray:
    """Complex transmission of the notch model at frequencies ``f`` (GHz)."""
    f = np.asarray(f, dtype=float)
    return _notch_model(f, result.f0, result.q_loaded, result.q_coupling, result.phi)


def _notch_model(f: np.ndarray, f0: float, ql: float, qc: float, phi: float) -> np.ndarray:
    denom = 1.0 + 2j * ql * (f - f0) / f0
    return 1.0 - (ql / qc) * np.exp(1j * phi) / denom


def _fit_circle(z: np.ndarray) -> tuple[complex, float]:
    # Algebraic (Kasa) circle fit: x^2 + y^2 + a*x + b*y + c = 0.
    x, y = z.real, z.imag
    design = np.column_stack([x, y, np.ones_like(x)])
    rhs = -(x**2 + y**2)
    (a, b, c), *_ = np.linalg.lstsq(design, rhs, rcond=None)
    center = complex(-a / 2.0, -b / 2.0)
    radius = math.sqrt(max(a * a / 4.0 + b * b / 4.0 - c, 1e-30))
    return center, radius


def fit_notch(freqs, s21) -> NotchFitResult:
    """Fit the notch transmission model to a complex S21 sweep.

    Parameters
    ----------
    freqs : array_like
        Sweep frequencies in GHz, at least 50 points, ideally spanning five
        or more linewidths.
    s21 : array_like of complex
        Measured transmission at each frequency.

    Initial estimates come from an algebraic circle fit (resonance-circle
    diameter gives Q_l/|Q_c|) and the phase slope of the centered data
    (gives Q_l); a damped Gauss-Newton refinement follows.  Raises
    :class:`FitError` when no significant resonance is present, the resonance
    lies outside the sweep window, or the refinement does not converge.
    """
    f = np.asarray(freqs, dtype=float)
    z = np.asarray(s21, dtype=complex)
    if f.ndim != 1 or f.shape != z.shape:
        raise InputError("fit_notch: freqs and s21 must be matching 1-D arrays")
    if f.size < 50:
        raise InputError(f"fit_notch: need at least 50 sweep points, got {f.size}")
    if np.any(np.diff(f) <= 0):
        raise InputError("fit_notch: frequencies must be strictly increasing")

    center, radius = _fit_circle(z)
    i0 = int(np.argmin(np.abs(z)))
    f0_est = float(f[i0])
    diameter = min(max(2.0 * radius, 1e-6), 2.0)
    phi_est = float(np.angle(1.0 - z[i0]))

    # Phase slope of the centered data around resonance: dtheta/df = -4 Q_l / f0.
    window = max(3, f.size // 20)
    sl = slice(max(i0 - window, 0), min(i0 + window + 1, f.size))
    theta = np.unwrap(np.angle(z[sl] - center))
    slope = np.polyfit(f[sl], theta, 1)[0]
    ql_est = abs(slope) * f0_est / 4.0
    span = float(f[-1] - f[0])
    ql_floor = f0_est / (10.0 * span) if span > 0 else 1.0
    ql_est = max(ql_est, ql_floor)
    qc_est = ql_est / diameter

    def unpack(p: np.ndarray) -> tuple[float, float, float, float]:
        # np.exp overflows to inf; non-finite trial steps are then rejected
        # by the Gauss-Newton damping instead of raising.
        with np.errstate(over="ignore"):
            return p[0], float(np.exp(p[1])), float(np.exp(p[2])), p[3]

    def residual(p: np.ndarray) -> np.ndarray:
        f0, ql, qc, phi = unpack(p)
        with np.errstate(all="ignore"):
            diff = _notch_model(f, f0, ql, qc, phi) - z
        return np.concatenate([diff.real, diff.imag])

    def jacobian(p: np.ndarray) -> np.ndarray:
        f0, ql, qc, phi = unpack(p)
        denom = 1.0 + 2j * ql * (f - f0) / f0
        base = (ql / qc) * np.exp(1j * phi) / denom
        d_f0 = -base / denom * (2j * ql * f / f0**2)
        d_lnql = -base / denom
        d_lnqc = base
        d_phi = -1j * base
        cols = [d_f0, d_lnql, d_lnqc, d_phi]
        return np.column_stack([np.concatenate([c.real, c.imag]) for c in cols])

    p0 = np.array([f0_est, math.log(ql_est), math.log(qc_est), phi_est])
    p, cov, converged = _damped_gauss_newton(residual, jacobian, p0)
    f0, ql, qc, phi = unpack(p)
    phi = math.remainder(phi, 2.0 * math.pi)

    resid = residual(p)
    resid_rms = float(np.sqrt(np.mean(resid**2)))
    if not (f.min() <= f0 <= f.max()):
        raise FitError(f"fit_notch: fitted resonance {f0:.6g} GHz outside the sweep window")
    if ql / qc < 5.0 * resid_rms:
        raise FitError(
            f"fit_notch: no significant resonance (fitted dip depth {ql / qc:.3g} "
            f"below 5x residual level {resid_rms:.3g})"
        )
    pitch = float(np.median(np.diff(f)))
    if f0 / ql < 2.0 * pitch:
        raise FitError(
            f"fit_notch: fitted linewidth {f0 / ql:.3g} GHz narrower than twice the "
            f"sweep pitch {pitch:.3g} GHz (unresolved, likely no resonance)"
        )

    inv_qi = 1.0 / ql - math.cos(phi) / qc
    if inv_qi <= 0:
        raise FitError("fit_notch: unphysical result, 1/q_internal <= 0")
    qi = 1.0 / inv_qi

    stderr = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    f0_err = float(stderr[0])
    ql_err = float(ql * stderr[1])
    qc_err = float(qc * stderr[2])
    phi_err = float(stderr[3])
    # Propagate to 1/qi = 1/ql - cos(phi)/qc through the full covariance.
    grad = np.array(
        [0.0, (-1.0 / ql), (math.cos(phi) / qc), (math.sin(phi) / qc)]
    )  # d(1/qi)/d[f0, ln ql, ln qc, phi]
    var_inv_qi = float(grad @ cov @ grad)
    qi_err = qi**2 * math.sqrt(max(var_inv_qi, 0.0))

    diagnostics: list[str] = []
    linewidths = span / (f0 / ql)
    if linewidths < 5.0:
        diagnostics.append(f"sweep spans only {linewidths:.2f} linewidths (recommend >= 5)")
    tails = np.concatenate([z[: max(f.size // 10, 2)], z[-max(f.size // 10, 2):]])
    noise_est = float(np.std(np.diff(tails)) / math.sqrt(2.0))
    if noise_est > 0 and resid_rms > 10.0 * noise_est:
        diagnostics.append(
            f"residual rms {resid_rms:.3g} exceeds 10x the off-resonance noise estimate {noise_est:.3g}"
        )

    return NotchFitResult(
        f0=f0,
        q_loaded=ql,
        q_internal=qi,
        q_coupling=qc,
        phi=phi,
        f0_stderr=f0_err,
        q_loaded_stderr=ql_err,
        q_internal_stderr=qi_err,
        q_coupling_stderr=qc_err,
        phi_stderr=phi_err,
        converged=converged,
        residual_norm=float(np.linalg.norm(resid)),
        diagnostics=tuple(diagnostics),
    )


def photon_number(power_dbm: float, result: NotchFitResult) -> float:
    """Average resonator photon number at the given feedline power (dBm)."""
    p_watt = 1e-3 * 10.0 ** (power_dbm / 10.0)
    omega = 2.0 * math.pi * result.f0 * 1e9
    return 2.0 * p_watt * result.q_loaded**2 / (result.q_coupling * _HBAR * omega**2)


# ---------------------------------------------------------------------------
# TLS power-dependent loss
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TlsFitResult:
    """Saturable-defect loss parameters: low-power loss, critical photon
    number, saturation exponent and high-power quality factor."""

    f_delta0: float
    n_c: float
    beta: float
    q_hp: float
    f_delta0_stderr: float = 0.0
    n_c_stderr: float = 0.0
    beta_stderr: float = 0.0
    q_hp_stderr: float = 0.0
    converged: bool = True
    residual_norm: float = 0.0

    def __post_init__(self) -> None:
        for name in ("f_delta0", "n_c", "beta", "q_hp"):
            if getattr(self, name) <= 0:
                raise InputError(f"TlsFitResult: {name} must be positive, got {getattr(self, name)}")


def tls_loss(n_photon, result: TlsFitResult) -> np.ndarray:
    """Loss tangent 1/Q_i at photon number ``n_photon`` (scalar or array)."""
    n = np.asarray(n_photon, dtype=float)
    if np.any(n < 0):
        raise InputError("tls_loss: photon number must be >= 0")
    return result.f_delta0 / np.sqrt(1.0 + (n / result.n_c) ** result.beta) + 1.0 / result.q_hp


def fit_tls(n_photon, inv_qi) -> TlsFitResult:
    """Fit the saturable-loss model to (photon number, 1/Q_i) data.

    All four parameters are positive; the fit runs in log-parameter space with
    the shared damped Gauss-Newton engine.
    """
    n = np.asarray(n_photon, dtype=float)
    y = np.asarray(inv_qi, dtype=float)
    if n.ndim != 1 or n.shape != y.shape:
        raise InputError("fit_tls: n_photon and inv_qi must be matching 1-D arrays")
    if n.size < 6:
        raise InputError(f"fit_tls: need at least 6 points, got {n.size}")
    if np.any(n <= 0) or np.any(y <= 0):
        raise InputError("fit_tls: photon numbers and losses must be positive")

    y_lo = float(np.max(y))
    y_hi = float(np.min(y))
    fd0 = max(y_lo - y_hi, 0.1 * y_lo)
    qhp = 1.0 / y_hi
    half = y_hi + 0.5 * (y_lo - y_hi)
    nc = float(n[int(np.argmin(np.abs(y - half)))])
    nc = min(max(nc, float(n.min())), float(n.max()))
    p0 = np.log(np.array([fd0, nc, 1.0, qhp]))

    # Relative residuals: the loss spans orders of magnitude across power.
    def residual(p: np.ndarray) -> np.ndarray:
        fd0, nc, beta, qhp = np.exp(p)
        model = fd0 / np.sqrt(1.0 + (n / nc) ** beta) + 1.0 / qhp
        return (model - y) / y

    def jacobian(p: np.ndarray) -> np.ndarray:
        return _numeric_jacobian(residual, p)

    p, cov, converged = _damped_gauss_newton(residual, jacobian, p0)
    if not converged:
        raise FitError("fit_tls: no convergence within the iteration cap")
    fd0, nc, beta, qhp = np.exp(p)
    stderr = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    resid = residual(p)
    return TlsFitResult(
        f_delta0=float(fd0),
        n_c=float(nc),
        beta=float(beta),
        q_hp=float(qhp),
        f_delta0_stderr=float(fd0 * stderr[0]),
        n_c_stderr=float(nc * stderr[1]),
        beta_stderr=float(beta * stderr[2]),
        q_hp_stderr=float(qhp * stderr[3]),
        converged=converged,
        residual_norm=float(np.linalg.norm(resid)),
    )
