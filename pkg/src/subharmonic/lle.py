"""Stationary waves of the Lugiato-Lefever equation and their Bloch spectra.

The LLE  psi_t = -i beta psi_xx - (1 + i alpha) psi + i |psi|^2 psi + F
models the field envelope in a pumped Kerr cavity (alpha: detuning,
|beta| = 1: dispersion sign, F > 0: pump).  Stationary states solve the
profile equation; the local dynamics about a T-periodic state phi splits,
in real coordinates v = (v_r, v_i), into

    v_t = A[phi] v + N[phi](v),     A[phi] = -I + J L[phi],

with J the symplectic rotation and L[phi] the formally self-adjoint
Schroedinger-type factor.  This module constructs constant and patterned
stationary states (Newton on a Fourier collocation), exposes A[phi] and
L[phi] as operator specifications, computes Bloch-operator spectra via
dense mode truncation, and evaluates the three-part diffusive spectral
stability criterion (negative spectrum away from the origin, a -theta xi^2
parabola bound, and a simple translation eigenvalue at zero).
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch, SingularJacobian, TruncationTooSmall
from .grids import (PeriodicFunction, PeriodicGrid, norms_periodic,
                    periodic_transform, inverse_periodic_transform)
from .semigroup import OperatorSpec, PeriodicCoefficient, assemble_bloch_block

#: symplectic rotation J = [[0, -1], [1, 0]]
J_MAT = np.array([[0.0, -1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class LLEParams:
    """Cavity parameters: detuning alpha, dispersion beta, pump F, period T."""

    alpha: float
    beta: float
    F: float
    T: float

    def __post_init__(self):
        if not self.F > 0:
            raise ValueError("pump strength F must be positive")
        if not self.T > 0:
            raise ValueError("period T must be positive")
        if abs(abs(self.beta) - 1.0) > 1e-12:
            warnings.warn(f"|beta| = {abs(self.beta)} != 1: outside the physically "
                          "normalized dispersion values", stacklevel=3)


@dataclass
class PeriodicWave:
    """A T-periodic stationary state phi = (phi_r, phi_i) with its residual."""

    params: LLEParams
    phi: PeriodicFunction
    residual: float
    converged: bool = True
    iterations: int = 0

    @property
    def accepted(self) -> bool:
        scale = max(1.0, norms_periodic(self.phi, 0.0).l2)
        return self.converged and self.residual <= 1e-10 * scale


@dataclass
class StabilityVerdict:
    """Outcome of the three-part diffusive spectral stability check."""

    cond1_spectrum_margin: float      # max Re over sampled xi != 0
    cond2_theta: float                # sharpest fitted parabola coefficient
    cond2_slack_min: float
    cond3_lambda_abs: float           # |eigenvalue nearest 0| at xi = 0
    cond3_alignment: float            # |<e0, phi'>| / (|e0| |phi'|)
    cond3_residual: float             # ||A_0 phi'|| / ||phi'||
    cond3_gap: float                  # distance to the second-nearest eigenvalue
    verdict: str                      # "stable" | "unstable" | "inconclusive"
    xi_values: np.ndarray = field(default_factory=lambda: np.empty(0))
    max_real_parts: np.ndarray = field(default_factory=lambda: np.empty(0))


# ---------------------------------------------------------------------------
# the profile equation
# ---------------------------------------------------------------------------

def lle_rhs(params: LLEParams, psi: PeriodicFunction) -> PeriodicFunction:
    """Right-hand side of the LLE at a 2-component real state (psi_r, psi_i).

    Splitting psi into real and imaginary parts turns the equation into
        d/dt psi_r =  beta psi_i'' - psi_r + alpha psi_i - |psi|^2 psi_i + F
        d/dt psi_i = -beta psi_r'' - alpha psi_r - psi_i + |psi|^2 psi_r,
    which vanishes exactly at stationary profiles.
    """
    if psi.dim != 2:
        raise GridMismatch("LLE states carry 2 real components")
    a, b, F = params.alpha, params.beta, params.F
    k2 = psi.grid.frequencies() ** 2
    fhat = periodic_transform(psi)
    second = inverse_periodic_transform(psi.grid, -k2 * fhat).values.real
    pr, pi = psi.values[0].real, psi.values[1].real
    rho = pr ** 2 + pi ** 2
    r1 = b * second[1] - pr + a * pi - rho * pi + F
    r2 = -b * second[0] - a * pr - pi + rho * pr
    return PeriodicFunction(psi.grid, np.stack([r1, r2]).astype(complex))


def profile_residual(params: LLEParams, phi: PeriodicFunction) -> float:
    """L^2(0, T) size of the stationary equation at phi."""
    return norms_periodic(lle_rhs(params, phi), 0.0).l2


def constant_state_wave(params: LLEParams, psi0: complex, M: int = 64) -> PeriodicWave:
    grid = PeriodicGrid(T=params.T, n=1, points_per_period=M)
    vals = np.stack([np.full(M, psi0.real), np.full(M, psi0.imag)]).astype(complex)
    phi = PeriodicFunction(grid, vals)
    return PeriodicWave(params=params, phi=phi,
                        residual=profile_residual(params, phi))


def solve_constant_state(params: LLEParams, M: int = 64) -> list:
    """All spatially constant stationary states.

    With rho = |psi0|^2 the profile equation collapses to the real cubic
    F^2 = rho (1 + (alpha - rho)^2); each positive root gives
    psi0 = F / (1 + i(alpha - rho)).  Roots are located by the companion
    matrix and polished by Newton on the cubic.
    """
    a, F = params.alpha, params.F
    poly = np.array([1.0, -2.0 * a, 1.0 + a * a, -F * F])
    roots = np.roots(poly)
    real = roots[np.abs(roots.imag) < 1e-8 * max(1.0, np.max(np.abs(roots)))].real
    dp = np.polyder(poly)
    polished = []
    for r in real:
        for _ in range(8):
            fr = np.polyval(poly, r)
            dr = np.polyval(dp, r)
            if dr == 0:
                break
            r = r - fr / dr
        if r > 0 and all(abs(r - p) > 1e-8 * max(1.0, r) for p in polished):
            polished.append(float(r))
    waves = []
    for rho in sorted(polished):
        psi0 = F / (1.0 + 1j * (a - rho))
        waves.append(constant_state_wave(params, psi0, M))
    return waves


def constant_state_count(alpha: float, F: float) -> int:
    """Number of constant states predicted by the cubic discriminant.

    The cubic rho^3 - 2 alpha rho^2 + (1 + alpha^2) rho - F^2 has either one
    or three distinct real roots; the positive ones (all three exactly when
    the discriminant is positive and alpha > 0) are the admissible
    intensities.  Degenerate (zero-discriminant) parameters are measure zero
    and not handled.
    """
    b, c, d = -2.0 * alpha, 1.0 + alpha ** 2, -F ** 2
    disc = (18.0 * b * c * d - 4.0 * b ** 3 * d + b * b * c * c
            - 4.0 * c ** 3 - 27.0 * d * d)
    return 3 if (disc > 0 and alpha > 0) else 1


def _second_derivative_matrix(M: int, T: float) -> np.ndarray:
    k2 = (2.0 * np.pi * np.fft.fftfreq(M, d=T / M)) ** 2
    return np.fft.ifft(-k2[:, None] * np.fft.fft(np.eye(M), axis=0), axis=0).real


def solve_profile(params: LLEParams, initial_guess, M: int | None = None,
                  max_iter: int = 50, tol: float = 1e-12) -> PeriodicWave:
    """Newton iteration on the Fourier-collocation profile equations.

    ``initial_guess`` may be a PeriodicWave, a 2-component PeriodicFunction,
    or a complex scalar (taken as a constant state seed).  Steps are solved
    by least squares, which quotients out the translation kernel present at
    every nonconstant solution, and damped by residual backtracking.  On
    failure to reach the tolerance the best iterate is returned flagged
    (``converged = False``) with its final residual.
    """
    if isinstance(initial_guess, PeriodicWave):
        phi = initial_guess.phi
    elif isinstance(initial_guess, PeriodicFunction):
        phi = initial_guess
    else:
        if M is None:
            raise ValueError("M is required for a scalar constant seed")
        phi = constant_state_wave(params, complex(initial_guess), M).phi
    grid = phi.grid
    M = grid.points_per_period
    if grid.n != 1:
        raise GridMismatch("profiles are solved on a single period (n = 1)")
    a, b = params.alpha, params.beta
    D2 = _second_derivative_matrix(M, params.T)
    I = np.eye(M)
    u = phi.values.real.copy()                      # (2, M)

    def residual_vec(u):
        state = PeriodicFunction(grid, u.astype(complex))
        return lle_rhs(params, state).values.real

    def l2(vec):
        return math.sqrt(float(grid.dx * (vec ** 2).sum()))

    res = residual_vec(u)
    best_u, best_res = u.copy(), l2(res)
    scale = max(1.0, l2(u))
    it = 0
    for it in range(1, max_iter + 1):
        if best_res <= tol * scale:
            break
        pr, pi = u
        L12 = 2.0 * pr * pi
        jac = np.block([
            [-I - np.diag(L12), b * D2 + a * I - np.diag(pr ** 2 + 3 * pi ** 2)],
            [-b * D2 - a * I + np.diag(3 * pr ** 2 + pi ** 2), -I + np.diag(L12)],
        ])
        step, _, rank, _ = np.linalg.lstsq(jac, -res.reshape(-1), rcond=1e-10)
        if rank < 2 * M - 1:
            raise SingularJacobian(
                f"Newton system rank {rank} < {2 * M - 1}: beyond the translation "
                "kernel (likely at a bifurcation point)")
        lam, improved = 1.0, False
        for _ in range(12):
            trial = u + lam * step.reshape(2, M)
            trial_res = residual_vec(trial)
            if l2(trial_res) < best_res * (1.0 - 1e-4 * lam) + 1e-300:
                u, res = trial, trial_res
                best_u, best_res = u.copy(), l2(res)
                scale = max(1.0, l2(u))
                improved = True
                break
            lam *= 0.5
        if not improved:
            break
    phi_out = PeriodicFunction(grid, best_u.astype(complex))
    return PeriodicWave(params=params, phi=phi_out, residual=best_res,
                        converged=best_res <= tol * scale * 10, iterations=it)


def wave_derivative(wave: PeriodicWave) -> PeriodicFunction:
    """Spectral derivative phi' of the profile (the translation direction)."""
    fhat = periodic_transform(wave.phi)
    k = wave.phi.grid.frequencies()
    dvals = inverse_periodic_transform(wave.phi.grid, 1j * k * fhat).values.real
    return PeriodicFunction(wave.phi.grid, dvals.astype(complex))


# ---------------------------------------------------------------------------
# linearization
# ---------------------------------------------------------------------------

def _potential_samples(wave: PeriodicWave) -> np.ndarray:
    """The quadratic-interaction matrix P(x) on the [0, T) coefficient grid."""
    M = wave.phi.grid.points_per_period
    roll = np.roll(wave.phi.values.real, -(M // 2), axis=-1)   # window -> [0, T)
    pr, pi = roll
    P = np.empty((M, 2, 2))
    P[:, 0, 0] = 3 * pr ** 2 + pi ** 2
    P[:, 0, 1] = 2 * pr * pi
    P[:, 1, 0] = 2 * pr * pi
    P[:, 1, 1] = pr ** 2 + 3 * pi ** 2
    return P


def linearized_operator(wave: PeriodicWave) -> OperatorSpec:
    """A[phi] = -I + J L[phi] as a symbol plus T-periodic coefficient.

    The constant part contributes the symbol -I - alpha J - beta J (d/dx)^2;
    the state-dependent part multiplies by J P(x) with P the quadratic
    interaction matrix of the profile.
    """
    a, b = wave.params.alpha, wave.params.beta
    I2 = np.eye(2)
    symbol = np.stack([-I2 - a * J_MAT, np.zeros((2, 2)), -b * J_MAT]).astype(complex)
    V = np.einsum("ab,mbc->mac", J_MAT, _potential_samples(wave))
    coeff = PeriodicCoefficient(T=wave.params.T, values=V.astype(complex))
    return OperatorSpec(dim=2, symbol=symbol, coeff=coeff)


def selfadjoint_factor(wave: PeriodicWave) -> OperatorSpec:
    """L[phi] = (-beta (d/dx)^2 - alpha) I + P(x): the symmetric factor."""
    a, b = wave.params.alpha, wave.params.beta
    I2 = np.eye(2)
    symbol = np.stack([-a * I2, np.zeros((2, 2)), -b * I2]).astype(complex)
    coeff = PeriodicCoefficient(T=wave.params.T,
                                values=_potential_samples(wave).astype(complex))
    return OperatorSpec(dim=2, symbol=symbol, coeff=coeff)


def evaluate_nonlinearity(wave: PeriodicWave, v: PeriodicFunction) -> PeriodicFunction:
    """N[phi](v): the quadratic-in-v interaction with phi plus the cubic term."""
    if v.dim != 2:
        raise GridMismatch("perturbations carry 2 real components")
    if v.grid != wave.phi.grid:
        raise GridMismatch("perturbation must live on the wave's grid")
    vr, vi = v.values[0].real, v.values[1].real
    pr, pi = wave.phi.values.real
    q1 = (3 * vr ** 2 + vi ** 2) * pr + 2 * vr * vi * pi
    q2 = 2 * vr * vi * pr + (vr ** 2 + 3 * vi ** 2) * pi
    c1 = (vr ** 2 + vi ** 2) * vr
    c2 = (vr ** 2 + vi ** 2) * vi
    out = np.stack([-(q2 + c2), q1 + c1])          # J applied to (q + c)
    return PeriodicFunction(v.grid, out.astype(complex))


# ---------------------------------------------------------------------------
# spectra and the stability criterion
# ---------------------------------------------------------------------------

def bloch_spectrum(wave: PeriodicWave, xi: float, L: int = 32) -> np.ndarray:
    """Eigenvalues of the truncated Bloch block of A[phi] at frequency xi
    (dense mode-truncation eigensolve).

    Sorted by descending real part with ties broken by ascending |Im|, so
    the reported head of the list consists of spectrally interior
    eigenvalues rather than truncation-edge artifacts.
    """
    if L < 1:
        raise TruncationTooSmall("spectral truncation requires L >= 1")
    block = assemble_bloch_block(linearized_operator(wave), xi, L=L)
    eigs = np.linalg.eigvals(block.matrix)
    order = np.lexsort((np.abs(eigs.imag), -np.round(eigs.real, 9)))
    return eigs[order]


def _phi_prime_coefficients(wave: PeriodicWave, modes: np.ndarray) -> np.ndarray:
    """Fourier coefficients of phi' on the block's mode layout (mode-major)."""
    dphi = wave_derivative(wave)
    fhat = periodic_transform(dphi) / wave.params.T      # series coefficients
    M = wave.phi.grid.points_per_period
    avail = np.fft.fftfreq(M, d=1.0 / M).astype(int)
    lookup = {int(m): i for i, m in enumerate(avail)}
    vec = np.zeros((len(modes), 2), dtype=complex)
    for i, l in enumerate(modes):
        if int(l) in lookup:
            vec[i] = fhat[:, lookup[int(l)]]
    return vec.reshape(-1)


def _max_workers() -> int:
    raw = os.environ.get("BLOCH_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def stability_check(wave: PeriodicWave, xi_samples: int = 129, L: int = 32,
                    theta_min: float = 1e-6, zero_tol: float = 1e-6,
                    align_tol: float = 1e-3, gap_min: float = 1e-4) -> StabilityVerdict:
    """Evaluate the three-part diffusive spectral stability criterion.

    xi is sampled on a uniform symmetric grid of [-pi/T, pi/T) containing 0.
    Condition 1 requires max Re of every block spectrum away from the origin
    to be negative; condition 2 extracts the sharpest theta with
    max Re sigma(A_xi) <= -theta xi^2 over sampled xi (excluding
    |xi| < pi/(64 T), where the xi^2 division amplifies solver noise; the
    excluded neighborhood is covered by condition 3); condition 3 locates
    the eigenvalue of the xi = 0 block nearest zero and tests its size,
    its eigenvector's alignment with phi', and its isolation gap.
    """
    T = wave.params.T
    A = linearized_operator(wave)
    half = np.pi / T
    xis = (2.0 * half) * (np.arange(xi_samples) - xi_samples // 2) / xi_samples

    def block_eigs(xi):
        block = assemble_bloch_block(A, xi, L=L)
        return np.linalg.eig(block.matrix)

    workers = _max_workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            eig_list = list(pool.map(block_eigs, xis))
    else:
        eig_list = [block_eigs(xi) for xi in xis]

    max_re = np.array([float(np.max(w.real)) for w, _ in eig_list])

    # condition 3 at xi = 0
    zero_idx = int(np.argmin(np.abs(xis)))
    w0, v0 = eig_list[zero_idx]
    order = np.argsort(np.abs(w0))
    lam0 = w0[order[0]]
    gap = float(np.abs(w0[order[1]] - lam0)) if len(order) > 1 else math.inf
    block0 = assemble_bloch_block(A, 0.0, L=L)
    phip = _phi_prime_coefficients(wave, block0.modes)
    phip_norm = float(np.linalg.norm(phip))
    if phip_norm > 1e-14:
        e0 = v0[:, order[0]]
        alignment = float(abs(np.vdot(e0, phip)) / (np.linalg.norm(e0) * phip_norm))
        residual = float(np.linalg.norm(block0.matrix @ phip) / phip_norm)
    else:
        alignment, residual = 0.0, math.inf

    # condition 1: spectrum away from the origin eigenvalue
    margins = []
    for i, (w, _) in enumerate(eig_list):
        if i == zero_idx:
            rest = np.delete(w, np.argmin(np.abs(w)))
            if len(rest):
                margins.append(float(np.max(rest.real)))
        else:
            margins.append(float(np.max(w.real)))
    cond1_margin = max(margins) if margins else -math.inf

    # condition 2: the parabola coefficient on |xi| >= pi/(64 T)
    cut = np.pi / (64.0 * T)
    sel = np.abs(xis) >= cut
    if np.any(sel):
        ratios = -max_re[sel] / xis[sel] ** 2
        theta = float(np.min(ratios))
    else:
        theta = -math.inf
    slack_min = float(np.min(-max_re[sel] - theta * xis[sel] ** 2)) if np.any(sel) else -math.inf

    cond3_ok = (abs(lam0) <= zero_tol and alignment >= 1.0 - align_tol
                and gap >= gap_min)
    if cond1_margin > 1e-10:
        verdict = "unstable"
    elif cond1_margin < 0 and theta >= theta_min and slack_min >= -1e-12 and cond3_ok:
        verdict = "stable"
    else:
        verdict = "inconclusive"
    return StabilityVerdict(
        cond1_spectrum_margin=cond1_margin, cond2_theta=theta,
        cond2_slack_min=slack_min, cond3_lambda_abs=float(abs(lam0)),
        cond3_alignment=alignment, cond3_residual=residual, cond3_gap=gap,
        verdict=verdict, xi_values=xis, max_real_parts=max_re)


def constant_state_growth_rate(params: LLEParams, rho: float, k) -> np.ndarray:
    """Closed-form dispersion relation about a constant state of intensity rho:
    lambda_+(k) = -1 + sqrt(rho^2 - (beta k^2 - alpha + 2 rho)^2)."""
    k = np.asarray(k, dtype=float)
    inner = rho ** 2 - (params.beta * k ** 2 - params.alpha + 2.0 * rho) ** 2
    return -1.0 + np.sqrt(inner.astype(complex)).real


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def wave_to_json(wave: PeriodicWave) -> dict:
    from .grids import function_to_json
    return {"alpha": wave.params.alpha, "beta": wave.params.beta,
            "F": wave.params.F, "T": wave.params.T,
            "residual": wave.residual, "converged": wave.converged,
            "phi": function_to_json(wave.phi)}


def wave_from_json(doc: dict) -> PeriodicWave:
    from .grids import function_from_json
    params = LLEParams(alpha=float(doc["alpha"]), beta=float(doc["beta"]),
                       F=float(doc["F"]), T=float(doc["T"]))
    return PeriodicWave(params=params, phi=function_from_json(doc["phi"]),
                        residual=float(doc["residual"]),
                        converged=bool(doc["converged"]))


def verdict_to_json(v: StabilityVerdict) -> dict:
    return {"cond1_spectrum_margin": v.cond1_spectrum_margin,
            "cond2_theta": v.cond2_theta, "cond2_slack_min": v.cond2_slack_min,
            "cond3_lambda_abs": v.cond3_lambda_abs,
            "cond3_alignment": v.cond3_alignment,
            "cond3_residual": v.cond3_residual, "cond3_gap": v.cond3_gap,
            "verdict": v.verdict}
