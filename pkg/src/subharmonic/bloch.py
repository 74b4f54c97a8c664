"""Bloch transforms on the torus and on the line, with checkable identities.

A function on an nT-periodic window decomposes into n slices indexed by
the discrete frequencies Omega_n = {xi in [-pi/T, pi/T) : exp(i xi nT) = 1};
a localized function decomposes into a continuum of slices indexed by the
Brillouin interval [-pi/T, pi/T).  Both transforms follow

    B(f)(xi, x) = sum_l exp(i 2 pi l x / T) fhat(xi + 2 pi l / T),

with fhat the windowed (respectively whole-line) transform of f, and both
reconstruct through (1/2pi) sum-or-integral of exp(i xi x) B(f)(xi, x).
The discrete sum over Omega_n is a Riemann-sum analogue of the line
integral: Omega_n coincides with the n-node midpoint rule for odd n and
with the n-node periodic-trapezoid rule for even n.

Normalization note: with the unnormalized transform used here the energy
identity carries a factor 1/(2 pi T), i.e.

    ||g||^2_{L^2(0,nT)}  = (1/(2 pi T)) sum_{xi in Omega_n} ||B_T(g)(xi,.)||^2_{L^2(0,T)} dxi,

and likewise with an integral over the Brillouin interval on the line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (BoundExceeded, DomainTooSmall, GridMismatch,
                     HypothesisViolation, MalformedFamily)
from .grids import (ALIGN_RTOL, LineFunction, LineGrid, PeriodicFunction,
                    PeriodicGrid, line_transform, norms_line,
                    periodic_transform, zero_extend)


def bloch_frequencies(n: int, T: float) -> np.ndarray:
    """The n discrete frequencies Omega_n, ascending, inside [-pi/T, pi/T)."""
    if n % 2 == 0:
        k = np.arange(-(n // 2), n // 2)
    else:
        k = np.arange(-(n - 1) // 2, (n - 1) // 2 + 1)
    return 2.0 * np.pi * k / (n * T)


def _omega_indices(n: int) -> np.ndarray:
    """Integer labels kappa with Omega_n = 2 pi kappa / (nT)."""
    if n % 2 == 0:
        return np.arange(-(n // 2), n // 2)
    return np.arange(-(n - 1) // 2, (n - 1) // 2 + 1)


def _torus_mode_table(n: int, M: int) -> np.ndarray:
    """Per-frequency slice modes: row kappa holds the M integers l with
    kappa + l*n inside the full torus mode window [-nM/2, nM/2)."""
    H = n * M // 2
    kappas = _omega_indices(n)
    l0 = -((H + kappas) // n)          # ceil((-H - kappa) / n)
    table = l0[:, None] + np.arange(M)[None, :]
    return table


@dataclass
class BlochFamily:
    """A map xi -> T-periodic slice with M samples over [0, T).

    ``slices`` has shape (n_xi, dim, M).  Torus families carry the window
    count ``n`` (their xi grid is exactly Omega_n with weight 2 pi/(nT));
    line families carry quadrature ``weights`` and the ``rule`` name.
    ``l_modes`` records the retained mode window of a line family and
    ``tail_estimate`` an a-priori bound on the discarded l-sum tail.
    """

    T: float
    xi_values: np.ndarray
    slices: np.ndarray
    kind: str                          # "torus" | "line"
    n: int | None = None
    weights: np.ndarray | None = None
    rule: str | None = None
    l_modes: np.ndarray | None = None
    tail_estimate: float | None = None
    source_grid: object = None

    @property
    def dim(self) -> int:
        return self.slices.shape[1]

    @property
    def M(self) -> int:
        return self.slices.shape[2]

    def slice_norms(self) -> np.ndarray:
        """L^2(0, T) norm of each slice."""
        dxt = self.T / self.M
        return np.sqrt(dxt * (np.abs(self.slices) ** 2).sum(axis=(1, 2)))


@dataclass(frozen=True)
class BlochBound:
    """Ingredients of the a-priori sup bound for a line Bloch transform:
    sup |B(f)| <= l_infty_fhat + hs1_norm * tail_constant."""

    sup_bound: float
    l_infty_fhat: float
    hs1_norm: float
    tail_constant: float


@dataclass
class BlochAgreement:
    """Per-frequency L^2(0,T) discrepancy between the torus transform of a
    periodic function and the line transform of its zero extension."""

    per_xi: np.ndarray
    max_abs: float = field(init=False)
    max_rel: float = field(init=False)
    scale: float = 0.0

    def __post_init__(self):
        self.max_abs = float(np.max(self.per_xi)) if len(self.per_xi) else 0.0
        self.max_rel = self.max_abs / self.scale if self.scale > 0 else self.max_abs


# ---------------------------------------------------------------------------
# torus transform
# ---------------------------------------------------------------------------

def bloch_torus(g: PeriodicFunction) -> BlochFamily:
    """Decompose an nT-periodic function into its n Bloch slices.

    Exact for every input: the nM torus modes partition into n residue
    classes, one per frequency in Omega_n, and each slice is synthesized
    from its own class.
    """
    grid = g.grid
    n, M, N = grid.n, grid.points_per_period, grid.n_points
    fhat = periodic_transform(g)                       # (dim, N), FFT order
    table = _torus_mode_table(n, M)                    # (n, M) slice modes l
    kappas = _omega_indices(n)
    ms = kappas[:, None] + table * n                   # torus modes m = kappa + l n
    coeff = fhat[:, ms % N]                            # (dim, n, M)
    # place coefficient of mode l at DFT bin l mod M, then synthesize on [0, T)
    bins = table % M
    spectra = np.zeros((g.dim, n, M), dtype=complex)
    np.put_along_axis(spectra, np.broadcast_to(bins[None], spectra.shape),
                      coeff, axis=-1)
    slices = np.fft.ifft(spectra, axis=-1) * M         # (dim, n, M)
    return BlochFamily(T=grid.T, xi_values=bloch_frequencies(n, grid.T),
                       slices=np.swapaxes(slices, 0, 1), kind="torus", n=n,
                       source_grid=grid)


def torus_slice_coefficients(B: BlochFamily):
    """Mode table and per-slice coefficients fhat(xi + 2 pi l/T) of a torus
    family; inverse of the synthesis step of :func:`bloch_torus`."""
    if B.kind != "torus":
        raise MalformedFamily("expected a torus family")
    table = _torus_mode_table(B.n, B.M)
    spectra = np.fft.fft(B.slices, axis=-1) / B.M      # (n, dim, M) at bins
    coeff = np.take_along_axis(spectra, (table % B.M)[:, None, :], axis=-1)
    return table, coeff


def synthesize_torus_family(B: BlochFamily, coeff: np.ndarray) -> BlochFamily:
    """Rebuild a torus family from per-slice coefficients on its mode table."""
    table = _torus_mode_table(B.n, B.M)
    bins = (table % B.M)[:, None, :]
    spectra = np.zeros_like(B.slices)
    np.put_along_axis(spectra, np.broadcast_to(bins, spectra.shape), coeff, axis=-1)
    slices = np.fft.ifft(spectra, axis=-1) * B.M
    return BlochFamily(T=B.T, xi_values=B.xi_values, slices=slices, kind="torus",
                       n=B.n, source_grid=B.source_grid)


def inverse_bloch_torus(B: BlochFamily) -> PeriodicFunction:
    """Reconstruct g(x) = (1/2pi) sum_{xi in Omega_n} e^{i xi x} B(xi, x) dxi."""
    if B.kind != "torus" or B.n is None:
        raise MalformedFamily("expected a torus family")
    omega = bloch_frequencies(B.n, B.T)
    if B.xi_values.shape != omega.shape or not np.allclose(
            B.xi_values, omega, rtol=0, atol=ALIGN_RTOL / B.T):
        raise MalformedFamily("xi grid of a torus family must be Omega_n")
    grid = PeriodicGrid(T=B.T, n=B.n, points_per_period=B.M)
    N = grid.n_points
    x = grid.points()
    pidx = (np.arange(N) - N // 2) % B.M               # x_j mod T on the slice grid
    dxi = 2.0 * np.pi / grid.period
    gathered = B.slices[:, :, pidx]                    # (n, dim, N)
    phases = np.exp(1j * np.outer(B.xi_values, x))     # (n, N)
    vals = (phases[:, None, :] * gathered).sum(axis=0) * (dxi / (2.0 * np.pi))
    return PeriodicFunction(grid, vals)


# ---------------------------------------------------------------------------
# line transform
# ---------------------------------------------------------------------------

def quadrature_nodes(N_xi: int, T: float, rule: str = "midpoint"):
    """Nodes and weights on the Brillouin interval [-pi/T, pi/T).

    midpoint: cell centers; coincides with Omega_n at N_xi = n for odd n.
    trapezoid: the periodic trapezoid rule (uniform left endpoints, full
        weights); coincides with Omega_n at N_xi = n for even n.
    gauss: Gauss-Legendre on the closed interval.
    """
    a = np.pi / T
    if rule == "midpoint":
        h = 2.0 * a / N_xi
        nodes = -a + (np.arange(N_xi) + 0.5) * h
        weights = np.full(N_xi, h)
    elif rule == "trapezoid":
        h = 2.0 * a / N_xi
        nodes = -a + np.arange(N_xi) * h
        weights = np.full(N_xi, h)
    elif rule == "gauss":
        z, w = np.polynomial.legendre.leggauss(N_xi)
        nodes = a * z
        weights = a * w
    else:
        raise ValueError(f"unknown quadrature rule {rule!r}")
    return nodes, weights


def _line_mode_window(M: int, L: int | None) -> np.ndarray:
    """Retained l-modes for M-sample slices: the representable DFT window,
    optionally intersected with |l| <= L."""
    modes = np.fft.fftfreq(M, d=1.0 / M).astype(int)
    modes = np.sort(modes)
    if L is not None:
        modes = modes[np.abs(modes) <= L]
    return modes


def _odd_power_tail(l_top: int, s: float, T: float) -> float:
    """Upper bound for sum_{l > l_top} ((2l-1) pi / T)^{-s}.

    Midpoint-rule comparison: the summand is convex and decreasing, so the
    sum is at most the integral from l_top + 1/2, which evaluates to
    (pi/T)^{-s} (2 l_top)^{1-s} / (2 (s-1)).
    """
    return (np.pi / T) ** (-s) * (2.0 * l_top) ** (1.0 - s) / (2.0 * (s - 1.0))


def bloch_tail_sum(l_start: int, s: float, T: float) -> float:
    """Upper bound for sum over both signs of |l| >= l_start of
    |(2|l|-1) pi / T|^{-s}; used for reported truncation residuals and for
    the sup bound below."""
    if l_start < 1:
        raise ValueError("l_start must be >= 1")
    ls = np.arange(l_start, 4 * l_start + 64)
    partial = float((((2 * ls - 1) * np.pi / T) ** (-s)).sum())
    return 2.0 * (partial + _odd_power_tail(int(ls[-1]), s, T))


def _slice_count(T: float, dx: float) -> int:
    M = T / dx
    if abs(M - round(M)) > ALIGN_RTOL * M:
        raise GridMismatch(f"T/dx = {M} must be an integer for T-periodic slices")
    return int(round(M))


def bloch_line(f: LineFunction, N_xi: int, rule: str = "midpoint",
               T: float = None, L: int | None = None) -> BlochFamily:
    """Decompose a localized function into Bloch slices on a quadrature grid.

    The l-sum is truncated to the slice-representable window (optionally
    further to |l| <= L); the family records the window and an a-priori
    estimate of the discarded tail.
    """
    if T is None:
        raise ValueError("bloch_line requires the base period T")
    M = _slice_count(T, f.grid.dx)
    modes = _line_mode_window(M, L)
    nodes, weights = quadrature_nodes(N_xi, T, rule)
    x = f.grid.points()
    dx = f.grid.dx
    # fhat(xi + 2 pi l / T) = dx * sum_j exp(-i xi x_j) exp(-2 pi i l x_j / T) f_j
    ring = np.exp(-2j * np.pi * np.outer(modes, x) / T)      # (n_l, N)
    coeff = np.empty((len(nodes), f.dim, len(modes)), dtype=complex)
    for q, xi in enumerate(nodes):
        modulated = np.exp(-1j * xi * x) * f.values          # (dim, N)
        coeff[q] = dx * (ring @ modulated.T).T
    # synthesize slices at y_p = p T / M over [0, T)
    p = np.arange(M)
    synth = np.exp(2j * np.pi * np.outer(modes, p) / M)      # (n_l, M)
    slices = coeff @ synth                                   # (n_xi, dim, M)
    tail = None
    if len(modes):
        l_edge = int(np.min(np.abs([modes.min() - 1, modes.max() + 1])))
        s_tail = 3.0
        tail = bloch_tail_sum(max(l_edge, 1), s_tail, T) * norms_line(f, s_tail + 1.0).hs
    return BlochFamily(T=T, xi_values=nodes, slices=slices, kind="line",
                       weights=weights, rule=rule, l_modes=modes,
                       tail_estimate=tail, source_grid=f.grid)


def line_slice_coefficients(B: BlochFamily) -> np.ndarray:
    """Per-node coefficients on ``B.l_modes`` recovered from the slices."""
    if B.kind != "line" or B.l_modes is None:
        raise MalformedFamily("expected a line family with a recorded mode window")
    spectra = np.fft.fft(B.slices, axis=-1) / B.M
    return spectra[:, :, B.l_modes % B.M]


def synthesize_line_family(B: BlochFamily, coeff: np.ndarray) -> BlochFamily:
    p = np.arange(B.M)
    synth = np.exp(2j * np.pi * np.outer(B.l_modes, p) / B.M)
    slices = coeff @ synth
    return BlochFamily(T=B.T, xi_values=B.xi_values, slices=slices, kind="line",
                       weights=B.weights, rule=B.rule, l_modes=B.l_modes,
                       tail_estimate=B.tail_estimate, source_grid=B.source_grid)


def inverse_bloch_line(B: BlochFamily, grid: LineGrid = None) -> LineFunction:
    """Quadrature reconstruction f(x) = (1/2pi) int e^{i xi x} B(xi, x) dxi."""
    if B.kind != "line" or B.weights is None:
        raise MalformedFamily("expected a line family")
    if grid is None:
        grid = B.source_grid
    if not isinstance(grid, LineGrid):
        raise MalformedFamily("no line grid available for reconstruction")
    if _slice_count(B.T, grid.dx) != B.M:
        raise GridMismatch("reconstruction grid spacing does not match the slices")
    N = grid.n_points
    x = grid.points()
    K = int(round(grid.X / grid.dx))
    pidx = (np.arange(N) - K) % B.M
    gathered = B.slices[:, :, pidx]                          # (n_xi, dim, N)
    phases = (B.weights[:, None] * np.exp(1j * np.outer(B.xi_values, x)))
    vals = (phases[:, None, :] * gathered).sum(axis=0) / (2.0 * np.pi)
    return LineFunction(grid, vals)


# ---------------------------------------------------------------------------
# checkable identities
# ---------------------------------------------------------------------------

def check_blochs_equal(g_n: PeriodicFunction, line_target: LineGrid) -> BlochAgreement:
    """Compare the torus slices of g_n with the line slices of its zero
    extension at every frequency in Omega_n.

    The two sides are computed along independent paths (FFT synthesis vs.
    direct complex sums); the windowed transforms agree sample-for-sample,
    so the discrepancy is pure floating-point noise.
    """
    fam = bloch_torus(g_n)
    gtil = zero_extend(g_n, line_target)
    grid = g_n.grid
    n, M = grid.n, grid.points_per_period
    table = _torus_mode_table(n, M)
    x = line_target.points()
    y = np.arange(M) * grid.dx
    dxt = grid.dx
    per_xi = np.zeros(n)
    for i, xi in enumerate(fam.xi_values):
        freqs = xi + 2.0 * np.pi * table[i] / grid.T
        coeff = line_target.dx * np.exp(-1j * np.outer(freqs, x)) @ gtil.values.T
        slice_line = (np.exp(2j * np.pi * np.outer(y, table[i]) / grid.T) @ coeff).T
        diff = fam.slices[i] - slice_line
        per_xi[i] = math.sqrt(float(dxt * (np.abs(diff) ** 2).sum()))
    scale = float(np.max(fam.slice_norms())) if n else 0.0
    return BlochAgreement(per_xi=per_xi, scale=scale)


def bloch_parseval_torus(g: PeriodicFunction) -> tuple:
    """(energy through the slices, direct ||g||^2); equal up to roundoff."""
    fam = bloch_torus(g)
    dxi = 2.0 * np.pi / g.grid.period
    through = float((fam.slice_norms() ** 2).sum() * dxi / (2.0 * np.pi * g.grid.T))
    from .grids import norms_periodic
    return through, norms_periodic(g, 0.0).l2 ** 2


def bloch_parseval_line(f: LineFunction, N_xi: int, T: float,
                        rule: str = "midpoint", L: int | None = None) -> tuple:
    """(energy through the slices, direct ||f||^2)."""
    fam = bloch_line(f, N_xi, rule, T, L)
    through = float((fam.weights * fam.slice_norms() ** 2).sum() / (2.0 * np.pi * T))
    return through, norms_line(f, 0.0).l2 ** 2


def bloch_sup_bound(f: LineFunction, s: float = 3.0, L_max: int = 64,
                    T: float = None, n_xi: int = 64, n_x: int = 64) -> BlochBound:
    """A-priori sup bound for |B(f)(xi, x)| from the transform's tail series.

    Valid for f in L^1 with finite H^{s+1} norm and s > 2: the l = 0 term is
    bounded by ||fhat||_inf and each |l| >= 1 term by
    |(2|l|-1) pi/T|^{-s} ||f||_{H^{s+1}}.  The bound is evaluated numerically
    (partial tail sum to L_max plus an integral remainder, both sides of the
    window) and checked against |B(f)| sampled on an n_xi x n_x grid.
    """
    if s <= 2:
        raise HypothesisViolation(f"the sup bound requires s > 2, got s = {s}")
    if T is None:
        raise ValueError("bloch_sup_bound requires the base period T")
    if f.dim != 1:
        raise ValueError("the sup bound is defined for scalar functions")
    fhat = line_transform(f)
    l_infty = float(np.max(np.abs(fhat)))
    hs1 = norms_line(f, s + 1.0).hs
    ls = np.arange(1, L_max + 1)
    partial = float((((2 * ls - 1) * np.pi / T) ** (-s)).sum())
    tail_constant = 2.0 * (partial + _odd_power_tail(L_max, s, T))
    sup_bound = l_infty + hs1 * tail_constant
    fam = bloch_line(f, n_xi, "midpoint", T)
    M = fam.M
    take = np.linspace(0, M - 1, min(n_x, M)).astype(int)
    sampled_max = float(np.max(np.abs(fam.slices[:, :, take])))
    if sampled_max > sup_bound * (1.0 + 1e-12) + 1e-300:
        raise BoundExceeded(
            f"sampled sup {sampled_max} exceeds the a-priori bound {sup_bound}")
    return BlochBound(sup_bound=sup_bound, l_infty_fhat=l_infty,
                      hs1_norm=hs1, tail_constant=tail_constant)


@dataclass
class ContinuityReport:
    """xi-integrated squared Bloch discrepancies against their Plancherel
    prediction 2 pi T ||f_k - f||^2."""

    aggregated: np.ndarray
    predicted: np.ndarray

    @property
    def max_relative_mismatch(self) -> float:
        scale = np.maximum(self.predicted, 1e-300)
        return float(np.max(np.abs(self.aggregated - self.predicted) / scale))


def check_bloch_l2_continuity(f_seq, f: LineFunction, T: float = None,
                              N_xi: int = 64, rule: str = "midpoint",
                              L: int | None = None) -> ContinuityReport:
    """Aggregate int ||B(f_k)(xi,.) - B(f)(xi,.)||^2_{L^2(0,T)} dxi per index.

    By Plancherel each aggregate equals 2 pi T ||f_k - f||^2 in the
    continuum; the discrete version must match the directly computed L^2
    difference, which is what the report exposes.
    """
    if T is None:
        raise ValueError("check_bloch_l2_continuity requires the base period T")
    fam = bloch_line(f, N_xi, rule, T, L)
    agg, pred = [], []
    for fk in f_seq:
        if not fk.grid.compatible(f.grid):
            raise GridMismatch("sequence members must share the limit's grid")
        fam_k = bloch_line(fk, N_xi, rule, T, L)
        dxt = T / fam.M
        per_xi = dxt * (np.abs(fam_k.slices - fam.slices) ** 2).sum(axis=(1, 2))
        agg.append(float((fam.weights * per_xi).sum()))
        pred.append(2.0 * np.pi * T * norms_line(fk - f, 0.0).l2 ** 2)
    return ContinuityReport(aggregated=np.array(agg), predicted=np.array(pred))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def family_to_json(B: BlochFamily) -> dict:
    slices = [[[float(z.real), float(z.imag)] for z in sl.reshape(-1)]
              for sl in B.slices]
    doc = {"T": B.T, "kind": B.kind, "xi": [float(v) for v in B.xi_values],
           "dim": B.dim, "M": B.M, "slices": slices}
    if B.kind == "torus":
        doc["n"] = B.n
    else:
        doc["weights"] = [float(w) for w in B.weights]
        doc["rule"] = B.rule
        doc["l_modes"] = [int(l) for l in B.l_modes]
    return doc


def family_from_json(doc: dict) -> BlochFamily:
    dim, M = int(doc["dim"]), int(doc["M"])
    slices = np.array([[complex(re, im) for re, im in sl]
                       for sl in doc["slices"]]).reshape(-1, dim, M)
    kwargs = dict(T=float(doc["T"]), xi_values=np.array(doc["xi"]),
                  slices=slices, kind=doc["kind"])
    if doc["kind"] == "torus":
        kwargs["n"] = int(doc["n"])
    else:
        kwargs["weights"] = np.array(doc["weights"])
        kwargs["rule"] = doc.get("rule")
        kwargs["l_modes"] = np.array(doc["l_modes"], dtype=int)
    return BlochFamily(**kwargs)
