"""Uniform-grid amplitude fields and the displacement-space (kinematic) forms
of the channel information capacity, including the Maxwell gauge-field sector.

Capacity integrals use midpoint quadrature (cell sum times cell volume).
Gradients dispatch on the grid boundary: spectral differentiation on periodic
grids (exact for resolved modes, which makes the momentum-space identities
hold to rounding), second-order central stencils on truncated grids.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from .metric import BoostParameters, MetricSignature, boost_matrix

PERIODIC = "periodic"
TRUNCATED = "truncated"


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid: per-axis half-open extents [lo, hi), point counts, boundary."""

    extents: tuple
    points: tuple
    boundary: str = TRUNCATED

    def __post_init__(self):
        ext = tuple((float(lo), float(hi)) for lo, hi in self.extents)
        pts = tuple(int(p) for p in self.points)
        object.__setattr__(self, "extents", ext)
        object.__setattr__(self, "points", pts)
        if not 1 <= len(pts) <= 4:
            raise ValueError(f"grid dim {len(pts)} outside 1..4")
        if len(ext) != len(pts):
            raise ValueError("extents and points length mismatch")
        if any(p < 1 for p in pts):
            raise ValueError("points per axis must be >= 1")
        if any(hi <= lo for lo, hi in ext):
            raise ValueError("extent hi must exceed lo")
        if self.boundary not in (PERIODIC, TRUNCATED):
            raise ValueError(f"unknown boundary {self.boundary!r}")

    @property
    def dim(self) -> int:
        return len(self.points)

    @property
    def spacing(self) -> tuple:
        return tuple((hi - lo) / p for (lo, hi), p in zip(self.extents, self.points))

    @property
    def lengths(self) -> tuple:
        return tuple(hi - lo for lo, hi in self.extents)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    def axis_coords(self, axis: int) -> np.ndarray:
        lo, _ = self.extents[axis]
        return lo + self.spacing[axis] * np.arange(self.points[axis])

    def broadcast_coord(self, axis: int) -> np.ndarray:
        """Axis coordinates shaped for broadcasting against grid arrays."""
        shape = [1] * self.dim
        shape[axis] = self.points[axis]
        return self.axis_coords(axis).reshape(shape)


def grid_integral(grid: GridSpec, values: np.ndarray) -> float:
    return float(np.sum(values) * grid.cell_volume)


@dataclass(frozen=True)
class AmplitudeField:
    """N real amplitude components q_n on a grid; probabilities are p_n = q_n^2.

    The physics normalization (1/N) sum_n int q_n^2 = 1 is checked on demand
    (``check_normalized``), not enforced, so raw diagnostic fields are legal.
    """

    components: np.ndarray
    grid: GridSpec
    shifts: Optional[np.ndarray] = None

    def __post_init__(self):
        arr = np.asarray(self.components, dtype=float)
        if arr.shape == self.grid.points:
            arr = arr[None]
        if arr.shape[1:] != self.grid.points:
            raise ValueError(
                f"component shape {arr.shape} does not match grid {self.grid.points}")
        object.__setattr__(self, "components", arr)

    @property
    def channel_count(self) -> int:
        return self.components.shape[0]

    def probabilities(self) -> np.ndarray:
        return self.components ** 2

    def norm(self) -> float:
        return grid_integral(self.grid, self.probabilities()) / self.channel_count

    def check_normalized(self, tol: float = 1e-6) -> None:
        n = self.norm()
        if abs(n - 1.0) > tol:
            raise ValueError(f"field norm {n} deviates from 1 beyond {tol}")


@dataclass(frozen=True)
class GaugeField:
    """Four gauge components A_nu on a dim-4 grid; amplitudes are q_nu = a A_nu."""

    components: np.ndarray
    a: float
    grid: GridSpec

    def __post_init__(self):
        if self.grid.dim != 4:
            raise ValueError("gauge fields live on dim-4 grids")
        arr = np.asarray(self.components, dtype=float)
        if arr.shape != (4,) + self.grid.points:
            raise ValueError("gauge field needs shape (4, *grid.points)")
        object.__setattr__(self, "components", arr)

    def amplitude_view(self) -> AmplitudeField:
        return AmplitudeField(self.a * self.components, self.grid)


# ---------------------------------------------------------------------------
# Gradients
# ---------------------------------------------------------------------------

def gradient(values: np.ndarray, axis: int, grid: GridSpec) -> np.ndarray:
    """Central-difference gradient: periodic wrap, or one-sided O(h) edges."""
    if not 0 <= axis < grid.dim:
        raise ValueError(f"axis {axis} out of range for dim {grid.dim}")
    if grid.points[axis] < 3:
        raise ValueError(f"axis {axis} needs >= 3 points for the stencil")
    h = grid.spacing[axis]
    if grid.boundary == PERIODIC:
        return (np.roll(values, -1, axis) - np.roll(values, 1, axis)) / (2.0 * h)
    return np.gradient(values, h, axis=axis, edge_order=1)


def spectral_gradient(values: np.ndarray, axis: int, grid: GridSpec) -> np.ndarray:
    """FFT differentiation; exact for resolved (sub-Nyquist) periodic modes."""
    if not 0 <= axis < grid.dim:
        raise ValueError(f"axis {axis} out of range for dim {grid.dim}")
    p = grid.points[axis]
    k = 2.0 * np.pi * np.fft.fftfreq(p, d=grid.spacing[axis])
    shape = [1] * values.ndim
    shape[axis] = p
    spec = np.fft.fft(values, axis=axis)
    return np.fft.ifft(1j * k.reshape(shape) * spec, axis=axis).real


def field_gradient(values: np.ndarray, axis: int, grid: GridSpec,
                   scheme: str = "auto") -> np.ndarray:
    if scheme == "auto":
        scheme = "spectral" if grid.boundary == PERIODIC else "stencil"
    if scheme == "spectral":
        return spectral_gradient(values, axis, grid)
    if scheme == "stencil":
        return gradient(values, axis, grid)
    raise ValueError(f"unknown gradient scheme {scheme!r}")


# ---------------------------------------------------------------------------
# Capacity functionals
# ---------------------------------------------------------------------------

def capacity_from_amplitudes(field: AmplitudeField, metric: MetricSignature,
                             scheme: str = "auto") -> float:
    """I = 4 sum_n sum_nu eta^{nu nu} int (d_nu q_n)^2."""
    grid = field.grid
    if metric.dim != grid.dim:
        raise ValueError(f"metric dim {metric.dim} != grid dim {grid.dim}")
    total = 0.0
    for comp in field.components:
        for nu in range(grid.dim):
            g = field_gradient(comp, nu, grid, scheme)
            total += metric.signs[nu] * float(np.sum(g * g))
    return 4.0 * total * grid.cell_volume


def capacity_from_probabilities(probabilities, metric: MetricSignature,
                                grid: GridSpec, scheme: str = "auto",
                                return_details: bool = False):
    """I = sum_n int (1/p_n) sum_nu eta^{nu nu} (d_nu p_n)^2.

    The integrand is evaluated in the algebraically identical stabilized form
    4 (d_nu sqrt(p))^2, which avoids 0/0 in density tails; cells below the
    floor eps = 1e-12 * max(p_n) are skipped and the skipped fraction is
    reported.  Requires nonnegative p (sign-free amplitudes).
    """
    p = np.asarray(probabilities, dtype=float)
    if p.shape == grid.points:
        p = p[None]
    if p.shape[1:] != grid.points:
        raise ValueError("probability shape does not match grid")
    if metric.dim != grid.dim:
        raise ValueError(f"metric dim {metric.dim} != grid dim {grid.dim}")
    if float(p.min()) < -1e-12:
        raise ValueError(f"negative probability {p.min()} beyond -1e-12")
    total = 0.0
    skipped_fraction = 0.0
    skipped_mass = 0.0
    for pn in p:
        eps = 1e-12 * float(pn.max())
        mask = pn >= eps
        q = np.sqrt(np.clip(pn, 0.0, None))
        integrand = np.zeros_like(pn)
        for nu in range(grid.dim):
            g = field_gradient(q, nu, grid, scheme)
            integrand += metric.signs[nu] * (g * g)
        total += 4.0 * float(np.sum(integrand[mask]))
        skipped_fraction += float(np.mean(~mask))
        skipped_mass += 4.0 * abs(float(np.sum(integrand[~mask])))
    value = total * grid.cell_volume
    if return_details:
        n = p.shape[0]
        return value, {"skip_fraction": skipped_fraction / n,
                       "skipped_contribution": skipped_mass * grid.cell_volume}
    return value


def mixture_density(field: AmplitudeField) -> np.ndarray:
    """Total displacement density p(x) = (1/N) sum_n q_n^2 (uniform ignorance)."""
    return field.probabilities().mean(axis=0)


# ---------------------------------------------------------------------------
# Field constructors
# ---------------------------------------------------------------------------

def _gaussian_1d_amplitude(x: np.ndarray, center: float, sigma: float) -> np.ndarray:
    # q so that q^2 is the N(center, sigma^2) density
    return (2.0 * np.pi * sigma ** 2) ** -0.25 * np.exp(
        -((x - center) ** 2) / (4.0 * sigma ** 2))


def gaussian_amplitude_field(grid: GridSpec, widths, centers=None) -> AmplitudeField:
    """Separable Gaussian amplitudes: q_n^2 is a product normal density.

    ``widths`` gives the density standard deviation per axis; a width of None
    makes the field constant along that axis with 1/sqrt(L) normalization
    (finite time-box convention for static configurations).
    ``centers`` is one center per channel (default: single channel at 0).
    """
    if centers is None:
        centers = [np.zeros(grid.dim)]
    centers = [np.broadcast_to(np.asarray(c, dtype=float), (grid.dim,))
               for c in centers]
    widths = list(widths)
    if len(widths) != grid.dim:
        raise ValueError("one width per axis required")
    comps = []
    for c in centers:
        comp = np.ones(grid.points)
        for nu in range(grid.dim):
            x = grid.broadcast_coord(nu)
            if widths[nu] is None:
                comp = comp * (grid.lengths[nu] ** -0.5)
            else:
                comp = comp * _gaussian_1d_amplitude(x, c[nu], float(widths[nu]))
        comps.append(comp)
    return AmplitudeField(np.stack(comps), grid, shifts=np.stack(centers))


def plane_wave_field(grid: GridSpec, modes, phase: float = 0.35) -> AmplitudeField:
    """Unit-norm cosine modes q = sqrt(2/V) cos(2 pi sum m_nu x_nu / L_nu + phase).

    Integer sub-Nyquist mode vectors keep the discrete norm exact; the phase
    offset keeps grid samples off the amplitude zeros.
    """
    modes = np.atleast_2d(np.asarray(modes, dtype=int))
    if modes.shape[1] != grid.dim:
        raise ValueError("mode vectors must have one entry per axis")
    comps = []
    for mvec in modes:
        if np.all(mvec == 0):
            raise ValueError("zero mode vector is a constant, not a wave")
        if any(2 * abs(m) >= p for m, p in zip(mvec, grid.points) if m != 0):
            raise ValueError(f"mode {tuple(mvec)} at or beyond Nyquist")
        phi = np.zeros(grid.points)
        for nu, m in enumerate(mvec):
            if m != 0:
                lo, _ = grid.extents[nu]
                phi = phi + 2.0 * np.pi * m * (grid.broadcast_coord(nu) - lo) \
                    / grid.lengths[nu]
        comps.append(np.sqrt(2.0 / grid.volume) * np.cos(phi + phase))
    return AmplitudeField(np.stack(comps), grid)


def gauge_mode_field(grid: GridSpec, epsilon, mode, a: float = 2.0,
                     phase: float = 0.35) -> GaugeField:
    """Plane-wave gauge mode A_nu = eps_nu amp cos(phi) with sum int A^2 = 1."""
    if grid.dim != 4:
        raise ValueError("gauge fields live on dim-4 grids")
    eps = np.asarray(epsilon, dtype=float)
    if eps.shape != (4,):
        raise ValueError("polarization must have 4 components")
    wave = plane_wave_field(grid, [mode], phase=phase).components[0]
    amp = wave / np.linalg.norm(eps)
    return GaugeField(np.stack([e * amp for e in eps]), a, grid)


def constant_amplitude_field(grid: GridSpec, values: Sequence[float]) -> AmplitudeField:
    comps = np.stack([np.full(grid.points, float(v)) for v in values])
    return AmplitudeField(comps, grid)


def gaussian_density_on_grid(grid: GridSpec, mean, cov) -> np.ndarray:
    """Multivariate normal density sampled on the grid (diagonal fast path)."""
    mean = np.broadcast_to(np.asarray(mean, dtype=float), (grid.dim,))
    cov = np.asarray(cov, dtype=float)
    if cov.ndim == 0:
        cov = np.eye(grid.dim) * float(cov)
    elif cov.ndim == 1:
        cov = np.diag(cov)
    off = cov - np.diag(np.diag(cov))
    if not np.any(off):
        dens = np.ones(grid.points)
        for nu in range(grid.dim):
            x = grid.broadcast_coord(nu)
            s2 = cov[nu, nu]
            dens = dens * np.exp(-((x - mean[nu]) ** 2) / (2.0 * s2)) \
                / np.sqrt(2.0 * np.pi * s2)
        return dens
    prec = np.linalg.inv(cov)
    _, logdet = np.linalg.slogdet(cov)
    mesh = np.meshgrid(*[grid.axis_coords(nu) for nu in range(grid.dim)],
                       indexing="ij")
    z = np.stack([m - mu for m, mu in zip(mesh, mean)])
    quad = np.einsum("i...,ij,j...->...", z, prec, z)
    return np.exp(-0.5 * quad - 0.5 * (grid.dim * np.log(2.0 * np.pi) + logdet))


# ---------------------------------------------------------------------------
# Statistical vs kinematic consistency
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConsistencyReport:
    statistical: float
    probability_form: float
    amplitude_form: float
    mass_coverage: np.ndarray
    skip_fraction: float

    @property
    def stat_kinematic_diff(self) -> float:
        return abs(self.statistical - self.probability_form)

    @property
    def form_identity_diff(self) -> float:
        return abs(self.probability_form - self.amplitude_form)


def statistical_kinematic_consistency(model, theta, grid: GridSpec,
                                      metric: MetricSignature,
                                      fisher_method: str = "analytic",
                                      centers=None, scheme: str = "auto",
                                      mass_tol: float = 1e-6,
                                      **fisher_kwargs) -> ConsistencyReport:
    """Compare the statistical capacity with the gridded displacement forms.

    The model's channel densities are placed on the displacement grid
    (x = y - theta, so centered at zero unless ``centers`` overrides the
    placement; the capacity is translation invariant).  Errors out when the
    grid covers less than 1 - mass_tol of any channel's mass.
    """
    from .fisher import channel_capacity

    if model.covariances is None:
        raise ValueError("consistency check needs a Gaussian built-in model")
    if grid.dim != model.obs_dim:
        raise ValueError("grid dim must equal the observation dim")
    if centers is None:
        centers = [np.zeros(grid.dim)] * model.channel_count
    if len(centers) != model.channel_count:
        raise ValueError("one placement center per channel required")
    dens = np.stack([
        gaussian_density_on_grid(grid, centers[n], model.covariances[n])
        for n in range(model.channel_count)])
    coverage = np.array([grid_integral(grid, dn) for dn in dens])
    if np.any(coverage < 1.0 - mass_tol):
        raise ValueError(
            f"truncation too aggressive: grid covers {coverage.min():.8f} "
            f"of channel mass")
    stat = channel_capacity(model, theta, metric, fisher_method,
                            **fisher_kwargs).total
    prob, details = capacity_from_probabilities(dens, metric, grid, scheme,
                                                return_details=True)
    amp = capacity_from_amplitudes(AmplitudeField(np.sqrt(dens), grid),
                                   metric, scheme)
    return ConsistencyReport(stat, prob, amp, coverage, details["skip_fraction"])


# ---------------------------------------------------------------------------
# Boosts
# ---------------------------------------------------------------------------

def boost_field(field: AmplitudeField, boost: BoostParameters,
                mass_loss_tol: float = 1e-3) -> AmplitudeField:
    """Scalar-field boost q'(x) = q(Lambda^{-1} x), resampled multilinearly.

    The boost acts about the coordinate origin.  Errors out when more than
    ``mass_loss_tol`` of the squared-amplitude mass leaves the grid.
    """
    grid = field.grid
    if grid.dim < 2:
        raise ValueError("boosts need a time axis plus at least one spatial axis")
    metric = MetricSignature.minkowski(grid.dim)
    lam = boost_matrix(metric, boost)
    inv = boost_matrix(metric, BoostParameters(-boost.beta, boost.axis))
    mesh = np.meshgrid(*[grid.axis_coords(nu) for nu in range(grid.dim)],
                       indexing="ij")
    coords = np.stack(mesh)
    # support check on the source grid: mass carried outside the box by Lambda
    fwd = np.tensordot(lam, coords, axes=(1, 0))
    inside = np.ones(grid.points, dtype=bool)
    for nu in range(grid.dim):
        lo, hi = grid.extents[nu]
        inside &= (fwd[nu] >= lo) & (fwd[nu] < hi)
    mass_total = float(np.sum(field.components ** 2))
    mass_out = float(np.sum(field.components[:, ~inside] ** 2))
    if mass_total > 0 and mass_out > mass_loss_tol * mass_total:
        raise ValueError(
            f"boosted support leaves the grid: mass fraction "
            f"{mass_out / mass_total:.3e}")
    src = np.tensordot(inv, coords, axes=(1, 0))
    idx = np.stack([
        (src[nu] - grid.extents[nu][0]) / grid.spacing[nu]
        for nu in range(grid.dim)])
    mode = "grid-wrap" if grid.boundary == PERIODIC else "constant"
    out = np.stack([
        ndimage.map_coordinates(comp, idx, order=1, mode=mode, cval=0.0)
        for comp in field.components])
    return AmplitudeField(out, grid, shifts=field.shifts)


# ---------------------------------------------------------------------------
# Maxwell sector
# ---------------------------------------------------------------------------

def maxwell_capacity(g: GaugeField, scheme: str = "auto") -> float:
    """I = 4 a^2 sum_mu eta^{mu mu} sum_nu eta^{nu nu} int (d_nu A_mu)^2.

    The outer sign is the dual-amplitude channel weight, so I is
    sign-indefinite even for real gauge fields; the value is reported as-is.
    """
    grid = g.grid
    if grid.dim != 4:
        raise ValueError("Maxwell capacity requires a dim-4 grid")
    signs = MetricSignature.minkowski(4).signs
    total = 0.0
    for mu in range(4):
        for nu in range(4):
            d = field_gradient(g.components[mu], nu, grid, scheme)
            total += signs[mu] * signs[nu] * float(np.sum(d * d))
    return 4.0 * g.a ** 2 * total * grid.cell_volume


def lorentz_condition_residual(g: GaugeField, scheme: str = "auto"):
    """Pointwise eta^{mu nu} d_mu A_nu and its L2 norm over the grid."""
    grid = g.grid
    if grid.dim != 4:
        raise ValueError("Lorentz condition requires a dim-4 grid")
    signs = MetricSignature.minkowski(4).signs
    res = np.zeros(grid.points)
    for nu in range(4):
        res += signs[nu] * field_gradient(g.components[nu], nu, grid, scheme)
    l2 = float(np.sqrt(np.sum(res * res) * grid.cell_volume))
    return res, l2


@dataclass(frozen=True)
class GaugeNormReport:
    amplitude_integral: float   # (1/4) sum_nu int q_nu^2 with q = a A
    gauge_integral: float       # sum_nu int A_nu^2
    equivalent: bool            # the two coincide (exact when a = 2)
    passed: bool


def gauge_normalization_check(g: GaugeField, tol: float = 1e-6) -> GaugeNormReport:
    """Check (1/4) sum int q^2 = sum int A^2 = 1 for q = a A (a = 2 convention)."""
    grid = g.grid
    q = g.a * g.components
    amp = 0.25 * grid_integral(grid, q ** 2)
    gauge = grid_integral(grid, g.components ** 2)
    equivalent = amp == gauge if g.a == 2.0 else abs(amp - gauge) <= tol
    passed = abs(gauge - 1.0) <= tol and equivalent
    return GaugeNormReport(amp, gauge, equivalent, passed)


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

def wrap_continuity_report(field: AmplitudeField):
    """Wrap-jump diagnostic for periodic grids.

    Returns (max wrap-neighbor difference, max interior-neighbor difference);
    a continuous periodic field has the former no larger than the latter.
    """
    wrap = 0.0
    interior = 0.0
    for comp in field.components:
        for axis in range(field.grid.dim):
            d = np.abs(np.diff(comp, axis=axis))
            if d.size:
                interior = max(interior, float(d.max()))
            first = np.take(comp, 0, axis=axis)
            last = np.take(comp, -1, axis=axis)
            wrap = max(wrap, float(np.max(np.abs(first - last))))
    return wrap, interior


def measured_orders(errors: Sequence[float]) -> list[float]:
    """Convergence orders log2(e_i / e_{i+1}) for successive grid halvings."""
    return [float(np.log2(errors[i] / errors[i + 1]))
            for i in range(len(errors) - 1)]
