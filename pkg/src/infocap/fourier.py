"""Discrete Fourier analysis of amplitude fields: measure-preserving transform,
momentum-space capacity, particle mass-squared, and the Fourier information.

Conventions: symmetric (unitary) scaling with the continuum prefactor absorbed
into the momentum-axis spacing, so the discrete Parseval identity is exact in
exact arithmetic.  The phase is +i x.p/hbar with the Minkowski expansion
(positive temporal term, negative spatial terms); axis 0 is temporal.
Coordinates are measured from the grid origin, a momentum-dependent unit
phase that is invisible to every quadratic functional.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .kinematic import (PERIODIC, AmplitudeField, GridSpec, field_gradient,
                        grid_integral)


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if self.hbar <= 0 or self.c <= 0:
            raise ValueError("hbar and c must be positive")


def _trunc_minkowski_signs(dim: int) -> np.ndarray:
    """(+1, -1, ..., -1) truncated to dim entries; axis 0 temporal."""
    signs = -np.ones(dim)
    signs[0] = 1.0
    return signs


@dataclass(frozen=True)
class MomentumField:
    """Complex Fourier coefficients on the conjugate momentum grid.

    Components are stored in shifted (monotonic-axis) order; ``momentum_axes``
    holds the contravariant momentum values per axis, with axis 0 = E/c.
    """

    components: np.ndarray            # (N, *points) complex
    momentum_axes: tuple              # per-axis arrays of momentum values
    constants: PhysicalConstants
    grid: GridSpec                    # originating position grid
    leakage: Optional[float] = None   # truncated-grid boundary magnitude ratio

    @property
    def channel_count(self) -> int:
        return self.components.shape[0]

    @property
    def cell_volume(self) -> float:
        return float(np.prod([ax[1] - ax[0] for ax in self.momentum_axes]))

    def norm(self) -> float:
        return float(np.sum(np.abs(self.components) ** 2)
                     * self.cell_volume / self.channel_count)

    def weight_grid(self, euclidean: bool = False) -> np.ndarray:
        """E^2/c^2 - |p|^2 per bin (or the all-plus Euclidean variant)."""
        signs = np.ones(self.grid.dim) if euclidean \
            else _trunc_minkowski_signs(self.grid.dim)
        w = np.zeros(self.grid.points)
        for nu, ax in enumerate(self.momentum_axes):
            shape = [1] * self.grid.dim
            shape[nu] = ax.size
            w = w + signs[nu] * ax.reshape(shape) ** 2
        return w


def _flip_time_axis(spec: np.ndarray) -> np.ndarray:
    # G(m) = F((-m) mod P) along axis 0: positive-exponent kernel via fftn
    return np.roll(np.flip(spec, axis=0), 1, axis=0)


def forward_transform(field: AmplitudeField,
                      consts: PhysicalConstants = PhysicalConstants()) -> MomentumField:
    """Unitary-scaled discrete transform of each amplitude component.

    Truncated grids are transformed as sampled (zero-extension viewpoint) and
    a spectral-leakage estimate, the boundary-to-peak magnitude ratio, is
    recorded on the result.
    """
    grid = field.grid
    dim = grid.dim
    hbar = consts.hbar
    scale = grid.cell_volume / (2.0 * np.pi * hbar) ** (dim / 2.0)
    out = []
    for comp in field.components:
        spec = np.fft.fftn(comp)
        spec = _flip_time_axis(spec)
        out.append(np.fft.fftshift(spec) * scale)
    axes = tuple(
        2.0 * np.pi * hbar / grid.lengths[nu]
        * np.fft.fftshift(np.rint(np.fft.fftfreq(p, d=1.0 / p)))
        for nu, p in enumerate(grid.points))
    leakage = None
    if grid.boundary != PERIODIC:
        peak = float(np.max(np.abs(field.components)))
        edge = 0.0
        for comp in field.components:
            for axis in range(dim):
                edge = max(edge,
                           float(np.max(np.abs(np.take(comp, 0, axis=axis)))),
                           float(np.max(np.abs(np.take(comp, -1, axis=axis)))))
        leakage = edge / peak if peak > 0 else 0.0
    return MomentumField(np.stack(out), axes, consts, grid, leakage)


def inverse_transform(momentum: MomentumField) -> AmplitudeField:
    """Exact inverse of forward_transform (real part of the reconstruction)."""
    grid = momentum.grid
    dim = grid.dim
    scale = grid.cell_volume / (2.0 * np.pi * momentum.constants.hbar) ** (dim / 2.0)
    comps = []
    for comp in momentum.components:
        spec = np.fft.ifftshift(comp) / scale
        spec = _flip_time_axis(spec)
        comps.append(np.fft.ifftn(spec).real)
    return AmplitudeField(np.stack(comps), grid)


def conjugate_symmetry_defect(momentum: MomentumField) -> float:
    """max |q~(-p) - conj(q~(p))|; zero for transforms of real fields."""
    defect = 0.0
    for comp in momentum.components:
        u = np.fft.ifftshift(comp)
        rev = u
        for axis in range(u.ndim):
            rev = np.roll(np.flip(rev, axis=axis), 1, axis=axis)
        defect = max(defect, float(np.max(np.abs(np.conj(rev) - u))))
    return defect


@dataclass(frozen=True)
class ParsevalReport:
    position_total: float
    momentum_total: float
    gram_position: np.ndarray
    gram_momentum: np.ndarray

    @property
    def diff(self) -> float:
        return abs(self.position_total - self.momentum_total)

    @property
    def gram_diff(self) -> float:
        return float(np.max(np.abs(self.gram_position - self.gram_momentum)))


def parseval_check(field: AmplitudeField, momentum: MomentumField) -> ParsevalReport:
    """Measure preservation: norms and all pairwise inner products agree."""
    n = field.channel_count
    gx = np.empty((n, n))
    gp = np.empty((n, n), dtype=complex)
    volp = momentum.cell_volume
    for i in range(n):
        for j in range(n):
            gx[i, j] = grid_integral(field.grid,
                                     field.components[i] * field.components[j])
            gp[i, j] = np.sum(np.conj(momentum.components[i])
                              * momentum.components[j]) * volp
    return ParsevalReport(float(np.trace(gx)), float(np.trace(gp).real), gx, gp)


def momentum_capacity(momentum: MomentumField, euclidean: bool = False) -> float:
    """I = (4/hbar^2) int d^dim p sum_n |q~_n|^2 (E^2/c^2 - |p|^2)."""
    w = momentum.weight_grid(euclidean=euclidean)
    total = float(np.sum(np.abs(momentum.components) ** 2 * w))
    return 4.0 / momentum.constants.hbar ** 2 * total * momentum.cell_volume


def mass_squared(momentum: MomentumField, norm_tol: float = 1e-6) -> float:
    """Spectral-mean mass: m^2 = (1/(N c^2)) int sum_n |q~_n|^2 (E^2/c^2 - |p|^2).

    Requires the normalized field (1/N) sum int |q~|^2 = 1.
    """
    norm = momentum.norm()
    if abs(norm - 1.0) > norm_tol:
        raise ValueError(f"field not normalized: (1/N) sum int |q~|^2 = {norm}")
    w = momentum.weight_grid()
    total = float(np.sum(np.abs(momentum.components) ** 2 * w)) \
        * momentum.cell_volume
    return total / (momentum.channel_count * momentum.constants.c ** 2)


def euclidean_mass_squared(momentum: MomentumField, norm_tol: float = 1e-6) -> float:
    """All-plus variant of mass_squared; strictly positive for any nonzero,
    non-constant field (mass cannot vanish under the Euclidean signature)."""
    norm = momentum.norm()
    if abs(norm - 1.0) > norm_tol:
        raise ValueError(f"field not normalized: (1/N) sum int |q~|^2 = {norm}")
    w = momentum.weight_grid(euclidean=True)
    total = float(np.sum(np.abs(momentum.components) ** 2 * w)) \
        * momentum.cell_volume
    return total / (momentum.channel_count * momentum.constants.c ** 2)


def free_particle_capacity(mass: float, channel_count: int,
                           consts: PhysicalConstants = PhysicalConstants()) -> float:
    """I = 4 N (m c / hbar)^2."""
    if mass < 0:
        raise ValueError("mass must be >= 0 (use mass_squared + tachyon_check "
                         "for spacelike spectra)")
    if channel_count < 1:
        raise ValueError("channel_count must be >= 1")
    return 4.0 * channel_count * (mass * consts.c / consts.hbar) ** 2


@dataclass(frozen=True)
class FourierInformationReport:
    total: float                     # K_F
    density: np.ndarray              # k_F on the position grid
    mass_squared: float              # self-consistent spectral mean
    mass_squared_used: float         # external override if supplied
    position_capacity: float
    momentum_capacity: float


def fourier_information(field: AmplitudeField,
                        consts: PhysicalConstants = PhysicalConstants(),
                        external_mass_squared: Optional[float] = None,
                        scheme: str = "auto") -> FourierInformationReport:
    """K_F = I[q(x)] - I[q~(p)] with density k_F reported for inspection.

    With the self-consistent spectral mass the total vanishes (Parseval made
    executable); an externally imposed mass m_ext shifts it by the closed
    form 4 N (m^2 - m_ext^2) c^2 / hbar^2.
    """
    momentum = forward_transform(field, consts)
    m2 = mass_squared(momentum)
    m2_used = m2 if external_mass_squared is None else float(external_mass_squared)
    grid = field.grid
    signs = _trunc_minkowski_signs(grid.dim)
    factor = m2_used * consts.c ** 2 / consts.hbar ** 2
    dens = np.zeros(grid.points)
    grads_total = np.zeros(grid.points)
    for comp in field.components:
        grads = np.zeros(grid.points)
        for nu in range(grid.dim):
            g = field_gradient(comp, nu, grid, scheme)
            grads += signs[nu] * g * g
        grads_total += grads
        dens += 4.0 * (grads - factor * comp * comp)
    total = grid_integral(grid, dens)
    pos_cap = 4.0 * grid_integral(grid, grads_total)
    return FourierInformationReport(total, dens, m2, m2_used, pos_cap,
                                    momentum_capacity(momentum))


@dataclass(frozen=True)
class TachyonReport:
    mass_squared: float
    capacity: float
    mass_nonnegative: bool
    capacity_nonnegative: bool
    tachyonic: bool

    @property
    def consistent(self) -> bool:
        # exact algebra: I = 4 N c^2 m^2 / hbar^2, so the signs must agree
        return self.mass_nonnegative == self.capacity_nonnegative


def tachyon_check(momentum: MomentumField) -> TachyonReport:
    """Report m^2, I, and the equivalence m^2 >= 0 <=> I >= 0."""
    m2 = mass_squared(momentum)
    cap = momentum_capacity(momentum)
    return TachyonReport(m2, cap, m2 >= 0.0, cap >= 0.0, m2 < 0.0)
