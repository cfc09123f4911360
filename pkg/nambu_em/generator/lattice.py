# Module lattice provides the bridge between periodic real-space lattice fields
# and SpectralState.
#
# Forward transform: F(k) = (1/N) sum_x f(x) exp(-i k·x), N = nx*ny*nz, so a unit
# cosine lands as 1/2 on each of its two paired modes. Inverse: f(x) = sum_k F(k) exp(i k·x).

import logging

import numpy as np
import scipy.fft

from ..api import (
    Grid, SpectralState, NoGrid, hermitian_pair_index, max_hermitian_violation,
)
from ..api.api_utils import dot

logger = logging.getLogger("nambu_em.lattice")

TOL_NYQUIST = 1e-12  # relative to the largest sample
TOL_IMAG = 1e-12  # relative to the largest output sample

METHODS = ("fft", "direct")


class NyquistNonzero(ValueError):
    """Nyquist plane of the transform carries content."""


class NonFiniteSample(ValueError):
    """Lattice sample is NaN or infinite."""


class NotHermitian(ValueError):
    """Spectral state does not describe a real field."""


class LatticeField:
    """ Real E and B samples (and optionally the charge density) on a periodic grid.

        Samples are held with shape (nx, ny, nz, 3) for the fields and (nx, ny, nz)
        for the charge; point (i, j, l) sits at x = (i lx/nx, j ly/ny, l lz/nz).
    """

    def __init__(self, dims, lengths, E, B, charge=None):
        """
        Args:
            dims ((int, int, int)): grid sizes.
            lengths ((float, float, float)): periods of the box.
            E, B (array-like): samples with shape (nx, ny, nz, 3) or (nx*ny*nz, 3),
                row-major with z fastest.
            charge (array-like or None): samples with shape (nx, ny, nz) or (nx*ny*nz,).

        Raises:
            ValueError: if the sample counts do not match dims.
            NonFiniteSample: if any sample is NaN or infinite.
        """
        self.grid = Grid(*dims, *lengths)
        shape = self.grid.dims
        self.E = self._reshape("E", E, shape + (3,))
        self.B = self._reshape("B", B, shape + (3,))
        self.charge = None if charge is None else self._reshape("charge", charge, shape)

    @staticmethod
    def _reshape(name, samples, shape):
        samples = np.array(samples, dtype=float)
        if samples.size != int(np.prod(shape)):
            raise ValueError(
                f"{name}: {samples.size} samples, expected {int(np.prod(shape))} for shape {shape}.")
        samples = samples.reshape(shape)
        if not np.all(np.isfinite(samples)):
            raise NonFiniteSample(f"{name}: non-finite lattice sample.")
        return samples

    @property
    def dims(self):
        return self.grid.dims

    @property
    def lengths(self):
        return self.grid.lengths

    @property
    def n_points(self):
        return self.grid.n_modes

    def positions(self):
        """Sample coordinates, shape (nx, ny, nz, 3)."""
        axes = [np.arange(n) * l / n for n, l in zip(self.dims, self.lengths)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def max_abs(self):
        values = [np.abs(self.E).max(initial=0.), np.abs(self.B).max(initial=0.)]
        if self.charge is not None:
            values.append(np.abs(self.charge).max(initial=0.))
        return float(max(values))

    @classmethod
    def zeros(cls, grid):
        shape = grid.dims + (3,)
        return cls(grid.dims, grid.lengths, np.zeros(shape), np.zeros(shape))

    def __repr__(self):
        return f"LatticeField(dims={self.dims}, lengths={self.lengths})"


def _dft_matrix(n, sign):
    idx = np.arange(n)
    return np.exp(sign * 2j * np.pi * np.outer(idx, idx) / n)


def forward(samples, method="fft", workers=None):
    """ (1/N) sum_x f(x) exp(-i k·x) over the three leading axes.

    Args:
        samples (np.array with shape (nx, ny, nz, ...)): real or complex samples.
        method (str): "fft" (scipy.fft) or "direct" (separable DFT matrices).
        workers (int or None): thread count for the fft path.

    Returns:
        np.array: coefficients in FFT order with the shape of samples.
    """
    n = samples.shape[0] * samples.shape[1] * samples.shape[2]
    if method == "fft":
        return scipy.fft.fftn(samples, axes=(0, 1, 2), workers=workers) / n
    if method == "direct":
        fx, fy, fz = (_dft_matrix(m, -1) for m in samples.shape[:3])
        return np.einsum("ai,bj,ck,ijk...->abc...", fx, fy, fz, samples, optimize=True) / n
    raise ValueError(f"transform method: '{method}', should be one of {METHODS}.")


def inverse(coefficients, method="fft", workers=None):
    """ sum_k F(k) exp(i k·x) over the three leading axes (inverse of forward). """
    n = coefficients.shape[0] * coefficients.shape[1] * coefficients.shape[2]
    if method == "fft":
        return scipy.fft.ifftn(coefficients, axes=(0, 1, 2), workers=workers) * n
    if method == "direct":
        fx, fy, fz = (_dft_matrix(m, 1) for m in coefficients.shape[:3])
        return np.einsum("ai,bj,ck,ijk...->abc...", fx, fy, fz, coefficients, optimize=True)
    raise ValueError(f"transform method: '{method}', should be one of {METHODS}.")


def _symmetrize(values, partners):
    # exact Hermitian pairing: average each mode with the conjugate of its partner
    return 0.5 * (values + np.conj(values[partners]))


def to_spectral(field, method="fft", tol=TOL_NYQUIST, workers=None):
    """ Transforms a lattice field into a grid-tagged SpectralState.

    Args:
        field (LatticeField): real samples.
        method (str): "fft" or "direct"; both agree to roundoff.
        tol (float): Nyquist content allowed, relative to the largest sample.
        workers (int or None): thread count for the fft path.

    Returns:
        SpectralState: w = 1, Hermitian pairing from the grid, c(k) = k·E(k)
            frozen from the transformed field, Nyquist modes set to zero.

    Raises:
        NyquistNonzero: if a Nyquist mode carries more than tol.
        NonFiniteSample: if the field holds NaN or infinite samples.
    """
    for name, samples in (("E", field.E), ("B", field.B)):
        if not np.all(np.isfinite(samples)):
            raise NonFiniteSample(f"{name}: non-finite lattice sample.")
    grid = field.grid
    n = grid.n_modes
    E = forward(field.E, method, workers).reshape(n, 3)
    B = forward(field.B, method, workers).reshape(n, 3)

    nyq = grid.nyquist_mask()
    if np.any(nyq):
        content = max(np.abs(E[nyq]).max(), np.abs(B[nyq]).max())
        if content > tol * max(field.max_abs(), 1.):
            raise NyquistNonzero(
                f"Nyquist modes carry {content}, above tolerance {tol}.")
        if content > 0:
            logger.warning("zeroing Nyquist content {} below tolerance".format(content))
        E[nyq] = 0.
        B[nyq] = 0.

    partners = hermitian_pair_index(grid, np.arange(n))
    E = _symmetrize(E, partners)
    B = _symmetrize(B, partners)
    k = grid.wave_vectors()
    c = dot(k, E)

    if field.charge is not None:
        rho = forward(field.charge, method, workers).reshape(n)
        mismatch = np.abs(rho - 1j * c).max()
        if mismatch > tol * max(field.max_abs(), 1.):
            logger.warning("charge field disagrees with div E by {}".format(mismatch))

    return SpectralState(k, E, B, c=c, partners=partners, grid=grid)


def to_lattice(state, method="fft", tol=TOL_IMAG, workers=None):
    """ Inverse transform of a grid-tagged, Hermitian-paired state.

    Args:
        state (SpectralState): state carrying a grid.
        method (str): "fft" or "direct".
        tol (float): imaginary residue discarded, relative to max(1, largest sample).
        workers (int or None): thread count for the fft path.

    Returns:
        LatticeField: real E and B samples and the charge rho(x) = sum_k i c(k) exp(i k·x).

    Raises:
        NoGrid: if the state is an explicit mode list.
        NotHermitian: if the pairing is violated or the output is not real.
    """
    grid = state.grid
    if grid is None:
        raise NoGrid("to_lattice needs a grid-tagged state.")
    if state.n_modes != grid.n_modes:
        raise NoGrid(f"state has {state.n_modes} modes, grid expects {grid.n_modes}.")
    scale = max(state.norm_scale(), 1.)
    herm = max_hermitian_violation(state)
    if herm > tol * scale:
        raise NotHermitian(f"Hermitian pairing violated by {herm}.")

    shape = grid.dims
    outputs = {}
    for name, values in (("E", state.E), ("B", state.B), ("charge", 1j * state.c)):
        trailing = (3,) if values.ndim == 2 else ()
        samples = inverse(values.reshape(shape + trailing), method, workers)
        residue = np.abs(samples.imag).max(initial=0.)
        if residue > tol * max(np.abs(samples.real).max(initial=0.), 1.):
            raise NotHermitian(f"{name}: imaginary residue {residue} in real-space samples.")
        outputs[name] = samples.real
    return LatticeField(grid.dims, grid.lengths, outputs["E"], outputs["B"], outputs["charge"])


def parseval_check(field, state):
    """ Relative discrepancy between spectral and lattice energy sums.

    Returns:
        float: |sum_k (|E|^2 + |B|^2) - (1/N) sum_x (E^2 + B^2)| / max(both); 0 for zero fields.
    """
    spectral = float(np.sum(np.abs(state.E) ** 2) + np.sum(np.abs(state.B) ** 2))
    lattice = float((np.sum(field.E ** 2) + np.sum(field.B ** 2)) / field.n_points)
    scale = max(spectral, lattice)
    if scale == 0:
        return 0.
    return abs(spectral - lattice) / scale
