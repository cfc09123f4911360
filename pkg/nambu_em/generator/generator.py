# Generate initial spectral states: traveling and standing plane waves, random
# solenoidal fields and static Coulomb fields.
import logging

import numpy as np

from .generator_utils import (
    unit_polarization, transverse_gaussian, integer_shell,
    shell_size_for, enforce_hermitian,
)
from ..api import SpectralState, ConstraintError, hermitian_pair_index
from ..api.api_utils import cross, unit_vectors, dot

logger = logging.getLogger("nambu_em.generator")

KINDS = ("plane_wave", "standing_wave", "random_solenoidal", "coulomb_static")


def _grid_mode(grid, index):
    """Flat index of the integer mode `index` and its partner; rejects k = 0 and Nyquist modes."""
    index = np.asarray(index, dtype=int)
    if index.shape != (3,):
        raise ValueError(f"mode index: {index.tolist()}, must be 3 integers.")
    j = int(grid.flat_index(index))
    if not np.any(grid.wave_vectors()[j]):
        raise ValueError(f"mode index {index.tolist()} is the zero mode.")
    if grid.nyquist_mask()[j]:
        raise ValueError(f"mode index {index.tolist()} lies on a Nyquist plane.")
    return j, hermitian_pair_index(grid, j)


def _wave_pair(params, grid, build):
    """ Shared layout of the two plane-wave kinds.

    build(k, pol) returns (E, B) at +k; the -k mode holds their conjugates.
    """
    if grid is not None:
        j, p = _grid_mode(grid, params.get("index", (0, 0, 1)))
        k = grid.wave_vectors()
        E = np.zeros((grid.n_modes, 3), dtype=complex)
        B = np.zeros((grid.n_modes, 3), dtype=complex)
        pol = unit_polarization(k[j], params.get("polarization", (1, 0, 0)))
        E[j], B[j] = build(k[j], pol)
        E[p], B[p] = np.conj(E[j]), np.conj(B[j])
        return SpectralState(k, E, B, grid=grid)

    k_plus = np.array(params.get("k", (0, 0, 1)), dtype=float)
    if k_plus.shape != (3,) or not np.any(k_plus):
        raise ValueError(f"k: {params.get('k')}, must be a nonzero 3-vector.")
    pol = unit_polarization(k_plus, params.get("polarization", (1, 0, 0)))
    E_plus, B_plus = build(k_plus, pol)
    k = np.stack((k_plus, -k_plus))
    E = np.stack((E_plus, np.conj(E_plus)))
    B = np.stack((B_plus, np.conj(B_plus)))
    return SpectralState(k, E, B, partners=[1, 0])


def plane_wave(params, grid=None):
    """ Traveling wave along +k: E(k) = amp/2 pol exp(i phase), B(k) = k_hat x E(k).

    Args:
        params (dict): "index" (integer grid mode) or "k" (explicit wave vector),
            "amplitude" (default 1), "polarization" (default x), "phase" (default 0).
        grid (Grid or None): grid to place the pair on.

    Raises:
        PolarizationError: if the polarization has a component along k.
    """
    amplitude = float(params.get("amplitude", 1.))
    phase = float(params.get("phase", 0.))

    def build(k, pol):
        E = 0.5 * amplitude * np.exp(1j * phase) * pol.astype(complex)
        k_hat, _ = unit_vectors(k[np.newaxis])
        return E, cross(k_hat[0], E)

    return _wave_pair(params, grid, build)


def standing_wave(params, grid=None):
    """ Standing wave: E(+-k) = amp/2 pol, B = 0; params as for plane_wave. """
    amplitude = float(params.get("amplitude", 1.))
    phase = float(params.get("phase", 0.))

    def build(k, pol):
        return 0.5 * amplitude * np.exp(1j * phase) * pol.astype(complex), np.zeros(3, dtype=complex)

    return _wave_pair(params, grid, build)


def random_solenoidal(params, grid=None, seed=0):
    """ Gaussian transverse amplitudes with Hermitian symmetry.

    Amplitudes scale as amplitude * |k|^exponent up to the cutoff and are zero above
    it; the default cutoff is half the smallest Nyquist wavenumber of the grid.

    Args:
        params (dict): "amplitude" (1), "exponent" (0), "cutoff" (optional);
            without a grid "n_modes" (even) and optional "k_max" (integer cube
            half-width) choose the explicit wave vectors.
        grid (Grid or None): grid to fill.
        seed (int): seed of numpy.random.default_rng; equal seeds give identical states.
    """
    rng = np.random.default_rng(seed)
    amplitude = float(params.get("amplitude", 1.))
    exponent = float(params.get("exponent", 0.))

    if grid is not None:
        k = grid.wave_vectors()
        partners = hermitian_pair_index(grid, np.arange(grid.n_modes))
        resolved = [np.pi * n / l for n, l in zip(grid.dims, grid.lengths) if n > 1]
        cutoff = params.get("cutoff", 0.5 * min(resolved) if resolved else 0.)
        k_norm = np.sqrt(dot(k, k))
        active = (k_norm > 0) & (k_norm <= cutoff) & ~grid.nyquist_mask()
    else:
        n_modes = int(params.get("n_modes", 2))
        if n_modes < 2 or n_modes % 2:
            raise ValueError(f"n_modes: {n_modes}, must be a positive even integer.")
        half = n_modes // 2
        shell = integer_shell(int(params.get("k_max", shell_size_for(half))))
        if shell.shape[0] < half:
            raise ValueError(f"k_max too small for {n_modes} modes.")
        chosen = shell[np.sort(rng.choice(shell.shape[0], size=half, replace=False))]
        k = np.concatenate((chosen, -chosen)).astype(float)
        partners = np.concatenate((np.arange(half, n_modes), np.arange(half)))
        k_norm = np.sqrt(dot(k, k))
        cutoff = params.get("cutoff", np.inf)
        active = k_norm <= cutoff

    scale = np.where(active, amplitude * np.where(k_norm > 0, k_norm, 1.) ** exponent, 0.)
    E = enforce_hermitian(transverse_gaussian(rng, k, scale), partners)
    B = enforce_hermitian(transverse_gaussian(rng, k, scale), partners)
    logger.debug("random_solenoidal: {} active modes, cutoff {}".format(int(active.sum()), cutoff))
    return SpectralState(k, E, B, c=np.zeros(k.shape[0]), partners=partners, grid=grid)


def _charge_entries(params):
    if "charges" in params:
        return params["charges"]
    return [params]


def coulomb_static(params, grid=None):
    """ Static longitudinal field E(k) = c(k) k / |k|^2, B = 0.

    The partner mode holds c(-k) = -conj(c(k)) so the field and charge stay real.

    Args:
        params (dict): "charges": list of {"index" (grid) or "k" (explicit), "c"};
            a single entry may be given inline. "c" is a number or [re, im].

    Raises:
        ConstraintError: if a nonzero c is requested at k = 0.
    """
    entries = _charge_entries(params)
    if grid is not None:
        k = grid.wave_vectors()
        n = grid.n_modes
        c = np.zeros(n, dtype=complex)
        for entry in entries:
            value = _complex(entry.get("c", 0.))
            j = int(grid.flat_index(np.asarray(entry.get("index", (0, 0, 1)), dtype=int)))
            if not np.any(k[j]):
                if value != 0:
                    raise ConstraintError(f"c(0) = {value}, Gauss law is unsatisfiable at k = 0.")
                continue
            if grid.nyquist_mask()[j]:
                raise ValueError(f"charge index {entry.get('index')} lies on a Nyquist plane.")
            p = hermitian_pair_index(grid, j)
            c[j], c[p] = value, -np.conj(value)
        partners = None
    else:
        ks, cs = [], []
        for entry in entries:
            k_plus = np.array(entry.get("k", (0, 0, 1)), dtype=float)
            value = _complex(entry.get("c", 0.))
            if not np.any(k_plus):
                if value != 0:
                    raise ConstraintError(f"c(0) = {value}, Gauss law is unsatisfiable at k = 0.")
                continue
            ks.append(k_plus)
            cs.append(value)
        half = len(ks)
        k = np.concatenate((ks, -np.array(ks))) if ks else np.zeros((0, 3))
        c = np.concatenate((cs, -np.conj(cs))) if cs else np.zeros(0, dtype=complex)
        partners = np.concatenate((np.arange(half, 2 * half), np.arange(half)))
        n = 2 * half
    k2 = dot(k, k)
    E = np.where(k2[:, np.newaxis] > 0, c[:, np.newaxis] * k / np.where(k2 > 0, k2, 1.)[:, np.newaxis], 0.)
    B = np.zeros((n, 3), dtype=complex)
    return SpectralState(k, E, B, c=c, partners=partners, grid=grid)


def _complex(value):
    if isinstance(value, (list, tuple)):
        return complex(value[0], value[1])
    return complex(value)


def make_ic(kind, params=None, grid=None, seed=0):
    """ Builds an initial spectral state.

    Args:
        kind (str): "plane_wave", "standing_wave", "random_solenoidal" or "coulomb_static".
        params (dict): kind-specific parameters.
        grid (Grid or None): grid to place the modes on; None builds an explicit mode list.
        seed (int): seed of the random generator (random_solenoidal only).

    Returns:
        SpectralState: state satisfying the Gauss and Hermitian constraints.

    Raises:
        ValueError: on an unknown kind or bad parameters.
        PolarizationError: if a polarization has a component along k.
        ConstraintError: if coulomb_static asks for c(0) != 0.
    """
    params = dict(params or {})
    if kind == "plane_wave":
        return plane_wave(params, grid)
    if kind == "standing_wave":
        return standing_wave(params, grid)
    if kind == "random_solenoidal":
        return random_solenoidal(params, grid, seed)
    if kind == "coulomb_static":
        return coulomb_static(params, grid)
    raise ValueError(f"initial condition kind: '{kind}', should be one of {KINDS}.")
