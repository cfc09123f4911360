import numpy as np

from ..api.api_utils import dot, unit_vectors, longitudinal_transverse

TOL_POLARIZATION = 1e-12


class PolarizationError(ValueError):
    """Polarization is not orthogonal to the wave vector."""


def unit_polarization(k, polarization):
    """ Normalized polarization orthogonal to k.

    Raises:
        PolarizationError: if the polarization is zero or has a component along k.
    """
    pol = np.array(polarization, dtype=float)
    norm = np.linalg.norm(pol)
    if pol.shape != (3,) or norm == 0:
        raise PolarizationError(f"polarization: {polarization}, must be a nonzero 3-vector.")
    pol = pol / norm
    k_hat, _ = unit_vectors(np.asarray(k, dtype=float)[np.newaxis])
    if abs(dot(k_hat[0], pol)) > TOL_POLARIZATION:
        raise PolarizationError(
            f"polarization {polarization} is not orthogonal to k = {list(k)}.")
    return pol


def transverse_gaussian(rng, k, scale):
    """ Complex Gaussian 3-vectors per mode with the component along k removed.

    Args:
        rng (np.random.Generator): source of randomness.
        k (np.array with shape (n, 3)): wave vectors.
        scale (np.array with shape (n,)): per-mode amplitude factors.

    Returns:
        np.array with shape (n, 3).
    """
    n = k.shape[0]
    v = rng.standard_normal((n, 3)) + 1j * rng.standard_normal((n, 3))
    _, v = longitudinal_transverse(k, v)
    return scale[:, np.newaxis] * v


def half_space(coords):
    """True for integer vectors lexicographically greater than zero."""
    coords = np.asarray(coords)
    x, y, z = coords[..., 0], coords[..., 1], coords[..., 2]
    return (x > 0) | ((x == 0) & (y > 0)) | ((x == 0) & (y == 0) & (z > 0))


def integer_shell(k_max):
    """Integer vectors in the cube [-k_max, k_max]^3 in the positive half space, fixed order."""
    r = np.arange(-k_max, k_max + 1)
    cube = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)
    return cube[half_space(cube)]


def shell_size_for(pairs):
    """Smallest cube half-width holding at least `pairs` half-space vectors."""
    k_max = 1
    while ((2 * k_max + 1) ** 3 - 1) // 2 < pairs:
        k_max += 1
    return k_max


def enforce_hermitian(values, partners):
    """ Copies conj(values[j]) onto the partner of every j in the positive half.

    Modes paired with themselves are made real.
    """
    values = np.array(values)
    idx = np.arange(values.shape[0])
    lead = idx < partners
    values[partners[lead]] = np.conj(values[idx[lead]])
    own = idx == partners
    values[own] = values[own].real
    return values
