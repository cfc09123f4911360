import numpy as np

TOL_CONSTRAINT = 1e-12  # absolute constraint tolerance


def dot(a, b):
    """Formal (unconjugated) dot product over the last axis.

    Args:
        a, b (np.array with shape (..., 3)): complex or real 3-vectors.

    Returns:
        np.array with shape (...): sum_i a_i b_i.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def cdot(a, b):
    """Conjugated dot product a·b* over the last axis."""
    return dot(a, np.conj(b))


def cross(a, b):
    """Componentwise cross product over complex entries (last axis)."""
    return np.cross(np.asarray(a), np.asarray(b))


def norm3(a):
    """Euclidean norm sqrt(a·a*) over the last axis."""
    return np.sqrt(np.real(cdot(a, a)))


def pairwise_sum(values):
    """Deterministic tree reduction along the first axis.

    Terms are added in fixed adjacent pairs level by level, so the result depends
    only on the order of `values` and never on thread count or memory layout.

    Args:
        values (np.array with shape (n, ...)): terms to reduce.

    Returns:
        np.array with shape (...) (0-d for 1-d input): the sum.
    """
    values = np.asarray(values)
    if values.shape[0] == 0:
        return np.zeros(values.shape[1:], dtype=values.dtype)[()]
    while values.shape[0] > 1:
        if values.shape[0] % 2:
            pad = np.zeros((1,) + values.shape[1:], dtype=values.dtype)
            values = np.concatenate((values, pad))
        values = values[0::2] + values[1::2]
    return values[0]


def signed_indices(n):
    """Signed integer wavenumbers in FFT order; the Nyquist index of even n is -n/2."""
    idx = np.arange(n)
    return np.where(idx <= (n - 1) // 2, idx, idx - n)


def nyquist_index(n):
    """FFT-order index of the Nyquist mode for even n, None otherwise."""
    if n % 2 == 0 and n > 1:
        return n // 2
    return None


def unit_vectors(k):
    """k / |k| per row; zero rows stay zero.

    Returns:
        k_hat (np.array with shape (n, 3)), k2 (np.array with shape (n,)): unit
            vectors and squared magnitudes.
    """
    k = np.asarray(k, dtype=float)
    k2 = dot(k, k)
    safe = np.where(k2 > 0, k2, 1.)
    k_hat = k / np.sqrt(safe)[..., np.newaxis]
    return k_hat, k2


def longitudinal_transverse(k, v):
    """Splits v into the part along k and the part transverse to k.

    Zero wave vectors put all of v into the transverse part.

    Returns:
        parallel, perpendicular (np.array with shape (n, 3)).
    """
    k = np.asarray(k, dtype=float)
    k2 = dot(k, k)
    safe = np.where(k2 > 0, k2, 1.)
    coef = np.where(k2 > 0, dot(k, v) / safe, 0.)
    parallel = coef[..., np.newaxis] * k
    return parallel, v - parallel
