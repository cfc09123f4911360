# Module api provides the spectral phase space of the electromagnetic field:
# wave-vector mode sets, complex field amplitudes per mode, Hermitian (reality)
# pairing of modes at +k and -k and bookkeeping of the Gauss constraints
# k·E = c(k), k·B = 0.
#
# States are immutable values. Every operation returns a new state or a report.

import logging
from collections import namedtuple

import numpy as np

from .api_utils import (
    TOL_CONSTRAINT, dot, signed_indices, nyquist_index,
)

logger = logging.getLogger("nambu_em.api")


class ConstraintError(ValueError):
    """Gauss constraints cannot be satisfied."""


class PairingError(ValueError):
    """Hermitian pairing is missing or inconsistent."""


class NoGrid(ValueError):
    """Operation needs a rectangular grid descriptor."""


Mode = namedtuple("Mode", ["k", "E", "B", "w", "hermitian_partner"])
Violation = namedtuple("Violation", ["constraint", "mode_index", "magnitude"])


class Grid(namedtuple("Grid", ["nx", "ny", "nz", "lx", "ly", "lz"])):
    """Periodic rectangular grid descriptor.

    Modes of a grid are ordered row-major over the integer FFT indices
    (ix, iy, iz), z fastest, so the flat index is (ix * ny + iy) * nz + iz.
    """

    __slots__ = ()

    def __new__(cls, nx, ny, nz, lx=2 * np.pi, ly=2 * np.pi, lz=2 * np.pi):
        dims = (int(nx), int(ny), int(nz))
        lengths = (float(lx), float(ly), float(lz))
        if min(dims) < 1:
            raise ValueError(f"grid dims: {dims}, must be positive integers.")
        if not all(np.isfinite(lengths)) or min(lengths) <= 0:
            raise ValueError(f"grid lengths: {lengths}, must be positive.")
        return super().__new__(cls, *dims, *lengths)

    @property
    def dims(self):
        return (self.nx, self.ny, self.nz)

    @property
    def lengths(self):
        return (self.lx, self.ly, self.lz)

    @property
    def n_modes(self):
        return self.nx * self.ny * self.nz

    def integer_coords(self):
        """FFT-order integer indices (ix, iy, iz) of every mode, shape (n_modes, 3)."""
        ix, iy, iz = np.meshgrid(
            np.arange(self.nx), np.arange(self.ny), np.arange(self.nz), indexing="ij")
        return np.stack((ix.ravel(), iy.ravel(), iz.ravel()), axis=1)

    def flat_index(self, coords):
        coords = np.asarray(coords) % np.array(self.dims)
        return (coords[..., 0] * self.ny + coords[..., 1]) * self.nz + coords[..., 2]

    def wave_vectors(self):
        """k = 2π (n_x/lx, n_y/ly, n_z/lz) for signed integer indices, shape (n_modes, 3)."""
        axes = [2 * np.pi * signed_indices(n) / l
                for n, l in zip(self.dims, self.lengths)]
        kx, ky, kz = np.meshgrid(*axes, indexing="ij")
        return np.stack((kx.ravel(), ky.ravel(), kz.ravel()), axis=1)

    def nyquist_mask(self):
        """True for modes lying on a Nyquist plane of an even dimension."""
        coords = self.integer_coords()
        mask = np.zeros(self.n_modes, dtype=bool)
        for axis, n in enumerate(self.dims):
            nyq = nyquist_index(n)
            if nyq is not None:
                mask |= coords[:, axis] == nyq
        return mask

    def to_dict(self):
        return dict(self._asdict())


def hermitian_pair_index(grid, mode_index):
    """Index of the mode at -k.

    Args:
        grid (Grid or None): grid descriptor; None means an explicit mode list.
        mode_index (int or np.array of ints): flat mode indices.

    Returns:
        int or np.array: indices whose integer coordinates are the componentwise
            negation modulo the grid size. The map is an involution.

    Raises:
        PairingError: if grid is None (explicit mode lists carry their own pairing).
        IndexError: if mode_index is out of range.
    """
    if grid is None:
        raise PairingError(
            "explicit mode list without declared pairing: no grid to pair modes on.")
    idx = np.asarray(mode_index)
    if np.any(idx < 0) or np.any(idx >= grid.n_modes):
        raise IndexError(f"mode index {mode_index} out of range for {grid.n_modes} modes.")
    iz = idx % grid.nz
    iy = (idx // grid.nz) % grid.ny
    ix = idx // (grid.nz * grid.ny)
    partner = grid.flat_index(np.stack((-ix, -iy, -iz), axis=-1))
    if np.ndim(mode_index) == 0:
        return int(partner)
    return partner


def _frozen(array, dtype):
    array = np.array(array, dtype=dtype)
    array.setflags(write=False)
    return array


class SpectralState:
    """ SpectralState is the full field configuration: a finite set of wave-vector
        modes, each with complex electric and magnetic amplitudes, a quadrature
        weight and a frozen Gauss constraint value c(k).
    """

    def __init__(self, k, E, B, w=None, c=None, partners=None, grid=None):
        """
        Args:
            k (array-like with shape (n, 3)): real wave vectors.
            E, B (array-like with shape (n, 3)): complex amplitudes E(k), B(k).
            w (array-like with shape (n,)): quadrature weights, all > 0.
                Unit weights if None.
            c (array-like with shape (n,)): constraint values; recorded as
                c(k) := k·E(k) at ingestion if None.
            partners (array-like with shape (n,)): index of the mode at -k, or -1
                for unpaired modes. Derived from the grid if None and grid is set.
            grid (Grid or None): rectangular grid descriptor, None for an
                explicit mode list.

        Raises:
            ValueError: if shapes disagree or weights are not positive.
            PairingError: if the declared pairing is not an involution or the
                partner wave vector is not the negation of k.
        """
        k = np.array(k, dtype=float).reshape((-1, 3))
        n = k.shape[0]
        E = np.array(E, dtype=complex).reshape((-1, 3))
        B = np.array(B, dtype=complex).reshape((-1, 3))
        if E.shape[0] != n or B.shape[0] != n:
            raise ValueError(
                f"mode count mismatch: k {n}, E {E.shape[0]}, B {B.shape[0]}.")
        if grid is not None and grid.n_modes != n:
            raise ValueError(f"grid has {grid.n_modes} modes, state has {n}.")

        w = np.ones(n) if w is None else np.array(w, dtype=float).reshape(-1)
        if w.shape[0] != n:
            raise ValueError(f"weights: {w.shape[0]} values for {n} modes.")
        if n and not (np.all(np.isfinite(w)) and np.all(w > 0)):
            raise ValueError(f"weights must be finite and > 0, min is {w.min()}.")

        c = dot(k, E) if c is None else np.array(c, dtype=complex).reshape(-1)
        if c.shape[0] != n:
            raise ValueError(f"constraint values: {c.shape[0]} values for {n} modes.")

        if partners is None and grid is not None:
            partners = hermitian_pair_index(grid, np.arange(n))
        if partners is None:
            partners = np.full(n, -1, dtype=int)
        partners = np.array(partners, dtype=int).reshape(-1)
        if partners.shape[0] != n:
            raise ValueError(f"partners: {partners.shape[0]} values for {n} modes.")
        self._check_pairing(k, partners, grid)

        self._k = _frozen(k, float)
        self._E = _frozen(E, complex)
        self._B = _frozen(B, complex)
        self._w = _frozen(w, float)
        self._c = _frozen(c, complex)
        self._partners = _frozen(partners, int)
        self._grid = grid

    @staticmethod
    def _check_pairing(k, partners, grid):
        paired = partners >= 0
        if not np.any(paired):
            return
        n = k.shape[0]
        if np.any(partners >= n):
            raise PairingError(f"partner index out of range for {n} modes.")
        idx = np.nonzero(paired)[0]
        if np.any(partners[partners[idx]] != idx):
            raise PairingError("declared pairing is not an involution.")
        check = idx
        if grid is not None:
            check = idx[~grid.nyquist_mask()[idx]]
        mismatch = np.abs(k[partners[check]] + k[check]).max(initial=0.)
        if mismatch != 0:
            raise PairingError(
                f"partner wave vector is not the negation of k (mismatch {mismatch}).")

    @classmethod
    def from_modes(cls, modes, c=None, grid=None):
        """Builds a state from a list of Mode tuples."""
        partners = [-1 if m.hermitian_partner is None else m.hermitian_partner
                    for m in modes]
        if not modes:
            return cls(np.zeros((0, 3)), np.zeros((0, 3)), np.zeros((0, 3)), grid=grid)
        return cls([m.k for m in modes], [m.E for m in modes], [m.B for m in modes],
                   w=[m.w for m in modes], c=c, partners=partners, grid=grid)

    @property
    def k(self):
        return self._k

    @property
    def E(self):
        return self._E

    @property
    def B(self):
        return self._B

    @property
    def w(self):
        return self._w

    @property
    def c(self):
        return self._c

    @property
    def partners(self):
        return self._partners

    @property
    def grid(self):
        return self._grid

    @property
    def n_modes(self):
        return self._k.shape[0]

    @property
    def has_pairing(self):
        return self.n_modes > 0 and bool(np.all(self._partners >= 0))

    @property
    def metadata(self):
        return self._grid.to_dict() if self._grid is not None else "explicit mode list"

    def mode(self, i):
        partner = int(self._partners[i])
        return Mode(self._k[i], self._E[i], self._B[i], float(self._w[i]),
                    None if partner < 0 else partner)

    @property
    def modes(self):
        return [self.mode(i) for i in range(self.n_modes)]

    def partner_of(self, i):
        """Index of the mode at -k.

        Raises:
            PairingError: if mode i has no declared partner.
        """
        partner = int(self._partners[i])
        if partner < 0:
            if self._grid is not None:
                return hermitian_pair_index(self._grid, i)
            raise PairingError(
                f"mode {i}: explicit mode list without declared pairing.")
        return partner

    def evolve(self, E, B):
        """New state with the given amplitudes; k, w, c, pairing and grid are kept."""
        return SpectralState(self._k, E, B, self._w, self._c, self._partners, self._grid)

    def subset(self, indices):
        """Explicit-mode state made of the given modes (pairing dropped)."""
        indices = np.asarray(indices, dtype=int)
        return SpectralState(self._k[indices], self._E[indices], self._B[indices],
                             self._w[indices], self._c[indices])

    def scaled(self, factor):
        """All amplitudes and constraint values multiplied by factor."""
        return SpectralState(self._k, factor * self._E, factor * self._B, self._w,
                             factor * self._c, self._partners, self._grid)

    def amplitudes(self):
        """Stacked (n, 6) vector [E, B] per mode."""
        return np.concatenate((self._E, self._B), axis=1)

    def is_finite(self):
        return bool(np.all(np.isfinite(self._E)) and np.all(np.isfinite(self._B)))

    def norm_scale(self):
        """Largest amplitude modulus, used as a scale for absolute tolerances."""
        if self.n_modes == 0:
            return 0.
        return float(max(np.abs(self._E).max(), np.abs(self._B).max()))

    def __eq__(self, other):
        if not isinstance(other, SpectralState):
            return NotImplemented
        return (self._grid == other._grid
                and np.array_equal(self._k, other._k)
                and np.array_equal(self._E, other._E)
                and np.array_equal(self._B, other._B)
                and np.array_equal(self._w, other._w)
                and np.array_equal(self._c, other._c)
                and np.array_equal(self._partners, other._partners))

    __hash__ = None

    def __repr__(self):
        return f"SpectralState(n_modes={self.n_modes}, grid={self._grid})"


class ValidationReport:
    """ List of constraint violations with the max magnitude per constraint class. """

    def __init__(self, violations=()):
        self.violations = list(violations)

    def __len__(self):
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    def is_empty(self):
        return not self.violations

    @property
    def max_by_constraint(self):
        result = {}
        for v in self.violations:
            result[v.constraint] = max(result.get(v.constraint, 0.), v.magnitude)
        return result

    def max_violation(self, constraint):
        return self.max_by_constraint.get(constraint, 0.)

    def __repr__(self):
        return f"ValidationReport({self.max_by_constraint})"


def gauss_residuals(state):
    """Per-mode |k·E - c| and |k·B|."""
    return np.abs(dot(state.k, state.E) - state.c), np.abs(dot(state.k, state.B))


def hermitian_residuals(state):
    """Per-mode max(|E(-k) - conj E(k)|, |B(-k) - conj B(k)|); 0 for unpaired modes."""
    res = np.zeros(state.n_modes)
    paired = state.partners >= 0
    if not np.any(paired):
        return res
    idx = np.nonzero(paired)[0]
    p = state.partners[idx]
    res_E = np.abs(state.E[p] - np.conj(state.E[idx])).max(axis=1)
    res_B = np.abs(state.B[p] - np.conj(state.B[idx])).max(axis=1)
    res[idx] = np.maximum(res_E, res_B)
    return res


def max_gauss_violation(state):
    if state.n_modes == 0:
        return 0.
    res_E, res_B = gauss_residuals(state)
    return float(max(res_E.max(), res_B.max()))


def max_hermitian_violation(state):
    if state.n_modes == 0:
        return 0.
    return float(hermitian_residuals(state).max())


def validate(state, tol=TOL_CONSTRAINT):
    """ Checks the state invariants.

    Args:
        state (SpectralState): state to check.
        tol (float): absolute tolerance, > 0.

    Returns:
        ValidationReport: one entry per violating mode and constraint class
            ("finite", "gauss_E", "gauss_B", "hermitian", "nyquist"); empty iff
            every invariant holds within tol.

    Raises:
        ValueError: if tol is not positive.
    """
    if not tol > 0:
        raise ValueError(f"tol: {tol}, must be > 0.")
    violations = []

    def collect(name, residuals):
        for i in np.nonzero(~(residuals <= tol))[0]:
            violations.append(Violation(name, int(i), float(residuals[i])))

    finite = np.all(np.isfinite(state.E), axis=1) & np.all(np.isfinite(state.B), axis=1)
    collect("finite", np.where(finite, 0., np.inf))
    res_E, res_B = gauss_residuals(state)
    collect("gauss_E", np.where(finite, res_E, 0.))
    collect("gauss_B", np.where(finite, res_B, 0.))
    collect("hermitian", np.where(finite, hermitian_residuals(state), 0.))
    if state.grid is not None:
        nyq = state.grid.nyquist_mask()
        amp = np.maximum(np.abs(state.E).max(axis=1, initial=0.),
                         np.abs(state.B).max(axis=1, initial=0.))
        collect("nyquist", np.where(nyq & finite, amp, 0.))

    report = ValidationReport(violations)
    if violations:
        logger.debug("validation found {} violations: {}".format(
            len(violations), report.max_by_constraint))
    return report


def project_constraints(state, tol=TOL_CONSTRAINT):
    """ Projects the state onto the Gauss constraint surface.

    B loses its component along k; the longitudinal part of E is reset to
    c(k) k / |k|^2 while its transverse part is kept. Zero modes are untouched.

    Args:
        state (SpectralState): state to project.
        tol (float): tolerance for the zero-mode check.

    Returns:
        SpectralState: projected state with the same c(k).

    Raises:
        ConstraintError: if c(0) != 0 at a zero mode.
    """
    k = state.k
    k2 = dot(k, k)
    zero = k2 == 0
    bad = zero & (np.abs(state.c) > tol)
    if np.any(bad):
        i = int(np.nonzero(bad)[0][0])
        raise ConstraintError(
            f"mode {i}: c(0) = {state.c[i]}, Gauss law is unsatisfiable at k = 0.")
    safe = np.where(zero, 1., k2)
    coef_E = np.where(zero, 0., (state.c - dot(k, state.E)) / safe)
    coef_B = np.where(zero, 0., dot(k, state.B) / safe)
    E = state.E + coef_E[:, np.newaxis] * k
    B = state.B - coef_B[:, np.newaxis] * k
    return state.evolve(E, B)
