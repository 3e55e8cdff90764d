"""Covariance-matrix algebra for one- and two-mode Gaussian states.

Conventions: quadratures are ordered (x0, y0, x1, y1, ...), the vacuum
variance is 1/2 per quadrature, and the two-mode squeezed pair is phased so
that the joint quadrature difference X_p(theta_p) - X_c(theta_c) is squeezed
when theta_p + theta_c = pi.  All operations are pure functions; covariance
matrices are immutable once constructed.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

TWO_PI = 2.0 * np.pi

_SYMMETRY_TOL = 1e-12
_PHYSICALITY_TOL = 1e-9

# dense scan used to bracket the locked-phase minimum before polishing
_PHASE_GRID = np.linspace(0.0, TWO_PI, 4096, endpoint=False)
_PHASE_COS = np.cos(_PHASE_GRID)
_PHASE_SIN = np.sin(_PHASE_GRID)


class GaussianStateError(ValueError):
    """Raised for invalid covariance matrices or channel parameters."""


def symplectic_form(dim):
    """Standard symplectic form for `dim` modes, block diag([[0,1],[-1,0]])."""
    omega = np.zeros((2 * dim, 2 * dim))
    for k in range(dim):
        omega[2 * k, 2 * k + 1] = 1.0
        omega[2 * k + 1, 2 * k] = -1.0
    return omega


@dataclass(frozen=True)
class CovMatrix:
    """Real symmetric quadrature covariance matrix of 1 or 2 bosonic modes."""

    entries: np.ndarray
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        arr = np.array(self.entries, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise GaussianStateError("covariance matrix must be square")
        if arr.shape[0] not in (2, 4):
            raise GaussianStateError(
                "mode count must be 1 or 2 (matrix size 2 or 4), got shape %s"
                % (arr.shape,)
            )
        if not np.all(np.isfinite(arr)):
            raise GaussianStateError("covariance entries must be finite")
        if np.max(np.abs(arr - arr.T)) > _SYMMETRY_TOL:
            raise GaussianStateError("covariance matrix is not symmetric")
        arr = 0.5 * (arr + arr.T)
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)
        if self.validate and np.min(self.symplectic_eigenvalues()) < 0.5 - _PHYSICALITY_TOL:
            raise GaussianStateError(
                "unphysical covariance matrix: symplectic eigenvalue below 1/2"
            )

    @property
    def dim(self):
        return self.entries.shape[0] // 2

    def mode_block(self, mode_index):
        """The 2x2 quadrature block of one mode."""
        self._check_mode(mode_index)
        k = 2 * mode_index
        return self.entries[k : k + 2, k : k + 2]

    def cross_block(self, mode_a, mode_b):
        """The 2x2 covariance block between two modes."""
        self._check_mode(mode_a)
        self._check_mode(mode_b)
        a, b = 2 * mode_a, 2 * mode_b
        return self.entries[a : a + 2, b : b + 2]

    def symplectic_eigenvalues(self):
        """Symplectic spectrum (>= 1/2 for physical states)."""
        omega = symplectic_form(self.dim)
        eigs = np.linalg.eigvals(omega @ self.entries)
        # eigenvalues of Omega.V come in +/- i*nu pairs
        nus = np.sort(np.abs(eigs))
        return nus[::2].copy()

    def _check_mode(self, mode_index):
        if not 0 <= mode_index < self.dim:
            raise GaussianStateError(
                "mode index %r out of range for %d-mode state" % (mode_index, self.dim)
            )


@dataclass(frozen=True)
class QuadratureSpec:
    """Which quadrature to read out: mode index and LO phase angle."""

    mode_index: int
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta) % TWO_PI)


def vacuum_cov(dim):
    """Vacuum state of `dim` modes: every quadrature variance exactly 1/2."""
    if dim not in (1, 2):
        raise GaussianStateError("dim must be 1 or 2, got %r" % (dim,))
    return CovMatrix(0.5 * np.eye(2 * dim), validate=False)


def two_mode_squeezed_cov(r):
    """Two-mode squeezed vacuum with squeezing parameter r >= 0.

    Each arm alone is thermal with variance cosh(2r)/2; the cross blocks are
    diag(-sinh(2r)/2, +sinh(2r)/2) so the joint difference quadrature reaches
    its squeezed minimum exp(-2r) (two-beam SNL units) at theta_p + theta_c = pi.
    """
    r = float(r)
    if not np.isfinite(r) or r < 0:
        raise GaussianStateError("squeezing parameter must be finite and >= 0, got %r" % r)
    ch = 0.5 * np.cosh(2.0 * r)
    sh = 0.5 * np.sinh(2.0 * r)
    cov = np.diag([ch, ch, ch, ch])
    cov[0, 2] = cov[2, 0] = -sh
    cov[1, 3] = cov[3, 1] = sh
    return CovMatrix(cov, validate=False)


def apply_loss(cov, mode_index, transmission):
    """Beamsplitter loss channel: mix a mode with vacuum at power transmission t.

    The mode's block maps V -> t*V + (1-t)/2 * I and cross covariances with
    other modes scale by sqrt(t).
    """
    t = float(transmission)
    if not 0.0 <= t <= 1.0:
        raise GaussianStateError("transmission must lie in [0, 1], got %r" % t)
    cov._check_mode(mode_index)
    n = cov.entries.shape[0]
    scale = np.ones(n)
    scale[2 * mode_index : 2 * mode_index + 2] = np.sqrt(t)
    out = cov.entries * np.outer(scale, scale)
    k = 2 * mode_index
    out[k : k + 2, k : k + 2] = t * cov.entries[k : k + 2, k : k + 2] + (1.0 - t) * 0.5 * np.eye(2)
    return CovMatrix(out, validate=False)


def phase_rotate(cov, mode_index, phi):
    """Rotate one mode's quadrature frame by phi (symplectic, spectrum preserving)."""
    cov._check_mode(mode_index)
    n = cov.entries.shape[0]
    rot = np.eye(n)
    c, s = np.cos(phi), np.sin(phi)
    k = 2 * mode_index
    rot[k, k] = c
    rot[k, k + 1] = s
    rot[k + 1, k] = -s
    rot[k + 1, k + 1] = c
    return CovMatrix(rot @ cov.entries @ rot.T, validate=False)


def _direction(cov, mode_index, theta):
    cov._check_mode(mode_index)
    u = np.zeros(cov.entries.shape[0])
    u[2 * mode_index] = np.cos(theta)
    u[2 * mode_index + 1] = np.sin(theta)
    return u


def quad_variance(cov, spec):
    """Variance of the generalized quadrature X_theta of one mode."""
    u = _direction(cov, spec.mode_index, spec.theta)
    return float(u @ cov.entries @ u)


def joint_quad_variance(cov, theta_p, theta_c):
    """Variance of the joint quadrature X_p(theta_p) - X_c(theta_c)."""
    if cov.dim != 2:
        raise GaussianStateError("joint quadrature requires a two-mode state")
    u = _direction(cov, 0, theta_p) - _direction(cov, 1, theta_c)
    return float(u @ cov.entries @ u)


def locked_joint_minimum(cov, theta_p=0.0):
    """Minimum joint-difference variance reachable by scanning one LO phase.

    The probe phase is held fixed and only the conjugate phase is scanned,
    mirroring a single-PZT noise lock.  Returns (variance, theta_c).
    """
    if cov.dim != 2:
        raise GaussianStateError("joint quadrature requires a two-mode state")
    v = cov.entries
    up = np.array([np.cos(theta_p), np.sin(theta_p)])
    var_p = up @ v[:2, :2] @ up
    # f(theta_c) = var_p + Var_c(theta_c) - 2*Cov(p, c); expand on the grid
    vc = v[2:, 2:]
    cross = up @ v[:2, 2:]
    f = (
        var_p
        + vc[0, 0] * _PHASE_COS**2
        + vc[1, 1] * _PHASE_SIN**2
        + 2.0 * vc[0, 1] * _PHASE_COS * _PHASE_SIN
        - 2.0 * (cross[0] * _PHASE_COS + cross[1] * _PHASE_SIN)
    )
    k = int(np.argmin(f))
    step = TWO_PI / len(_PHASE_GRID)
    lo, hi = _PHASE_GRID[k] - step, _PHASE_GRID[k] + step

    def objective(theta_c):
        return joint_quad_variance(cov, theta_p, theta_c)

    res = minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    theta_c = float(res.x) % TWO_PI
    return float(res.fun), theta_c


def r_to_detected_db(r):
    """Squeezing in dB of a lossless pair at unit overlap: 10*log10(exp(-2r))."""
    return 10.0 * np.log10(np.exp(-2.0 * float(r)))


def intrinsic_db_to_r(db_below_snl):
    """Squeezing parameter from intrinsic (lossless) squeezing depth in dB.

    `db_below_snl` is the magnitude of the noise reduction, e.g. 2.2 for a
    joint quadrature at -2.2 dB relative to the SNL.
    """
    db = float(db_below_snl)
    if db < 0:
        raise GaussianStateError("squeezing depth in dB must be >= 0, got %r" % db)
    return db * np.log(10.0) / 20.0
