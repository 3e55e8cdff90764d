"""Detected noise power of the two imaging techniques, in shot-noise units.

Per coherence cell, a squeezed pair is prepared, the probe arm sees the
detection transmission and the conjugate arm the detection transmission
times the cell's mask transmission; the cell noises are combined with the
LO weight fractions.  Quantum = locked joint-difference variance relative
to the two-beam SNL; classical = single conjugate-arm variance relative to
the one-beam SNL.  Both normalizations are read off vacuum states at
runtime rather than hard-coded.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .gaussian import (
    QuadratureSpec,
    apply_loss,
    joint_quad_variance,
    locked_joint_minimum,
    quad_variance,
    two_mode_squeezed_cov,
    vacuum_cov,
)
from .scene import single_cell_decomposition

PROBE, CONJUGATE = 0, 1

TECH_CLASSICAL = "classical"
TECH_QUANTUM = "quantum"


class NoiseModelError(ValueError):
    """Raised for invalid source or detection parameters."""


@dataclass(frozen=True)
class TwinBeamParams:
    """Source and detection-chain calibration.

    r: squeezing parameter of the pair source.
    t_probe, t_conj: total power transmission per arm (efficiency x path).
    lock_noise: additive technical noise on the quantum difference signal
        only, in two-beam SNL units.
    electronic_floor: LO power (pixel count x power per pixel) below which a
        measurement cannot clear the detector's electronic noise.
    """

    r: float
    t_probe: float = 1.0
    t_conj: float = 1.0
    lock_noise: float = 0.0
    electronic_floor: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.r) or self.r < 0:
            raise NoiseModelError("squeezing parameter r must be finite and >= 0")
        for name in ("t_probe", "t_conj"):
            t = getattr(self, name)
            if not 0.0 <= t <= 1.0:
                raise NoiseModelError("%s must lie in [0, 1], got %r" % (name, t))
        if self.lock_noise < 0:
            raise NoiseModelError("lock_noise must be >= 0")
        if self.electronic_floor < 0:
            raise NoiseModelError("electronic_floor must be >= 0")


@dataclass(frozen=True)
class NoiseMeasurement:
    """A noise power in SNL units with its measured standard deviation."""

    n: float
    delta_n: float
    technique: str
    valid: bool = True

    def __post_init__(self):
        if self.valid and not self.n > 0:
            raise NoiseModelError("valid measurements need n > 0, got %r" % (self.n,))
        if self.delta_n < 0:
            raise NoiseModelError("delta_n must be >= 0")

    @property
    def n_db(self):
        return 10.0 * np.log10(self.n)


def _snl_joint():
    # two uncorrelated vacua into the difference signal
    return joint_quad_variance(vacuum_cov(2), 0.0, np.pi)


def _snl_single():
    return quad_variance(vacuum_cov(1), QuadratureSpec(0, 0.0))


def _cell_joint_variance(r, t_probe, t_conj_eff):
    cov = two_mode_squeezed_cov(r)
    cov = apply_loss(cov, PROBE, t_probe)
    cov = apply_loss(cov, CONJUGATE, t_conj_eff)
    value, _ = locked_joint_minimum(cov)
    return value


def _cell_single_variance(r, t_conj_eff):
    cov = two_mode_squeezed_cov(r)
    cov = apply_loss(cov, CONJUGATE, t_conj_eff)
    return quad_variance(cov, QuadratureSpec(CONJUGATE, 0.0))


def quantum_noise(decomp, params):
    """Locked twin-beam difference noise for a cell decomposition, SNL units.

    Cells with equal transmission share one evaluation; the lock phase is the
    same for every cell, so per-cell minima coincide with the global lock.
    """
    snl = _snl_joint()
    ts, inverse = np.unique(decomp.transmissions, return_inverse=True)
    cell_vars = np.array(
        [_cell_joint_variance(params.r, params.t_probe, params.t_conj * t) for t in ts]
    )
    n = float(np.dot(decomp.weights, cell_vars[inverse])) / snl
    return n + params.lock_noise


def classical_noise(decomp, params):
    """Single conjugate-beam excess noise for a cell decomposition, SNL units."""
    snl = _snl_single()
    ts, inverse = np.unique(decomp.transmissions, return_inverse=True)
    cell_vars = np.array(
        [_cell_single_variance(params.r, params.t_conj * t) for t in ts]
    )
    return float(np.dot(decomp.weights, cell_vars[inverse])) / snl


def technique_noise(technique, decomp, params):
    if technique == TECH_QUANTUM:
        return quantum_noise(decomp, params)
    if technique == TECH_CLASSICAL:
        return classical_noise(decomp, params)
    raise NoiseModelError("unknown technique %r" % (technique,))


def lo_power_check(lo, params, power_per_pixel):
    """Whether an LO is bright enough to clear the electronic noise floor.

    An empty LO is always invalid; otherwise the LO power (pixel count times
    power per pixel) must reach the configured floor.
    """
    count = lo.pixel_count
    if count == 0:
        return False
    return count * float(power_per_pixel) >= params.electronic_floor


def detected_noise_floor(params):
    """Least detected quantum noise reachable at unit overlap over all r.

    For balanced arms this is 1 - t + lock_noise; unbalanced arms bottom out
    at tanh(2r) = 2*sqrt(t_p*t_c)/(t_p+t_c) and rise again at larger r.
    """
    a = 0.5 * (params.t_probe + params.t_conj)
    b = np.sqrt(params.t_probe * params.t_conj)
    return 1.0 - a + np.sqrt(max(a * a - b * b, 0.0)) + params.lock_noise


def calibrate_r(db_below_snl, t_probe=1.0, t_conj=1.0, lock_noise=0.0):
    """Solve for r so the detected quantum noise at unit overlap is -db dB.

    The detected baseline includes the lock noise, matching how squeezing is
    measured with the lock engaged.  Raises if the target is deeper than the
    loss-limited bound.
    """
    db = float(db_below_snl)
    if db < 0:
        raise NoiseModelError("squeezing depth in dB must be >= 0, got %r" % db)
    target = 10.0 ** (-db / 10.0)
    probe = TwinBeamParams(r=0.0, t_probe=t_probe, t_conj=t_conj, lock_noise=lock_noise)
    floor = detected_noise_floor(probe)
    if target < floor - 1e-12:
        raise NoiseModelError(
            "detected squeezing of -%.4g dB is unreachable: losses bound the "
            "noise at %.6g SNL (%.4g dB)" % (db, floor, 10.0 * np.log10(floor))
        )

    unit = single_cell_decomposition(1.0)

    def detected(r):
        p = TwinBeamParams(r=r, t_probe=t_probe, t_conj=t_conj, lock_noise=lock_noise)
        return quantum_noise(unit, p) - target

    if detected(0.0) <= 1e-14:
        return 0.0
    # the noise is monotone decreasing in r up to the unbalanced-loss optimum;
    # beyond r ~ 12 the squeezed term is below double precision anyway
    a, b = np.sqrt(t_probe * t_conj), 0.5 * (t_probe + t_conj)
    r_best = np.inf if a == b else 0.25 * np.log((b + a) / (b - a))
    hi = min(r_best, 12.0)
    if detected(hi) > 0.0:
        raise NoiseModelError(
            "detected squeezing of -%.4g dB is unreachable: losses bound the "
            "noise at %.6g SNL (%.4g dB)" % (db, floor, 10.0 * np.log10(floor))
        )
    return float(brentq(detected, 0.0, hi, xtol=1e-14, rtol=8.9e-16))
