"""Geometric phases of the transported electronic state and holonomies of
the induced vector potential.

The transported state used here is the single-branch form

    |-(theta)> = e^{i alpha(theta)} / sqrt(2) * (e^{-i xi theta},
                                                 e^{+i xi theta}),

with an arbitrary differentiable gauge alpha.  (This is the opposite
eigenbranch from ``model.adiabatic_eigensystem``'s state_minus, which
carries a relative minus sign on the second component; the two give
identical overlap moduli, connection integrals and open-path phases, so
everything computed here is branch independent.)

The open-path (Pancharatnam) geometric phase is

    gamma_g = arg <-(theta0)|-(theta)>
              + i * int_{theta0}^{theta} <-(t')| d/dt' |-(t')> dt'
            = arg cos[xi (theta - theta0)],

gauge independent even though each term separately shifts by
+-(alpha(theta) - alpha(theta0)).  It equals 0 or pi away from the
orthogonality points xi (theta - theta0) = pi/2 mod pi, where it jumps by
pi and is undefined.  A loop around the intersection therefore picks up
e^{2 pi i xi}: -1 in the linear model (one jump per loop), +1 in the
quadratic model (two jumps per loop).

Holonomy line integrals of the vector potential (xi / r) e_theta reduce to
xi times the accumulated polar angle, evaluated exactly per polygonal
segment via atan2.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .model import SingularityError
from .util import wrap_angle

MAX_HARMONICS = 64


class OrthogonalStatesError(ValueError):
    """The overlap between the two states vanishes; no relative phase."""


class PhaseUndefinedError(OrthogonalStatesError):
    """Evaluation lands on a phase jump, where gamma_g has no value."""


@dataclass(frozen=True)
class GaugeSpec:
    """Differentiable gauge alpha(theta) = a0 + sum_n [a_n cos(n theta)
    + b_n sin(n theta)] + linear * theta, with at most 64 harmonics.

    Presets: ``zero`` (the display gauge alpha = 0) and
    ``single_valued(xi)`` (alpha = xi theta, which makes the transported
    state single-valued around the intersection).
    """

    a0: float = 0.0
    cos_coeffs: tuple = ()
    sin_coeffs: tuple = ()
    linear: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "cos_coeffs", tuple(float(c) for c in self.cos_coeffs))
        object.__setattr__(self, "sin_coeffs", tuple(float(c) for c in self.sin_coeffs))
        n = max(len(self.cos_coeffs), len(self.sin_coeffs))
        if n > MAX_HARMONICS:
            raise ValueError(f"at most {MAX_HARMONICS} harmonics, got {n}")
        allv = (self.a0, self.linear) + self.cos_coeffs + self.sin_coeffs
        if not all(math.isfinite(v) for v in allv):
            raise ValueError("gauge coefficients must be finite")

    @classmethod
    def zero(cls) -> "GaugeSpec":
        return cls()

    @classmethod
    def single_valued(cls, xi: float) -> "GaugeSpec":
        return cls(linear=float(xi))

    def _harmonics(self):
        na = len(self.cos_coeffs)
        nb = len(self.sin_coeffs)
        n = max(na, nb)
        a = np.zeros(n)
        b = np.zeros(n)
        a[:na] = self.cos_coeffs
        b[:nb] = self.sin_coeffs
        return np.arange(1, n + 1), a, b

    def alpha(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = self.a0 + self.linear * theta
        if self.cos_coeffs or self.sin_coeffs:
            n, a, b = self._harmonics()
            t = theta[..., None]
            out = out + (a * np.cos(n * t) + b * np.sin(n * t)).sum(axis=-1)
        return out if np.ndim(out) else float(out)

    def alpha_prime(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.full_like(theta, self.linear)
        if self.cos_coeffs or self.sin_coeffs:
            n, a, b = self._harmonics()
            t = theta[..., None]
            out = out + (-(a * n) * np.sin(n * t) + (b * n) * np.cos(n * t)).sum(axis=-1)
        return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class BerryPhaseResult:
    theta0: float
    theta: float
    gamma_g: float
    overlap_modulus: float
    jumps: list = field(default_factory=list)
    gauge_used: GaugeSpec = field(default_factory=GaugeSpec)
    # the two gauge-dependent pieces whose sum is gauge invariant
    pancharatnam_term: float = 0.0
    connection_term: float = 0.0


@dataclass(frozen=True)
class PlanarPath:
    """Ordered planar samples, treated as a polygonal chain.

    No sample may sit within 1e-9 of the origin; a closed path must
    repeat its first sample to 1e-12.
    """

    samples: np.ndarray
    closed: bool = False

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise ValueError("path needs an (N, 2) array with N >= 2")
        object.__setattr__(self, "samples", pts)
        if np.min(np.hypot(pts[:, 0], pts[:, 1])) <= 1e-9:
            raise SingularityError("path passes through the conical intersection")
        if self.closed and np.max(np.abs(pts[0] - pts[-1])) > 1e-12:
            raise ValueError("closed path must end where it starts (to 1e-12)")


@dataclass(frozen=True)
class HolonomyResult:
    line_integral: float
    winding: int | None
    phase_factor: complex


def bo_state(theta: float, xi: float, gauge: GaugeSpec | None = None) -> np.ndarray:
    """Transported state e^{i alpha}/sqrt(2) (e^{-i xi theta}, e^{i xi theta})."""
    alpha = gauge.alpha(theta) if gauge is not None else 0.0
    pref = np.exp(1j * alpha) / math.sqrt(2.0)
    return pref * np.array([np.exp(-1j * xi * theta), np.exp(1j * xi * theta)])


def pancharatnam_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> float:
    """arg <a|b> in (-pi, pi]; raises OrthogonalStatesError when |<a|b>| < tol."""
    overlap = np.vdot(a, b)
    if abs(overlap) < tol:
        raise OrthogonalStatesError(
            f"overlap magnitude {abs(overlap):.3e} below {tol:g}; relative phase undefined"
        )
    return wrap_angle(np.angle(overlap))


def detect_phase_jumps(xi: float, theta0: float, interval) -> list:
    """All dtheta = theta - theta0 with theta in [start, stop) where
    cos(xi dtheta) = 0, i.e. dtheta = (2n+1) pi / (2 xi).  Analytic root
    formula, no scanning.  Sorted ascending."""
    start, stop = float(interval[0]), float(interval[1])
    if not stop > start:
        raise ValueError("interval must satisfy start < stop")
    c = math.pi / (2.0 * xi)
    lo = start - theta0
    hi = stop - theta0
    # (2n+1) c in [lo, hi): bracket n conservatively, then filter exactly
    bounds = sorted(((lo / c - 1.0) / 2.0, (hi / c - 1.0) / 2.0))
    n_min = math.floor(bounds[0]) - 1
    n_max = math.ceil(bounds[1]) + 1
    out = []
    for n in range(n_min, n_max + 1):
        x = (2 * n + 1) * c
        if lo <= x < hi:
            out.append(x)
    out.sort()
    return out


def mab_phase_factor(xi: float) -> complex:
    """Loop phase factor e^{2 pi i xi} for one winding: exactly (-1)^(2 xi)."""
    two_xi = round(2.0 * xi)
    if abs(2.0 * xi - two_xi) > 1e-9 or two_xi == 0:
        raise ValueError(f"xi must be a nonzero half-integer or integer, got {xi}")
    return complex(-1.0 if two_xi % 2 else 1.0)


def noncyclic_berry_phase(
    xi: float,
    theta0: float,
    theta: float,
    gauge: GaugeSpec | None = None,
    grid_n: int = 10_000,
    overlap_tol: float = 1e-9,
) -> BerryPhaseResult:
    """Open-path geometric phase of the transported state.

    The overlap term is exact complex arithmetic; the connection term
    i <-|d/dtheta'|-> = -alpha'(theta') is integrated by composite Simpson
    on a uniform grid of ``grid_n`` intervals (rounded up to even), using
    the analytic gauge derivative.  The sum collapses to
    arg cos[xi (theta - theta0)] for any differentiable gauge.

    Raises PhaseUndefinedError when the endpoints are orthogonal (the
    evaluation sits on a pi jump).
    """
    if grid_n < 100:
        raise ValueError(f"grid_n must be >= 100, got {grid_n}")
    if gauge is None:
        gauge = GaugeSpec.zero()
    a = bo_state(theta0, xi, gauge)
    b = bo_state(theta, xi, gauge)
    overlap = np.vdot(a, b)
    if abs(overlap) < overlap_tol:
        raise PhaseUndefinedError(
            f"endpoints orthogonal at dtheta = {theta - theta0:g}: "
            "evaluation sits on a pi phase jump"
        )
    pan = wrap_angle(np.angle(overlap))
    if theta == theta0:
        connection = 0.0
    else:
        n_eff = grid_n + (grid_n % 2)
        grid = np.linspace(theta0, theta, n_eff + 1)
        connection = -float(simpson(gauge.alpha_prime(grid), x=grid))
    gamma = wrap_angle(pan + connection)
    lo, hi = sorted((0.0, theta - theta0))
    jumps = detect_phase_jumps(xi, 0.0, (lo, hi)) if hi > lo else []
    return BerryPhaseResult(
        theta0=theta0,
        theta=theta,
        gamma_g=gamma,
        overlap_modulus=abs(overlap),
        jumps=jumps,
        gauge_used=gauge,
        pancharatnam_term=pan,
        connection_term=connection,
    )


def holonomy_line_integral(xi: float, path: PlanarPath) -> HolonomyResult:
    """Line integral of (xi / r) e_theta along the path.

    The integrand is the exact differential of the polar angle, so each
    straight segment contributes exactly the signed angle between its
    endpoint position vectors; segments subtending >= pi/2 are refused as
    too coarse to keep the winding unambiguous.  Closed paths report the
    integer winding and the unit phase factor e^{i integral}.
    """
    pts = path.samples
    x0, y0 = pts[:-1, 0], pts[:-1, 1]
    x1, y1 = pts[1:, 0], pts[1:, 1]
    increments = np.arctan2(x0 * y1 - y0 * x1, x0 * x1 + y0 * y1)
    if np.any(np.abs(increments) >= 0.5 * math.pi):
        raise ValueError(
            "path too coarse: a segment subtends >= pi/2 at the origin; resample"
        )
    total_angle = float(np.sum(increments))
    line_integral = xi * total_angle
    winding = int(round(total_angle / (2.0 * math.pi))) if path.closed else None
    phase_factor = complex(np.exp(1j * line_integral))
    return HolonomyResult(line_integral, winding, phase_factor)


def load_path_csv(path_file) -> PlanarPath:
    """Read a planar path from CSV with mandatory header ``x,y``.

    The path is marked closed when the first and last rows coincide
    to 1e-12.
    """
    with open(path_file, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path_file}: empty path file") from None
        if [h.strip().lower() for h in header] != ["x", "y"]:
            raise ValueError(f"{path_file}: expected header 'x,y', got {header!r}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise ValueError(f"{path_file}:{lineno}: expected two columns")
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                raise ValueError(
                    f"{path_file}:{lineno}: non-numeric coordinates {row!r}"
                ) from None
    if len(rows) < 2:
        raise ValueError(f"{path_file}: need at least two samples")
    pts = np.asarray(rows, dtype=float)
    closed = bool(np.max(np.abs(pts[0] - pts[-1])) <= 1e-12)
    return PlanarPath(samples=pts, closed=closed)
