"""Adiabatic spin dynamics under prescribed pseudorotation.

The nuclear angle theta(t) is a prescribed schedule (no back-reaction);
the radial coordinate is frozen at r_ref.  Two pictures are propagated:

* Schroedinger: the two-level state under the lab-frame electronic
  Hamiltonian H_e(r_ref, theta(t)), or under the rotating-frame spin
  Hamiltonian k^2 sigma_x - xi thetadot(t) sigma_z, i.e. (1/2) B . sigma
  with B = (2 k^2, 0, -2 xi thetadot).
* Heisenberg: the 3x3 transfer matrix R with sigma_i(t) = sum_j R_ij(t)
  sigma_j(0), solving Rdot = [B]_x R for the same B.

Both propagators take a single fixed-size step per grid interval using the
two-node Gauss commutator Magnus rule (fourth order).  Each step is an
exact group element (closed-form SU(2)/SO(3) exponential), so norm and
orthogonality are preserved to roundoff; states and matrices are still
renormalized every ``RENORM_EVERY`` steps as a guard, and the worst drift
seen before any renormalization is recorded on the trajectory.

The planar autocorrelation pair reduces to scalars: with sigma_i(t) a real
combination of sigma_j(0), the symmetrized products collapse through the
anticommutator {sigma_i, sigma_j} = 2 delta_ij, leaving

    C(t) = (R_xx + R_yy) / 2,      S(t) = (R_yx - R_xy) / 2.

Independently, the slow-drive autocorrelation system

    Cdot = 2 xi thetadot S - xi thetadot sin(2 k^2 t)
    Sdot = -2 xi thetadot C + xi thetadot (1 - cos(2 k^2 t))

is integrated literally (classic RK4) with C(0) = 1, S(0) = 0.  Averaging
either trace over one fast period pi/k^2 gives the slow envelopes; for the
literal system these converge to

    Cbar = (1 + cos[2 xi (theta - theta0)]) / 2
    Sbar = -sin[2 xi (theta - theta0)] / 2

as the drive slows.  The exact Heisenberg averages follow a different
envelope (the fast cross-correlators do not vanish on average); both are
computed so they can be compared side by side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .model import ModelParams, adiabatic_eigensystem
from .util import wrap_angle

RENORM_EVERY = 1000
_CHUNK = 1 << 16
_GAUSS_OFFSET = math.sqrt(3.0) / 6.0
_MAGNUS_CROSS = math.sqrt(3.0) / 12.0


class StepSizeError(ValueError):
    """The requested step does not resolve the fast electronic scale."""


@dataclass(frozen=True)
class PseudorotationSchedule:
    """Prescribed theta(t): uniform rotation or a smooth ramp.

    ``uniform``: theta = theta0 + omega t.
    ``smooth_ramp``: thetadot = omega_max sin^2(pi t / (2 ramp_time)) for
    t < ramp_time, then omega_max; thetadot(0) = 0 and the rate grows
    monotonically to omega_max within ramp_time.
    """

    theta0: float
    duration: float
    form: str
    omega: float
    ramp_time: float = 0.0

    def __post_init__(self):
        vals = (self.theta0, self.duration, self.omega, self.ramp_time)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("schedule parameters must be finite")
        if self.duration <= 0.0:
            raise ValueError("duration must be > 0")
        if self.form not in ("uniform", "smooth_ramp"):
            raise ValueError(f"unknown schedule form {self.form!r}")
        if self.form == "smooth_ramp" and self.ramp_time <= 0.0:
            raise ValueError("smooth_ramp needs ramp_time > 0")

    @classmethod
    def uniform(cls, omega: float, duration: float, theta0: float = 0.0):
        return cls(theta0=theta0, duration=duration, form="uniform", omega=omega)

    @classmethod
    def smooth_ramp(
        cls, omega_max: float, ramp_time: float, duration: float, theta0: float = 0.0
    ):
        return cls(
            theta0=theta0,
            duration=duration,
            form="smooth_ramp",
            omega=omega_max,
            ramp_time=ramp_time,
        )

    def theta(self, t):
        t = np.asarray(t, dtype=float)
        if self.form == "uniform":
            out = self.theta0 + self.omega * t
        else:
            T = self.ramp_time
            ramp = np.minimum(t, T)
            # integral of sin^2(pi s / (2T)) from 0 to ramp
            area = 0.5 * ramp - (T / (2.0 * np.pi)) * np.sin(np.pi * ramp / T)
            out = self.theta0 + self.omega * (area + np.maximum(t - T, 0.0))
        return out if out.ndim else float(out)

    def theta_dot(self, t):
        t = np.asarray(t, dtype=float)
        if self.form == "uniform":
            out = np.full_like(t, self.omega)
        else:
            x = np.clip(t / self.ramp_time, 0.0, 1.0)
            out = self.omega * np.sin(0.5 * np.pi * x) ** 2
        return out if out.ndim else float(out)

    @property
    def peak_rate(self) -> float:
        return abs(self.omega)


@dataclass(frozen=True)
class SpinTrajectory:
    """Propagated two-level state: unit vectors on a strictly increasing
    time grid, with <psi|H(t)|psi> recorded per sample."""

    times: np.ndarray
    states: np.ndarray
    frame: str
    energies: np.ndarray
    norm_drift: float = 0.0


@dataclass(frozen=True)
class RotationTrajectory:
    """Heisenberg transfer matrices: R(0) = I, orthogonal with det +1."""

    times: np.ndarray
    R: np.ndarray
    orthogonality_drift: float = 0.0


@dataclass(frozen=True)
class AutocorrelationTrace:
    """C(t), S(t) plus (optionally) their sliding one-fast-period means.

    ``window`` is the averaging window length in time (pi/k^2) and
    ``window_partial`` flags samples whose window was clipped at the trace
    ends (one-sided average).  Alignment is centered; an even sample count
    per window sits half a sample off-center.
    """

    times: np.ndarray
    C: np.ndarray
    S: np.ndarray
    C_bar: np.ndarray | None = None
    S_bar: np.ndarray | None = None
    window: float | None = None
    window_partial: np.ndarray | None = None
    window_alignment: str = "centered"
    source: str = "heisenberg"


def _check_dt(params: ModelParams, dt: float) -> None:
    if params.k <= 0.0:
        raise ValueError("propagation requires k > 0 (fast scale 2 k^2)")
    if not (math.isfinite(dt) and dt > 0.0):
        raise ValueError(f"dt must be finite and > 0, got {dt}")
    bound = math.pi / (50.0 * params.k * params.k)
    if dt > bound * (1.0 + 1e-12):
        raise StepSizeError(
            f"dt = {dt:g} does not resolve the fast scale 2k^2 = "
            f"{2.0 * params.k ** 2:g}; require dt <= pi/(50 k^2) = {bound:g}"
        )


def _time_grid(schedule: PseudorotationSchedule, dt: float):
    n_steps = max(1, int(math.ceil(schedule.duration / dt - 1e-9)))
    return n_steps, dt * np.arange(n_steps + 1)


def _stored_indices(n_steps: int, store_every: int) -> np.ndarray:
    if store_every < 1:
        raise ValueError("store_every must be >= 1")
    idx = np.arange(0, n_steps + 1, store_every)
    if idx[-1] != n_steps:
        idx = np.append(idx, n_steps)
    return idx


def _magnus_vectors(field, t_starts: np.ndarray, dt: float) -> np.ndarray:
    """Per-step Bloch rotation vectors of the two-node Magnus rule.

    ``field(t) -> (M, 3)`` evaluates B; returned w satisfy
    step = exp([w]_x) in SO(3), or exp(-i (w/2).sigma) in SU(2).
    """
    b1 = field(t_starts + (0.5 - _GAUSS_OFFSET) * dt)
    b2 = field(t_starts + (0.5 + _GAUSS_OFFSET) * dt)
    return 0.5 * dt * (b1 + b2) - _MAGNUS_CROSS * dt * dt * np.cross(b1, b2)


def _su2_steps(w: np.ndarray) -> np.ndarray:
    """Closed-form exp(-i (w/2).sigma) for a batch of rotation vectors."""
    phi = 0.5 * np.linalg.norm(w, axis=1)
    denom = np.where(phi > 0.0, 2.0 * phi, 1.0)
    n = w / denom[:, None]
    c = np.cos(phi)
    s = np.sin(phi)
    U = np.empty((len(w), 2, 2), dtype=complex)
    U[:, 0, 0] = c - 1j * s * n[:, 2]
    U[:, 0, 1] = -s * n[:, 1] - 1j * s * n[:, 0]
    U[:, 1, 0] = s * n[:, 1] - 1j * s * n[:, 0]
    U[:, 1, 1] = c + 1j * s * n[:, 2]
    return U


def _so3_steps(w: np.ndarray) -> np.ndarray:
    """Closed-form rotation matrices exp([w]_x) for a batch of vectors."""
    phi = np.linalg.norm(w, axis=1)
    denom = np.where(phi > 0.0, phi, 1.0)
    n = w / denom[:, None]
    K = np.zeros((len(w), 3, 3))
    K[:, 0, 1] = -n[:, 2]
    K[:, 0, 2] = n[:, 1]
    K[:, 1, 0] = n[:, 2]
    K[:, 1, 2] = -n[:, 0]
    K[:, 2, 0] = -n[:, 1]
    K[:, 2, 1] = n[:, 0]
    s = np.sin(phi)[:, None, None]
    c1 = (1.0 - np.cos(phi))[:, None, None]
    return np.eye(3) + s * K + c1 * (K @ K)


def _lab_field(params: ModelParams, schedule: PseudorotationSchedule):
    g = params.coupling_at(params.require_r_ref())

    def field(t):
        ph = 2.0 * params.xi * schedule.theta(t)
        return np.stack(
            [2.0 * g * np.cos(ph), 2.0 * g * np.sin(ph), np.zeros_like(ph)], axis=-1
        )

    return field


def _rotating_field(params: ModelParams, schedule: PseudorotationSchedule):
    two_k2 = 2.0 * params.k * params.k

    def field(t):
        td = np.asarray(schedule.theta_dot(t), dtype=float)
        return np.stack(
            [np.full_like(td, two_k2), np.zeros_like(td), -2.0 * params.xi * td],
            axis=-1,
        )

    return field


def bloch_vector(states: np.ndarray) -> np.ndarray:
    """Pauli expectation values (<sx>, <sy>, <sz>) for (..., 2) states."""
    states = np.asarray(states)
    c0 = states[..., 0]
    c1 = states[..., 1]
    cross = np.conj(c0) * c1
    return np.stack(
        [2.0 * cross.real, 2.0 * cross.imag, np.abs(c0) ** 2 - np.abs(c1) ** 2],
        axis=-1,
    )


def propagate_tdse(
    params: ModelParams,
    schedule: PseudorotationSchedule,
    dt: float,
    frame: str = "lab",
    initial_state: np.ndarray | None = None,
    store_every: int = 1,
) -> SpinTrajectory:
    """Unitary evolution of the two-level state on a fixed grid.

    ``frame="lab"`` uses H_e(r_ref, theta(t)); ``frame="rotating"`` uses
    k^2 sigma_x - xi thetadot(t) sigma_z.  The initial state defaults to
    the lower adiabatic state at theta0 (which in the rotating frame is
    (1, -1)/sqrt(2) independent of theta0).
    """
    _check_dt(params, dt)
    if frame not in ("lab", "rotating"):
        raise ValueError(f"unknown frame {frame!r}")
    n_steps, times = _time_grid(schedule, dt)
    idx = _stored_indices(n_steps, store_every)

    if initial_state is None:
        if frame == "lab":
            psi = adiabatic_eigensystem(
                params, params.require_r_ref(), schedule.theta0
            ).state_minus.copy()
        else:
            psi = np.array([1.0, -1.0], dtype=complex) / math.sqrt(2.0)
    else:
        psi = np.asarray(initial_state, dtype=complex).copy()
        nrm = np.linalg.norm(psi)
        if not 0.0 < nrm < np.inf:
            raise ValueError("initial state must be normalizable")
        psi /= nrm

    field = _lab_field(params, schedule) if frame == "lab" else _rotating_field(
        params, schedule
    )

    stored = np.empty((len(idx), 2), dtype=complex)
    stored[0] = psi
    pos = 1
    drift = 0.0
    next_store = idx[pos] if pos < len(idx) else -1
    step_no = 0
    for lo in range(0, n_steps, _CHUNK):
        hi = min(lo + _CHUNK, n_steps)
        U = _su2_steps(_magnus_vectors(field, times[lo:hi], dt))
        for i in range(hi - lo):
            psi = U[i] @ psi
            step_no += 1
            if step_no % RENORM_EVERY == 0:
                nrm = np.linalg.norm(psi)
                drift = max(drift, abs(nrm - 1.0))
                psi = psi / nrm
            if step_no == next_store:
                stored[pos] = psi
                pos += 1
                next_store = idx[pos] if pos < len(idx) else -1
    drift = max(drift, abs(np.linalg.norm(psi) - 1.0))

    t_stored = times[idx]
    c0 = stored[:, 0]
    c1 = stored[:, 1]
    if frame == "lab":
        g = params.coupling_at(params.require_r_ref())
        ph = 2.0 * params.xi * np.asarray(schedule.theta(t_stored))
        energies = 2.0 * g * np.real(np.conj(c0) * c1 * np.exp(-1j * ph))
    else:
        td = np.asarray(schedule.theta_dot(t_stored))
        energies = 2.0 * params.k**2 * np.real(
            np.conj(c0) * c1
        ) - params.xi * td * (np.abs(c0) ** 2 - np.abs(c1) ** 2)

    return SpinTrajectory(
        times=t_stored,
        states=stored,
        frame=frame,
        energies=energies,
        norm_drift=float(drift),
    )


def propagate_heisenberg(
    params: ModelParams,
    schedule: PseudorotationSchedule,
    dt: float,
    store_every: int = 1,
) -> RotationTrajectory:
    """Integrate Rdot = [B]_x R, B = (2k^2, 0, -2 xi thetadot(t)), R(0) = I."""
    _check_dt(params, dt)
    n_steps, times = _time_grid(schedule, dt)
    idx = _stored_indices(n_steps, store_every)
    field = _rotating_field(params, schedule)

    R = np.eye(3)
    stored = np.empty((len(idx), 3, 3))
    stored[0] = R
    pos = 1
    next_store = idx[pos] if pos < len(idx) else -1
    drift = 0.0
    step_no = 0
    for lo in range(0, n_steps, _CHUNK):
        hi = min(lo + _CHUNK, n_steps)
        steps = _so3_steps(_magnus_vectors(field, times[lo:hi], dt))
        for i in range(hi - lo):
            R = steps[i] @ R
            step_no += 1
            if step_no % RENORM_EVERY == 0:
                drift = max(drift, float(np.max(np.abs(R.T @ R - np.eye(3)))))
                u, _, vt = np.linalg.svd(R)
                R = u @ vt
            if step_no == next_store:
                stored[pos] = R
                pos += 1
                next_store = idx[pos] if pos < len(idx) else -1
    drift = max(drift, float(np.max(np.abs(R.T @ R - np.eye(3)))))

    return RotationTrajectory(times=times[idx], R=stored, orthogonality_drift=drift)


def autocorrelation_from_rotation(traj: RotationTrajectory) -> AutocorrelationTrace:
    """Planar autocorrelation scalars C = (R_xx + R_yy)/2, S = (R_yx - R_xy)/2."""
    R = traj.R
    C = 0.5 * (R[:, 0, 0] + R[:, 1, 1])
    S = 0.5 * (R[:, 1, 0] - R[:, 0, 1])
    return AutocorrelationTrace(times=traj.times.copy(), C=C, S=S, source="heisenberg")


def integrate_model_ode(
    params: ModelParams, schedule: PseudorotationSchedule, dt: float
) -> AutocorrelationTrace:
    """Classic RK4 on the literal slow-drive autocorrelation system.

    Cdot = 2 xi thetadot S - xi thetadot sin(2 k^2 t),
    Sdot = -2 xi thetadot C + xi thetadot (1 - cos(2 k^2 t)),
    C(0) = 1, S(0) = 0.  With thetadot = 0 the right-hand side vanishes
    and the trace stays at (1, 0).
    """
    _check_dt(params, dt)
    n_steps, times = _time_grid(schedule, dt)
    xi = params.xi
    two_k2 = 2.0 * params.k * params.k

    # rates and fast phases on the half-step grid t_j = j * dt/2
    half_t = 0.5 * dt * np.arange(2 * n_steps + 1)
    td = np.asarray(schedule.theta_dot(half_t), dtype=float)
    sin_f = np.sin(two_k2 * half_t)
    cos_f = np.cos(two_k2 * half_t)

    C = np.empty(n_steps + 1)
    S = np.empty(n_steps + 1)
    c, s = 1.0, 0.0
    C[0], S[0] = c, s
    h = dt
    for i in range(n_steps):
        j = 2 * i
        td0, tdh, td1 = td[j], td[j + 1], td[j + 2]
        sf0, sfh, sf1 = sin_f[j], sin_f[j + 1], sin_f[j + 2]
        cf0, cfh, cf1 = cos_f[j], cos_f[j + 1], cos_f[j + 2]

        k1c = xi * td0 * (2.0 * s - sf0)
        k1s = xi * td0 * (1.0 - cf0 - 2.0 * c)
        c2 = c + 0.5 * h * k1c
        s2 = s + 0.5 * h * k1s
        k2c = xi * tdh * (2.0 * s2 - sfh)
        k2s = xi * tdh * (1.0 - cfh - 2.0 * c2)
        c3 = c + 0.5 * h * k2c
        s3 = s + 0.5 * h * k2s
        k3c = xi * tdh * (2.0 * s3 - sfh)
        k3s = xi * tdh * (1.0 - cfh - 2.0 * c3)
        c4 = c + h * k3c
        s4 = s + h * k3s
        k4c = xi * td1 * (2.0 * s4 - sf1)
        k4s = xi * td1 * (1.0 - cf1 - 2.0 * c4)

        c += h / 6.0 * (k1c + 2.0 * k2c + 2.0 * k3c + k4c)
        s += h / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
        C[i + 1], S[i + 1] = c, s

    return AutocorrelationTrace(times=times, C=C, S=S, source="model_ode")


def adiabatic_average(
    trace: AutocorrelationTrace,
    params: ModelParams,
    min_samples_per_period: int = 20,
) -> AutocorrelationTrace:
    """Fill C_bar, S_bar with centered sliding means over one fast period.

    The window is pi/k^2 (the period of the fast frequency 2k^2), rounded
    to a whole number of samples; the boxcar sum over exactly one on-grid
    period annihilates every fast harmonic.  Samples whose window is
    clipped at the trace ends are averaged one-sided and flagged in
    ``window_partial``.
    """
    if params.k <= 0.0:
        raise ValueError("averaging requires k > 0 (fast period pi/k^2)")
    times = trace.times
    if len(times) < 2:
        raise ValueError("trace too short to average")
    dt_all = np.diff(times)
    dt = dt_all[0]
    if np.max(np.abs(dt_all - dt)) > 1e-9 * max(dt, 1.0):
        raise ValueError("averaging requires a uniform time grid")
    period = math.pi / (params.k * params.k)
    per_window = period / dt
    if per_window < min_samples_per_period - 1e-9:
        raise ValueError(
            f"insufficient sampling: {per_window:.2f} samples per fast period "
            f"pi/k^2 = {period:g}, need >= {min_samples_per_period}"
        )
    w = int(round(per_window))
    n = len(times)
    lo = np.clip(np.arange(n) - w // 2, 0, None)
    hi = np.minimum(lo + w, n)
    lo = np.minimum(lo, hi - 1)
    count = hi - lo
    csC = np.concatenate([[0.0], np.cumsum(trace.C)])
    csS = np.concatenate([[0.0], np.cumsum(trace.S)])
    C_bar = (csC[hi] - csC[lo]) / count
    S_bar = (csS[hi] - csS[lo]) / count
    return replace(
        trace,
        C_bar=C_bar,
        S_bar=S_bar,
        window=period,
        window_partial=count < w,
        window_alignment="centered",
    )


def averaged_closed_form(params: ModelParams, delta_theta):
    """Slow envelopes of the averaged autocorrelation system:
    Cbar = (1 + cos 2 xi dtheta)/2, Sbar = -sin(2 xi dtheta)/2.

    Accepts scalars or arrays (and analytic continuation to complex
    arguments, which keeps derivative checks exact).
    """
    phase = 2.0 * params.xi * np.asarray(delta_theta)
    return 0.5 * (1.0 + np.cos(phase)), -0.5 * np.sin(phase)


def relative_angle(trace: AutocorrelationTrace, gap_tol: float = 1e-6) -> np.ndarray:
    """Planar angle phi = atan2(-2 Sbar, 2 Cbar - 1), unwrapped.

    For slow drives phi tracks 2 xi (theta - theta0), twice the transported
    phase (the usual factor 2 of a spin-1/2 rotation).  Samples where the
    vector (2 Cbar - 1, -2 Sbar) has length below ``gap_tol`` are returned
    as NaN gap markers; the unwrap runs over the remaining samples as one
    chain.
    """
    if trace.C_bar is None or trace.S_bar is None:
        raise ValueError("relative_angle needs an averaged trace (run adiabatic_average)")
    x = 2.0 * trace.C_bar - 1.0
    y = -2.0 * trace.S_bar
    radius = np.hypot(x, y)
    valid = radius >= gap_tol
    out = np.full(len(x), np.nan)
    if np.any(valid):
        out[valid] = np.unwrap(np.arctan2(y[valid], x[valid]))
    return out


def geometric_phase_from_tdse(
    traj: SpinTrajectory, overlap_tol: float = 1e-6
) -> np.ndarray:
    """Accumulated phase minus the dynamical part, in (-pi, pi].

    gamma(t) = arg <psi(0)|psi(t)> + int_0^t <psi|H|psi> dt', evaluated on
    the trajectory grid (trapezoid for the energy integral).  Where the
    overlap magnitude falls below ``overlap_tol`` the phase is undefined
    and NaN is returned for that sample.  For slow lab-frame drives gamma
    converges to arg cos[xi (theta - theta0)]: 0 until the states at the
    endpoints become orthogonal, then jumping by pi.
    """
    if traj.frame != "lab":
        raise ValueError("geometric phase extraction expects a lab-frame trajectory")
    overlaps = traj.states @ np.conj(traj.states[0])
    dyn = np.concatenate(
        [[0.0], cumulative_trapezoid(traj.energies, traj.times)]
    )
    gamma = wrap_angle(np.angle(overlaps) + dyn)
    gamma = np.asarray(gamma, dtype=float)
    gamma[np.abs(overlaps) < overlap_tol] = np.nan
    return gamma
