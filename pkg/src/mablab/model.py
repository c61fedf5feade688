"""Two-level vibronic model core: parameters, electronic Hamiltonian,
adiabatic surfaces and states, regime margins, rotating-frame identities.

Conventions
-----------
Units hbar = m = omega = 1 throughout.  The diabatic electronic basis is
(|0>, |1>) with Pauli operators

    sigma_x = |0><1| + |1><0|,   sigma_y = -i|0><1| + i|1><0|,
    sigma_z = |0><0| - |1><1|.

The model has two dials: the vibronic coupling strength ``k`` and the
effect order ``xi`` (half-integer; 1/2 for the linear model, -1 for the
quadratic one).  The electronic coupling at nuclear polar coordinates
(r, theta) is

    H_e(r, theta) = k r^(2|xi|) [cos(2 xi theta) sigma_x
                                 + sin(2 xi theta) sigma_y],

with eigenvalues -+ k r^(2|xi|).  The lower adiabatic state is taken as

    |-(theta)> = e^{i alpha(theta)} / sqrt(2) * (e^{-i xi theta},
                                                 -e^{+i xi theta}),

where ``alpha`` is an arbitrary differentiable gauge (alpha = 0 unless one
is supplied).  The branch sign is anchored at theta = 0, where the state is
(1, -1)/sqrt(2), the sigma_x eigenvector with eigenvalue -1.  Note the
relative minus between the components: the companion ``berry.bo_state``
uses the opposite (upper) branch; every gauge-invariant geometric quantity
built from either branch (overlap modulus, connection, noncyclic phase,
jumps) is identical.

All functions here are pure and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

CANONICAL_ORDERS = (0.5, -1.0)


class SingularityError(ValueError):
    """A quantity was requested at the conical intersection r = 0."""


@dataclass(frozen=True)
class ModelParams:
    """Model dials: coupling strength ``k`` and effect order ``xi``.

    ``r_ref`` is the frozen radius used by the rotating-frame analyses;
    it defaults to k (the minimum of the lower surface in the strong
    coupling regime).  k = 0 is admitted as the decoupled-oscillator
    limit used for spectral validation; in that limit ``r_ref`` stays
    unresolved unless given explicitly, and the dynamics refuses to run.
    """

    k: float
    xi: float
    r_ref: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.k) and self.k >= 0.0):
            raise ValueError(f"k must be finite and >= 0, got {self.k}")
        if not math.isfinite(self.xi):
            raise ValueError("xi must be finite")
        two_xi = 2.0 * self.xi
        if abs(two_xi - round(two_xi)) > 1e-9 or round(two_xi) == 0:
            raise ValueError(
                f"xi must be a nonzero half-integer or integer, got {self.xi}"
            )
        if self.r_ref is None and self.k > 0.0:
            object.__setattr__(self, "r_ref", float(self.k))
        if self.r_ref is not None and not (
            math.isfinite(self.r_ref) and self.r_ref > 0.0
        ):
            raise ValueError(f"r_ref must be finite and > 0, got {self.r_ref}")

    @property
    def non_canonical(self) -> bool:
        """True for orders outside the linear/quadratic set {1/2, -1}."""
        return self.xi not in CANONICAL_ORDERS

    def coupling_at(self, r: float) -> float:
        """Electronic coupling magnitude k r^(2|xi|)."""
        return self.k * float(r) ** (2.0 * abs(self.xi))

    def require_r_ref(self) -> float:
        if self.r_ref is None:
            raise ValueError("r_ref is undefined for k = 0; set it explicitly")
        return self.r_ref


@dataclass(frozen=True)
class EffectiveFields:
    """Rotating-frame effective fields: B = (2k^2, 0, -2 xi thetadot) and
    the radial electric coefficient xi/r (the field of a charged line at
    the intersection)."""

    B: np.ndarray
    E_radial: float


@dataclass(frozen=True)
class SurfaceSample:
    r: float
    E_minus: float
    E_plus: float
    include_born_huang: bool


@dataclass(frozen=True)
class AdiabaticStates:
    energy_minus: float
    energy_plus: float
    state_minus: np.ndarray
    state_plus: np.ndarray


def electronic_hamiltonian(params: ModelParams, r: float, theta: float) -> np.ndarray:
    """2x2 electronic coupling matrix k r^(2|xi|) [cos(2 xi theta) sigma_x
    + sin(2 xi theta) sigma_y]; Hermitian, traceless, eigenvalues
    -+ k r^(2|xi|)."""
    if r < 0.0:
        raise ValueError(f"radius must be >= 0, got {r}")
    phase = 2.0 * params.xi * theta
    g = params.coupling_at(r)
    return g * (math.cos(phase) * SIGMA_X + math.sin(phase) * SIGMA_Y)


def adiabatic_eigensystem(
    params: ModelParams, r: float, theta: float, gauge=None
) -> AdiabaticStates:
    """Instantaneous eigensystem of the electronic coupling.

    ``gauge`` is anything exposing ``alpha(theta)`` (see berry.GaugeSpec);
    None means alpha = 0.  Both states carry the same gauge prefactor.
    With alpha = xi*theta the states are single-valued around the
    intersection; with alpha = 0 they flip sign over a 2 pi loop whenever
    xi is half-odd-integer.
    """
    if r <= 0.0:
        raise ValueError(f"radius must be > 0, got {r}")
    alpha = gauge.alpha(theta) if gauge is not None else 0.0
    pref = np.exp(1j * alpha) / math.sqrt(2.0)
    lo = np.exp(-1j * params.xi * theta)
    hi = np.exp(1j * params.xi * theta)
    state_minus = pref * np.array([lo, -hi])
    state_plus = pref * np.array([lo, hi])
    g = params.coupling_at(r)
    return AdiabaticStates(-g, g, state_minus, state_plus)


def surface_energies(params: ModelParams, r, include_bh: bool):
    """Vectorized adiabatic surfaces E-(r), E+(r) = r^2/2 -+ k r^(2|xi|)
    [+ 1/(8 r^2)].

    The Born-Huang diagonal correction 1/(8 r^2) diverges at the origin;
    its order dependence is not modelled (kept as 1/(8 r^2) for every xi).
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0):
        raise ValueError("radius must be >= 0")
    if include_bh and np.any(r == 0.0):
        raise SingularityError(
            "Born-Huang term 1/(8 r^2) diverges at the conical intersection r = 0"
        )
    base = 0.5 * r * r
    gap_half = params.k * r ** (2.0 * abs(params.xi))
    if include_bh:
        base = base + 1.0 / (8.0 * r * r)
    return base - gap_half, base + gap_half


def potential_surfaces(params: ModelParams, r: float, include_bh: bool) -> SurfaceSample:
    """Single-radius surface sample; with the Born-Huang term off the two
    surfaces conically intersect at the origin."""
    e_minus, e_plus = surface_energies(params, float(r), include_bh)
    return SurfaceSample(float(r), float(e_minus), float(e_plus), include_bh)


def bo_regime_margin(params: ModelParams) -> float:
    """Strong-coupling figure of merit 2 k^2; the single-surface picture
    needs it >> 1."""
    return 2.0 * params.k * params.k


def adiabaticity_margin(params: ModelParams, theta_dot: float) -> float:
    """|xi thetadot| / (2 k^2); small means the electronic state follows
    adiabatically.  Zero rate gives 0 even at k = 0."""
    if theta_dot == 0.0:
        return 0.0
    if params.k == 0.0:
        return math.inf
    return abs(params.xi * theta_dot) / (2.0 * params.k * params.k)


def effective_fields(params: ModelParams, theta_dot: float, r: float) -> EffectiveFields:
    """Rotating-frame B = (2k^2, 0, -2 xi thetadot) and E_radial = xi/r."""
    if r < 0.0:
        raise ValueError(f"radius must be >= 0, got {r}")
    if r == 0.0:
        raise SingularityError("effective electric field diverges at r = 0")
    B = np.array([2.0 * params.k * params.k, 0.0, -2.0 * params.xi * theta_dot])
    return EffectiveFields(B, params.xi / r)


def rotated_pauli_frame(theta: float, xi: float):
    """Co-rotating Pauli triple (sigma_x(theta), sigma_y(theta), sigma_z).

    sigma_x(theta) = cos(2 xi theta) sigma_x + sin(2 xi theta) sigma_y and
    sigma_y(theta) = -sin(2 xi theta) sigma_x + cos(2 xi theta) sigma_y;
    the triple satisfies the full Pauli algebra for any theta.
    """
    c = math.cos(2.0 * xi * theta)
    s = math.sin(2.0 * xi * theta)
    return (c * SIGMA_X + s * SIGMA_Y, -s * SIGMA_X + c * SIGMA_Y, SIGMA_Z.copy())


def spin_rotation(theta: float, xi: float) -> np.ndarray:
    """U(theta) = exp(-i xi theta sigma_z) = diag(e^{-i xi theta}, e^{+i xi theta})."""
    return np.array(
        [[np.exp(-1j * xi * theta), 0.0], [0.0, np.exp(1j * xi * theta)]]
    )


def rotating_frame_residual(params: ModelParams, theta: float) -> float:
    """Frobenius norm of U^dag H_e(r_ref, theta) U - k r_ref^(2|xi|) sigma_x.

    Exact operator identity; the residual is pure roundoff (<= 1e-12)
    for every theta.
    """
    r = params.require_r_ref()
    U = spin_rotation(theta, params.xi)
    H = electronic_hamiltonian(params, r, theta)
    target = params.coupling_at(r) * SIGMA_X
    return float(np.linalg.norm(U.conj().T @ H @ U - target))
