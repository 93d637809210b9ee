"""Covariance-matrix algebra for zero-mean multimode Gaussian states.

Quadratures are stored in the order (x1, y1, x2, y2, ...) with [x, y] = i, so
a vacuum quadrature has variance 1/2. Every variance this module reports is
normalized to the shot-noise limit (SNL) of the measured combination, so a
vacuum reads 1.0 for a single homodyne and 1.0 for a two-mode sum/difference.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import InvalidArgument, InvalidState

logger = logging.getLogger(__name__)

VACUUM_VARIANCE = 0.5
SYMMETRY_TOLERANCE = 1e-12
PHYSICALITY_TOLERANCE = 1e-9
DUAN_BOUND = 2.0


@dataclass(frozen=True, eq=False)
class GaussianState:
    """A zero-mean Gaussian state described by its quadrature covariance.

    The covariance array is copied and frozen on construction, so states
    behave as values and can be shared freely. Construction checks shape,
    symmetry and labels only; the uncertainty relation is checked on demand
    with ``validate`` or ``is_physical``. Every channel in this module maps
    physical states to physical states.
    """

    cov: np.ndarray
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        cov = np.array(self.cov, dtype=float, copy=True)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
            raise InvalidState(
                f"Invalid covariance shape {cov.shape}; expected (2n, 2n)."
            )
        if cov.shape[0] == 0:
            raise InvalidState("A state needs at least one mode.")
        scale = max(1.0, float(np.max(np.abs(cov))))
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOLERANCE * scale:
            raise InvalidState("The covariance matrix is not symmetric.")
        cov.flags.writeable = False
        object.__setattr__(self, "cov", cov)

        n_modes = cov.shape[0] // 2
        labels = tuple(self.labels) or tuple(f"mode{i}" for i in range(n_modes))
        if len(labels) != n_modes:
            raise InvalidState(
                f"Got {len(labels)} labels for a {n_modes}-mode covariance."
            )
        object.__setattr__(self, "labels", labels)

    @property
    def n_modes(self) -> int:
        return self.cov.shape[0] // 2

    def block(self, mode: int) -> np.ndarray:
        """Return the 2x2 covariance block of one mode."""
        _check_mode(self, mode)
        return self.cov[2 * mode : 2 * mode + 2, 2 * mode : 2 * mode + 2]

    def validate(self) -> None:
        """Check the Robertson-Schrödinger uncertainty relation.

        Raises:
            InvalidState: If any symplectic eigenvalue is below 1/2
        """
        nu = symplectic_eigenvalues(self)
        if nu.min() < VACUUM_VARIANCE - PHYSICALITY_TOLERANCE:
            raise InvalidState(
                f"Unphysical covariance: symplectic eigenvalue {nu.min():.6g} < 1/2"
            )

    def to_dict(self) -> dict[str, Any]:
        """Convert the state to a dictionary for serialization."""
        return {"labels": list(self.labels), "cov": self.cov.tolist()}


@dataclass(frozen=True)
class DuanResult:
    """Outcome of the two-mode inseparability test."""

    v_sum: float
    v_diff: float
    bound: float = DUAN_BOUND

    @property
    def total(self) -> float:
        """V_sum + V_diff, compared against the bound."""
        return self.v_sum + self.v_diff

    @property
    def inseparable(self) -> bool:
        return self.total < self.bound

    def to_dict(self) -> dict[str, Any]:
        """Convert the result to a dictionary, derived fields included."""
        return {
            "v_sum": self.v_sum,
            "v_diff": self.v_diff,
            "total": self.total,
            "bound": self.bound,
            "inseparable": self.inseparable,
        }


def _check_mode(state: GaussianState, mode: int) -> None:
    if not 0 <= mode < state.n_modes:
        raise InvalidArgument(
            f"Mode index {mode} out of range for {state.n_modes} modes."
        )


def _check_pair(state: GaussianState, mode_a: int, mode_b: int) -> None:
    _check_mode(state, mode_a)
    _check_mode(state, mode_b)
    if mode_a == mode_b:
        raise InvalidArgument("The two modes must be distinct.")


def _check_fraction(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise InvalidArgument(f"{name} must lie in [0, 1], got {value}.")


def _transformed(
    state: GaussianState, matrix: np.ndarray, noise: np.ndarray | None = None
) -> GaussianState:
    cov = matrix @ state.cov @ matrix.T
    if noise is not None:
        cov = cov + noise
    return GaussianState(0.5 * (cov + cov.T), state.labels)


def symplectic_form(n_modes: int) -> np.ndarray:
    """Return the 2n x 2n symplectic form for (x1, y1, x2, y2, ...) ordering."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def symplectic_eigenvalues(state: GaussianState) -> np.ndarray:
    """Return the n symplectic eigenvalues of the covariance, ascending."""
    omega = symplectic_form(state.n_modes)
    moduli = np.sort(np.abs(np.linalg.eigvals(1j * omega @ state.cov)))
    return moduli[::2]


def is_physical(state: GaussianState) -> bool:
    """Check the uncertainty relation without raising.

    Args:
        state: State to test

    Returns:
        True if every symplectic eigenvalue is at least 1/2 within tolerance
    """
    return bool(
        symplectic_eigenvalues(state).min()
        >= VACUUM_VARIANCE - PHYSICALITY_TOLERANCE
    )


def vacuum(n_modes: int, labels: Sequence[str] | None = None) -> GaussianState:
    """Create the n-mode vacuum state.

    Args:
        n_modes: Number of modes (at least 1)
        labels: Optional per-mode identifiers

    Returns:
        State with covariance (1/2) times the identity
    """
    if n_modes < 1:
        raise InvalidArgument(f"n_modes must be at least 1, got {n_modes}.")
    return GaussianState(
        VACUUM_VARIANCE * np.eye(2 * n_modes), tuple(labels) if labels else ()
    )


def append_vacuum(state: GaussianState, label: str) -> GaussianState:
    """Tensor a vacuum ancilla onto the state as its last mode."""
    n = state.n_modes
    cov = VACUUM_VARIANCE * np.eye(2 * n + 2)
    cov[: 2 * n, : 2 * n] = state.cov
    return GaussianState(cov, (*state.labels, label))


def reduce(state: GaussianState, modes: Sequence[int]) -> GaussianState:
    """Trace out every mode not listed, keeping the listed order."""
    for mode in modes:
        _check_mode(state, mode)
    idx = [2 * m + k for m in modes for k in (0, 1)]
    return GaussianState(
        state.cov[np.ix_(idx, idx)], tuple(state.labels[m] for m in modes)
    )


def two_mode_squeeze_matrix(
    n_modes: int, mode_a: int, mode_b: int, r: float
) -> np.ndarray:
    """Symplectic matrix squeezing x_a + x_b and y_a - y_b by e^{-r}."""
    c, s = math.cosh(r), math.sinh(r)
    z = np.diag([1.0, -1.0])
    matrix = np.eye(2 * n_modes)
    a, b = slice(2 * mode_a, 2 * mode_a + 2), slice(2 * mode_b, 2 * mode_b + 2)
    matrix[a, a] = c * np.eye(2)
    matrix[b, b] = c * np.eye(2)
    matrix[a, b] = -s * z
    matrix[b, a] = -s * z
    return matrix


def beamsplitter_matrix(
    n_modes: int, mode_a: int, mode_b: int, transmissivity: float
) -> np.ndarray:
    """Orthogonal symplectic matrix mixing two modes with power ratio T."""
    t, r = math.sqrt(transmissivity), math.sqrt(1.0 - transmissivity)
    matrix = np.eye(2 * n_modes)
    a, b = slice(2 * mode_a, 2 * mode_a + 2), slice(2 * mode_b, 2 * mode_b + 2)
    matrix[a, a] = t * np.eye(2)
    matrix[b, b] = t * np.eye(2)
    matrix[a, b] = r * np.eye(2)
    matrix[b, a] = -r * np.eye(2)
    return matrix


def rotation_matrix(n_modes: int, modes: Sequence[int], theta: float) -> np.ndarray:
    """Rotate the listed modes so the new x is cos(theta) x + sin(theta) y."""
    c, s = math.cos(theta), math.sin(theta)
    matrix = np.eye(2 * n_modes)
    for mode in modes:
        sl = slice(2 * mode, 2 * mode + 2)
        matrix[sl, sl] = np.array([[c, s], [-s, c]])
    return matrix


def two_mode_squeeze(
    state: GaussianState, mode_a: int, mode_b: int, r: float
) -> GaussianState:
    """Apply two-mode squeezing with parameter r to a pair of modes."""
    _check_pair(state, mode_a, mode_b)
    if r < 0:
        raise InvalidArgument(f"Squeezing parameter must be >= 0, got {r}.")
    return _transformed(
        state, two_mode_squeeze_matrix(state.n_modes, mode_a, mode_b, r)
    )


def single_mode_squeeze(
    state: GaussianState, mode: int, r: float, phi: float = 0.0
) -> GaussianState:
    """Squeeze the quadrature at angle phi by e^{-r} and its conjugate by e^{r}."""
    _check_mode(state, mode)
    if r < 0:
        raise InvalidArgument(f"Squeezing parameter must be >= 0, got {r}.")
    n = state.n_modes
    squeeze = np.eye(2 * n)
    squeeze[2 * mode, 2 * mode] = math.exp(-r)
    squeeze[2 * mode + 1, 2 * mode + 1] = math.exp(r)
    matrix = (
        rotation_matrix(n, [mode], -phi) @ squeeze @ rotation_matrix(n, [mode], phi)
    )
    return _transformed(state, matrix)


def beamsplitter(
    state: GaussianState, mode_a: int, mode_b: int, transmissivity: float
) -> GaussianState:
    """Mix two modes on a beam splitter of power transmissivity T."""
    _check_pair(state, mode_a, mode_b)
    _check_fraction("transmissivity", transmissivity)
    return _transformed(
        state, beamsplitter_matrix(state.n_modes, mode_a, mode_b, transmissivity)
    )


def loss_channel(state: GaussianState, mode: int, efficiency: float) -> GaussianState:
    """Attenuate one mode, admitting vacuum noise: v <- eta v + (1 - eta)/2."""
    _check_mode(state, mode)
    _check_fraction("efficiency", efficiency)
    n = state.n_modes
    sl = slice(2 * mode, 2 * mode + 2)
    matrix = np.eye(2 * n)
    matrix[sl, sl] *= math.sqrt(efficiency)
    noise = np.zeros((2 * n, 2 * n))
    noise[sl, sl] = (1.0 - efficiency) * VACUUM_VARIANCE * np.eye(2)
    return _transformed(state, matrix, noise)


def additive_noise(
    state: GaussianState, mode: int, variance_snl: float
) -> GaussianState:
    """Add classical Gaussian noise of the given SNL-normalized variance."""
    _check_mode(state, mode)
    if variance_snl < 0:
        raise InvalidArgument(f"Noise variance must be >= 0, got {variance_snl}.")
    n = state.n_modes
    sl = slice(2 * mode, 2 * mode + 2)
    noise = np.zeros((2 * n, 2 * n))
    noise[sl, sl] = variance_snl * VACUUM_VARIANCE * np.eye(2)
    return _transformed(state, np.eye(2 * n), noise)


def phase_rotation(state: GaussianState, mode: int, theta: float) -> GaussianState:
    """Rotate one mode in phase space, as a local-oscillator phase shift does.

    Args:
        state: Input state
        mode: Mode to rotate
        theta: Angle in radians; the new x is cos(theta) x + sin(theta) y

    Returns:
        Rotated state; the mode block determinant is unchanged
    """
    _check_mode(state, mode)
    return _transformed(state, rotation_matrix(state.n_modes, [mode], theta))


def phase_jitter(
    state: GaussianState, modes: Sequence[int], sigma: float
) -> GaussianState:
    """Average the covariance over a common residual phase error of RMS sigma.

    Second moments become cos^2(sigma) times the locked state plus sin^2(sigma)
    times the state with every listed mode turned by a quarter period.
    """
    for mode in modes:
        _check_mode(state, mode)
    if sigma == 0:
        return state
    quarter = rotation_matrix(state.n_modes, modes, math.pi / 2)
    w = math.sin(sigma) ** 2
    cov = (1.0 - w) * state.cov + w * (quarter @ state.cov @ quarter.T)
    return GaussianState(0.5 * (cov + cov.T), state.labels)


def homodyne_variance(state: GaussianState, mode: int, theta: float) -> float:
    """Variance of the quadrature cos(theta) x + sin(theta) y, SNL = 1."""
    block = state.block(mode)
    v = np.array([math.cos(theta), math.sin(theta)])
    return float(v @ block @ v) / VACUUM_VARIANCE


def joint_quadrature_variance(
    state: GaussianState,
    mode_a: int,
    mode_b: int,
    theta_a: float,
    theta_b: float,
    sign: int,
) -> float:
    """Variance of q_a(theta_a) + sign * q_b(theta_b), two vacua = 1.

    Args:
        state: State holding both modes
        mode_a: First mode index
        mode_b: Second mode index
        theta_a: Local oscillator phase on mode_a
        theta_b: Local oscillator phase on mode_b
        sign: +1 for the sum, -1 for the difference

    Returns:
        SNL-normalized variance of the joint combination
    """
    _check_pair(state, mode_a, mode_b)
    if sign not in (1, -1):
        raise InvalidArgument(f"sign must be +1 or -1, got {sign}.")
    w = np.zeros(2 * state.n_modes)
    w[2 * mode_a : 2 * mode_a + 2] = (math.cos(theta_a), math.sin(theta_a))
    w[2 * mode_b : 2 * mode_b + 2] = (
        sign * math.cos(theta_b),
        sign * math.sin(theta_b),
    )
    return float(w @ state.cov @ w) / (2 * VACUUM_VARIANCE)


def duan_sum(state: GaussianState, mode_a: int, mode_b: int) -> DuanResult:
    """Evaluate Var(X_A + X_B) + Var(Y_A - Y_B) against the bound 2."""
    v_sum = joint_quadrature_variance(state, mode_a, mode_b, 0.0, 0.0, +1)
    v_diff = joint_quadrature_variance(
        state, mode_a, mode_b, math.pi / 2, math.pi / 2, -1
    )
    result = DuanResult(v_sum=v_sum, v_diff=v_diff)
    logger.debug("duan_sum %s/%s total=%.6f", mode_a, mode_b, result.total)
    return result


def log_negativity(state: GaussianState, mode_a: int, mode_b: int) -> float:
    """Logarithmic negativity of the reduced two-mode state (0 if separable)."""
    _check_pair(state, mode_a, mode_b)
    pair = reduce(state, [mode_a, mode_b])
    flip = np.diag([1.0, 1.0, 1.0, -1.0])
    transposed = flip @ pair.cov @ flip
    omega = symplectic_form(2)
    nu_min = np.sort(np.abs(np.linalg.eigvals(1j * omega @ transposed)))[0]
    return max(0.0, -math.log(nu_min / VACUUM_VARIANCE))
