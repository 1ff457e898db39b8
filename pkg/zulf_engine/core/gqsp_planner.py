"""Generalized-QSP planning for e^{i tau cos(theta)}.

A plan holds the Jacobi-Anger truncation degree d and the Laurent coefficients
i^n J_n(tau), n = -d..d.  Phase generation works on the analytic polynomial
omega^d P(omega) of degree 2d, completes it with Q so that |P|^2 + |Q|^2 = 1 on
the unit circle, and peels 2d + 1 SU(2) rotations

    R(lam, phi, theta) = [[e^{i(lam+phi)} cos, e^{i phi} sin], [e^{i lam} sin, -cos]]

off the sequence R_D A R_{D-1} A ... A R_0 with A = diag(omega, 1).
"""
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from zulf_engine.errors import DomainError, FactorizationError, NormalizationError
from zulf_engine.log import get_logger

log = get_logger("GQSP")

MILLER_ACC = 160.0
RESCALE_AT = 1e100
EDGE_SCALE = 1.0 - 1e-12
NORM_TOL = 1e-9
COMPLEMENT_TOL = 1e-12
COMPLEMENT_FLOOR = 2e-9
MAX_FFT = 2 ** 22


def degree_for(tau: float, epsilon: float) -> int:
    """ceil(e|tau|/2 + log10(1/eps)); a 1e-9 guard keeps exact decades from rounding up."""
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    return int(math.ceil(math.e * abs(tau) / 2.0 - math.log10(epsilon) - 1e-9))


def bessel_sequence(x: float, n_max: int) -> np.ndarray:
    """J_0(x) .. J_n_max(x) by Miller's downward recurrence, normalized by J_0 + 2 sum J_2k = 1."""
    out = np.zeros(n_max + 1)
    ax = abs(float(x))
    if ax == 0.0:
        out[0] = 1.0
        return out
    top = max(n_max, int(math.ceil(ax))) + 1
    m = 2 * ((top + int(math.sqrt(MILLER_ACC * top))) // 2)
    vals = np.zeros(m + 2)
    vals[m] = 1.0
    tox = 2.0 / ax
    for j in range(m, 0, -1):
        vals[j - 1] = j * tox * vals[j] - vals[j + 1]
        if abs(vals[j - 1]) > RESCALE_AT:
            vals[j - 1:] /= RESCALE_AT
    norm = vals[0] + 2.0 * vals[2:m + 1:2].sum()
    out[:] = vals[:n_max + 1] / norm
    if x < 0:
        out[1::2] *= -1.0
    return out


def jacobi_anger_coefficients(tau: float, degree: int) -> np.ndarray:
    """i^n J_n(tau) for n = -degree..degree."""
    j = bessel_sequence(tau, degree)
    n = np.arange(degree + 1)
    positive = (1j ** n) * j
    # i^{-n} J_{-n} = i^n J_n
    return np.concatenate([positive[:0:-1], positive]).astype(complex)


def _laurent_values(coefficients: np.ndarray, theta: np.ndarray) -> np.ndarray:
    d = (len(coefficients) - 1) // 2
    theta = np.asarray(theta, dtype=float)
    out = np.zeros(theta.shape, dtype=complex)
    for chunk in range(0, theta.size, 2048):
        th = theta.ravel()[chunk:chunk + 2048]
        out.ravel()[chunk:chunk + 2048] = np.exp(1j * np.outer(th, np.arange(-d, d + 1))) @ coefficients
    return out


def _circle_values(poly: np.ndarray, size: int) -> np.ndarray:
    """poly(omega_j) on omega_j = exp(2 pi i j / size); size must exceed the degree."""
    padded = np.zeros(size, dtype=complex)
    padded[:len(poly)] = poly
    return size * np.fft.ifft(padded)


def _next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def sup_grid(degree: int) -> int:
    """Sampling grid for sup|P|; fine enough that the true maximum sits within the complement floor."""
    return max(2 ** 16, _next_pow2(64 * (degree + 1)))


@dataclass(frozen=True, eq=False)
class GqspPhases:
    lam: float
    phi: np.ndarray
    theta: np.ndarray
    scale: float
    target: np.ndarray       # analytic coefficients of the scaled omega^d P(omega)
    complement: np.ndarray   # coefficients of Q
    fft_size: int
    complement_error: float

    @property
    def n_phases(self) -> int:
        return len(self.theta)

    def tuples(self) -> List[Tuple[float, float, float]]:
        out = [(float(self.lam), float(self.phi[0]), float(self.theta[0]))]
        out += [(0.0, float(p), float(t)) for p, t in zip(self.phi[1:], self.theta[1:])]
        return out

    def target_values(self, omega: np.ndarray) -> np.ndarray:
        return np.polynomial.polynomial.polyval(np.asarray(omega, dtype=complex), self.target)

    def reconstruction_error(self, n_points: int = 4096) -> float:
        """max |top-left entry - (1 - 1e-12) P / max(1, sup|P|)| on n_points roots of unity."""
        omega = np.exp(2j * np.pi * np.arange(n_points) / n_points)
        p, _ = reconstruct(self, omega)
        return float(np.max(np.abs(p - self.target_values(omega))))


@dataclass(frozen=True, eq=False)
class GqspPlan:
    tau: float
    epsilon: float
    degree: int
    coefficients: Optional[np.ndarray] = None
    phases: Optional[GqspPhases] = None

    @property
    def n_phases(self) -> int:
        return 2 * self.degree + 1

    def _require_coefficients(self) -> np.ndarray:
        if self.coefficients is None:
            raise DomainError("plan carries no coefficients (built with with_coefficients=False)")
        return self.coefficients

    def truncated(self, degree: int) -> "GqspPlan":
        if not 0 <= degree <= self.degree:
            raise DomainError(f"cannot truncate degree {self.degree} plan to {degree}")
        c = self._require_coefficients()
        cut = self.degree - degree
        return GqspPlan(self.tau, self.epsilon, degree, c[cut:len(c) - cut].copy())

    def evaluate(self, omega) -> np.ndarray:
        """Laurent sum P(omega) = sum_n c_n omega^n for |omega| = 1."""
        c = self._require_coefficients()
        omega = np.asarray(omega, dtype=complex)
        return _laurent_values(c, np.angle(omega))

    def with_phases(self, phases: GqspPhases) -> "GqspPlan":
        return replace(self, phases=phases)

    def phases_to_frame(self) -> pd.DataFrame:
        if self.phases is None:
            raise DomainError("plan has no phases; run generate_phases first")
        rows = [{"index": k, "lambda": lam, "phi": phi, "theta": theta}
                for k, (lam, phi, theta) in enumerate(self.phases.tuples())]
        return pd.DataFrame(rows, columns=["index", "lambda", "phi", "theta"])

    def __repr__(self):
        return f"GqspPlan(tau={self.tau:.6g}, eps={self.epsilon:g}, d={self.degree})"


def plan_from_tau(tau: float, epsilon: float, with_coefficients: bool = True) -> GqspPlan:
    d = degree_for(tau, epsilon)
    coefficients = jacobi_anger_coefficients(tau, d) if with_coefficients else None
    return GqspPlan(float(tau), float(epsilon), d, coefficients)


def plan_degree(alpha: float, t: float, epsilon: float, with_coefficients: bool = True) -> GqspPlan:
    """tau = 2 pi alpha t with alpha in Hz and t in seconds."""
    if alpha <= 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t}")
    return plan_from_tau(2.0 * math.pi * alpha * t, epsilon, with_coefficients)


def truncation_error(plan: GqspPlan, grid: int = 4096) -> float:
    """max_theta |e^{i tau cos theta} - sum_n c_n e^{i n theta}| on a uniform grid."""
    c = plan._require_coefficients()
    theta = 2.0 * np.pi * np.arange(grid) / grid
    if grid >= len(c):
        # c_n sits at index n mod grid
        buf = np.zeros(grid, dtype=complex)
        d = plan.degree
        buf[:d + 1] = c[d:]
        if d:
            buf[grid - d:] = c[:d]
        approx = grid * np.fft.ifft(buf)
    else:
        approx = _laurent_values(c, theta)
    return float(np.max(np.abs(np.exp(1j * plan.tau * np.cos(theta)) - approx)))


def complementary_polynomial(p: np.ndarray, tol: float = COMPLEMENT_TOL, max_size: int = MAX_FFT,
                             floor: float = 0.0) -> Tuple[np.ndarray, int, float]:
    """Minimum-phase Q with |P|^2 + |Q|^2 = 1 + floor on the circle, by cepstral factorization.

    The FFT size doubles until the identity holds to `tol` on a twice-finer grid.  A positive
    floor keeps the log spectrum bounded where |P| touches 1.
    """
    p = np.asarray(p, dtype=complex)
    degree = len(p) - 1
    size = _next_pow2(max(8 * (2 * degree + 1), 64))
    while True:
        pv = _circle_values(p, size)
        spectrum = 1.0 + floor - np.abs(pv) ** 2
        if spectrum.min() <= 0.0:
            raise FactorizationError(
                "1 + floor - |P|^2 is not strictly positive on the circle",
                {"fft_size": size, "min_spectrum": float(spectrum.min()), "degree": degree})
        cep = np.fft.fft(np.log(spectrum)) / size
        half = np.zeros(size, dtype=complex)
        half[0] = 0.5 * cep[0]
        half[1:size // 2] = cep[1:size // 2]
        qv = np.exp(size * np.fft.ifft(half))
        q = (np.fft.fft(qv) / size)[:degree + 1]

        check = 2 * size
        err = float(np.max(np.abs(np.abs(_circle_values(p, check)) ** 2
                                  + np.abs(_circle_values(q, check)) ** 2 - 1.0 - floor)))
        if err <= tol:
            return q, size, err
        if size >= max_size:
            if err <= NORM_TOL:
                log.warning(f"complement reached {err:.2e} at the FFT cap {size}")
                return q, size, err
            raise FactorizationError(
                f"complement did not converge (|P|^2+|Q|^2-1 = {err:.3e} at N={size})",
                {"fft_size": size, "error": err, "min_spectrum": float(spectrum.min()),
                 "degree": degree})
        size *= 2


def strip_layers(p: np.ndarray, q: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
    """Peel R(0, phi_k, theta_k) A for k = D..1, then solve R(lam, phi_0, theta_0)|0> = (p0, q0)."""
    p = np.array(p, dtype=complex)
    q = np.array(q, dtype=complex)
    degree = len(p) - 1
    phi = np.zeros(degree + 1)
    theta = np.zeros(degree + 1)
    for k in range(degree, 0, -1):
        lead = math.hypot(abs(p[-1]), abs(q[-1]))
        trail = math.hypot(abs(p[0]), abs(q[0]))
        if lead >= trail:
            th = math.atan2(abs(q[-1]), abs(p[-1]))
            ph = float(np.angle(p[-1] * np.conj(q[-1])))
        else:
            th = math.atan2(abs(p[0]), abs(q[0]))
            ph = float(np.angle(-p[0] * np.conj(q[0])))
        c, s = math.cos(th), math.sin(th)
        rot = np.exp(-1j * ph)
        upper = c * rot * p + s * q
        lower = s * rot * p - c * q
        p, q = upper[1:], lower[:-1]
        phi[k], theta[k] = ph, th
    theta[0] = math.atan2(abs(q[0]), abs(p[0]))
    lam = float(np.angle(q[0])) if abs(q[0]) > 1e-15 else 0.0
    phi[0] = float(np.angle(p[0])) - lam if abs(p[0]) > 1e-15 else 0.0
    return lam, phi, theta


def reconstruct(phases: GqspPhases, omega) -> Tuple[np.ndarray, np.ndarray]:
    """Top-left and bottom-left entries of R_D A ... A R_0 at each omega."""
    omega = np.asarray(omega, dtype=complex)
    c, s = math.cos(phases.theta[0]), math.sin(phases.theta[0])
    top = np.full(omega.shape, np.exp(1j * (phases.lam + phases.phi[0])) * c, dtype=complex)
    bottom = np.full(omega.shape, np.exp(1j * phases.lam) * s, dtype=complex)
    for k in range(1, phases.n_phases):
        c, s = math.cos(phases.theta[k]), math.sin(phases.theta[k])
        top = omega * top
        top, bottom = np.exp(1j * phases.phi[k]) * (c * top + s * bottom), s * top - c * bottom
    return top, bottom


def generate_phases(plan: GqspPlan, normalize: bool = True, tol: float = COMPLEMENT_TOL,
                    floor: float = COMPLEMENT_FLOOR) -> GqspPhases:
    """SU(2) phases for omega^d P(omega).

    The target is (1 - 1e-12) P, divided by sup|P| when that exceeds 1 (only with normalize).
    Q completes 1 + floor - |P|^2 and the pair is divided by sqrt(1 + floor) before peeling,
    so the phases encode the target to within floor / 2.
    """
    c = plan._require_coefficients()
    if np.sum(np.abs(c) ** 2) > 1.0 + NORM_TOL:
        raise NormalizationError(f"sum |c_n|^2 = {np.sum(np.abs(c) ** 2):.12f} exceeds 1")
    degree = len(c) - 1
    grid = sup_grid(degree)
    sup = float(np.max(np.abs(_circle_values(c, grid))))
    if not normalize and sup > 1.0 + NORM_TOL:
        raise NormalizationError(f"sup |P| = {sup:.12f} exceeds 1 on a {grid}-point grid")
    scale = EDGE_SCALE / max(1.0, sup)
    target = scale * c
    if degree == 0:
        q = np.array([math.sqrt(max(0.0, 1.0 - abs(target[0]) ** 2))], dtype=complex)
        size, err, norm = 1, abs(abs(target[0]) ** 2 + abs(q[0]) ** 2 - 1.0), 1.0
    else:
        q, size, err = complementary_polynomial(target, tol, floor=floor)
        norm = math.sqrt(1.0 + floor)
    lam, phi, theta = strip_layers(target / norm, q / norm)
    phases = GqspPhases(lam, phi, theta, scale, target, q / norm, size, err)
    log.debug(f"{plan!r}: {phases.n_phases} phases, scale={scale:.12f}, N_fft={size}, "
              f"complement error {err:.2e}")
    return phases
