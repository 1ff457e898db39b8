"""Exact dense simulation for small spin registers.

Site 0 is the leftmost Kronecker factor.  Energies are in Hz and evolution uses
exp(-i 2 pi H t).
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import linalg, sparse
from scipy.interpolate import PchipInterpolator
from scipy.optimize import curve_fit
from scipy.signal import find_peaks

from config import settings
from zulf_engine.core.gqsp_planner import GqspPlan
from zulf_engine.core.regime import SpeciesTable
from zulf_engine.core.spin_hamiltonian import SpinHamiltonian
from zulf_engine.errors import DomainError, OracleCapError
from zulf_engine.log import get_logger

log = get_logger("ORACLE")

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class Observable(Enum):
    SZ = "sz"   # sum sigma^z / 2
    MZ = "mz"   # sum gamma_k sigma^z_k / (2 gamma_H)
    SX = "sx"   # sum sigma^x / 2


def _check_cap(n_spins: int, cap: int):
    if n_spins > cap:
        raise OracleCapError(f"{n_spins} spins exceed the dense oracle cap of {cap}", cap)


def pauli_string(n_spins: int, factors: Sequence[Tuple[int, str]]) -> sparse.csr_matrix:
    """Sparse Kronecker product with the given single-site Paulis, identity elsewhere."""
    by_site = dict(factors)
    op = sparse.identity(1, dtype=complex, format="csr")
    for k in range(n_spins):
        op = sparse.kron(op, sparse.csr_matrix(PAULI[by_site.get(k, "I")]), format="csr")
    return op


def dense_matrix(h: SpinHamiltonian, cap: int = settings.ORACLE_SPIN_CAP,
                 include_offset: bool = False) -> np.ndarray:
    """sum_i c_i Lambda_i as a 2^N x 2^N array (Hz)."""
    _check_cap(h.n_spins, cap)
    dim = 2 ** h.n_spins
    acc = sparse.csr_matrix((dim, dim), dtype=complex)
    for term in h.terms:
        acc = acc + term.coefficient * pauli_string(h.n_spins, term.factors)
    out = acc.toarray()
    if include_offset and h.offset:
        out += h.offset * np.eye(dim)
    return out


def spin_operator(n_spins: int, site: int, axis: str) -> np.ndarray:
    """I^axis_site = sigma^axis_site / 2 built with plain numpy Kronecker products."""
    mats = [np.eye(2, dtype=complex) for _ in range(n_spins)]
    mats[site] = PAULI[axis.upper()] / 2.0
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return out


def pair_coupling_matrix(n_spins: int, couplings: Sequence[Tuple[int, int, np.ndarray]],
                         fields: Optional[Sequence[Sequence[float]]] = None) -> np.ndarray:
    """sum_(k,l) I_k . T_kl . I_l - sum_k h_k . sigma_k with T in Hz (spin-operator form)."""
    _check_cap(n_spins, settings.ORACLE_SPIN_CAP)
    axes = "XYZ"
    ops = [[spin_operator(n_spins, k, a) for a in axes] for k in range(n_spins)]
    out = np.zeros((2 ** n_spins, 2 ** n_spins), dtype=complex)
    for k, l, tensor in couplings:
        tensor = np.asarray(tensor, dtype=float)
        for a in range(3):
            for b in range(3):
                if tensor[a, b] != 0.0:
                    out += tensor[a, b] * ops[k][a] @ ops[l][b]
    if fields is not None:
        for k, h in enumerate(fields):
            for a in range(3):
                out -= 2.0 * h[a] * ops[k][a]
    return out


def observable_diagonal(h: SpinHamiltonian, observable: Union[str, Observable]) -> np.ndarray:
    observable = Observable(observable)
    n = h.n_spins
    if observable is Observable.SX:
        raise DomainError("sx is not diagonal in the computational basis")
    weights = np.ones(n)
    if observable is Observable.MZ:
        gammas = h.gammas()
        if gammas is None:
            raise DomainError("gamma-weighted observable needs spin-site records on the Hamiltonian")
        weights = gammas / SpeciesTable().gamma("1H")
    bits = (np.arange(2 ** n)[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
    sigma_z = 1.0 - 2.0 * bits
    return sigma_z @ weights / 2.0


def observable_matrix(h: SpinHamiltonian, observable: Union[str, Observable]) -> np.ndarray:
    observable = Observable(observable)
    _check_cap(h.n_spins, settings.ORACLE_SPIN_CAP)
    if observable is Observable.SX:
        out = sparse.csr_matrix((2 ** h.n_spins, 2 ** h.n_spins), dtype=complex)
        for k in range(h.n_spins):
            out = out + 0.5 * pauli_string(h.n_spins, [(k, "X")])
        return out.toarray()
    return np.diag(observable_diagonal(h, observable)).astype(complex)


def sample_basis_states(n_spins: int, count: Optional[int] = None, seed: int = 0) -> np.ndarray:
    """Up to N^2 distinct computational basis states with positive total S^z, seeded."""
    _check_cap(n_spins, settings.ORACLE_SPIN_CAP)
    count = n_spins ** 2 if count is None else min(count, n_spins ** 2)
    index = np.arange(2 ** n_spins)
    ones = np.array([bin(i).count("1") for i in index])
    candidates = index[2 * ones < n_spins]
    rng = np.random.default_rng(seed)
    take = min(count, len(candidates))
    return np.sort(rng.choice(candidates, size=take, replace=False))


def density_matrix(h: SpinHamiltonian, rho0: str = "uniform", beta: float = 1e-2,
                   states: Optional[Sequence[int]] = None) -> np.ndarray:
    """uniform: I / 2^N; thermal-z: exp(beta M_z) normalized; basis: mean of basis projectors."""
    _check_cap(h.n_spins, settings.ORACLE_SPIN_CAP)
    dim = 2 ** h.n_spins
    if rho0 == "uniform":
        return np.eye(dim, dtype=complex) / dim
    if rho0 == "thermal-z":
        tag = Observable.MZ if h.sites else Observable.SZ
        weights = np.exp(beta * observable_diagonal(h, tag))
        return np.diag(weights / weights.sum()).astype(complex)
    if rho0 == "basis":
        chosen = sample_basis_states(h.n_spins) if states is None else np.asarray(states)
        if len(chosen) == 0:
            raise DomainError("basis-state ensemble is empty")
        diag = np.zeros(dim)
        np.add.at(diag, chosen, 1.0)
        return np.diag(diag / len(chosen)).astype(complex)
    raise DomainError(f"unknown initial state {rho0!r} (uniform, thermal-z, basis)")


@dataclass(frozen=True, eq=False)
class CorrelationTrace:
    timepoints: np.ndarray
    values: np.ndarray
    observable: str
    rho0: str = "uniform"

    def is_flat(self, tol: float = 1e-10) -> bool:
        return bool(np.max(np.abs(self.values - self.values[0])) <= tol * max(1.0, abs(self.values[0])))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.timepoints, "re": self.values.real, "im": self.values.imag})


def evolve(h: SpinHamiltonian, psi0: np.ndarray, times: Sequence[float]) -> np.ndarray:
    """States exp(-i 2 pi H t) psi0, one row per time."""
    energies, vectors = linalg.eigh(dense_matrix(h))
    coeffs = vectors.conj().T @ np.asarray(psi0, dtype=complex)
    phases = np.exp(-2j * np.pi * np.outer(np.asarray(times, dtype=float), energies))
    return (phases * coeffs[None, :]) @ vectors.T


def correlator(h: SpinHamiltonian, rho0: str = "uniform", observable: str = "sz",
               times: Sequence[float] = (0.0,), beta: float = 1e-2,
               states: Optional[Sequence[int]] = None) -> CorrelationTrace:
    """tr[S(t) S rho] with S(t) = e^{i 2pi H t} S e^{-i 2pi H t}, by eigendecomposition."""
    try:
        tag = Observable(observable)
    except ValueError:
        raise DomainError(f"unknown observable {observable!r} (sz, mz, sx)")
    energies, vectors = linalg.eigh(dense_matrix(h))
    s_eig = vectors.conj().T @ observable_matrix(h, tag) @ vectors
    rho_eig = vectors.conj().T @ density_matrix(h, rho0, beta, states) @ vectors
    weights = s_eig * (s_eig @ rho_eig).T
    times = np.asarray(times, dtype=float)
    values = np.empty(len(times), dtype=complex)
    for k, t in enumerate(times):
        p = np.exp(2j * np.pi * energies * t)
        values[k] = p @ weights @ p.conj()
    log.debug(f"correlator {tag.value}/{rho0}: {len(times)} points, C(0)={values[0]:.6g}")
    return CorrelationTrace(times, values, tag.value, rho0)


@dataclass(frozen=True, eq=False)
class Spectrum:
    frequencies: np.ndarray
    intensities: np.ndarray
    gamma2: float

    @property
    def bin_width(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])

    def peaks(self, rel_height: float = 0.05) -> pd.DataFrame:
        """Local maxima above rel_height * max intensity."""
        top = float(np.max(self.intensities))
        idx, _ = find_peaks(self.intensities, height=rel_height * top if top > 0 else None)
        frame = pd.DataFrame({"frequency_hz": self.frequencies[idx],
                              "intensity": self.intensities[idx]})
        return frame.sort_values("intensity", ascending=False, kind="mergesort").reset_index(drop=True)

    def dominant_peak(self, exclude_zero: bool = True) -> float:
        peaks = self.peaks()
        if exclude_zero:
            peaks = peaks[np.abs(peaks["frequency_hz"]) > self.bin_width]
        if peaks.empty:
            raise DomainError("spectrum has no peak")
        return float(peaks["frequency_hz"].iloc[0])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"frequency_hz": self.frequencies, "intensity": self.intensities})


def _uniform(trace: CorrelationTrace) -> Tuple[np.ndarray, np.ndarray]:
    t = np.asarray(trace.timepoints, dtype=float)
    steps = np.diff(t)
    if np.allclose(steps, steps[0], rtol=1e-9, atol=1e-15):
        return t, trace.values
    grid = np.linspace(t[0], t[-1], max(4 * len(t), 256))
    re = PchipInterpolator(t, trace.values.real)(grid)
    im = PchipInterpolator(t, trace.values.imag)(grid)
    return grid, re + 1j * im


def spectrum(trace: CorrelationTrace, gamma2: float, pad_factor: int = 8) -> Spectrum:
    """Re of the windowed transform sum_k w_k C(t_k) e^{i 2pi f t_k - gamma2 t_k}."""
    if len(trace.timepoints) < 4:
        raise DomainError(f"spectrum needs at least 4 samples, got {len(trace.timepoints)}")
    if gamma2 < 0:
        raise DomainError(f"gamma2 must be non-negative, got {gamma2}")
    t, values = _uniform(trace)
    dt = float(t[1] - t[0])
    weights = np.full(len(t), dt)
    weights[0] = weights[-1] = dt / 2.0
    samples = values * np.exp(-gamma2 * t) * weights
    size = 1 << int(math.ceil(math.log2(pad_factor * len(t))))
    padded = np.zeros(size, dtype=complex)
    padded[:len(t)] = samples
    transform = size * np.fft.ifft(padded)
    freqs = np.fft.fftfreq(size, dt)
    transform = transform * np.exp(2j * np.pi * freqs * t[0])
    return Spectrum(np.fft.fftshift(freqs), np.fft.fftshift(transform.real), float(gamma2))


def _lorentzian(f, amplitude, center, hwhm, baseline):
    return amplitude * hwhm ** 2 / ((f - center) ** 2 + hwhm ** 2) + baseline


def fit_lorentzian(spec: Spectrum, center: float, window: Optional[float] = None) -> Dict[str, float]:
    """Least-squares Lorentzian around `center`; returns amplitude, center and HWHM in Hz."""
    window = window if window is not None else 40.0 * max(spec.gamma2 / (2 * np.pi), spec.bin_width)
    mask = np.abs(spec.frequencies - center) <= window
    f, y = spec.frequencies[mask], spec.intensities[mask]
    if len(f) < 5:
        raise DomainError("too few points in the fit window")
    guess = [float(y.max()), center, max(spec.gamma2 / (2 * np.pi), spec.bin_width), 0.0]
    params, _ = curve_fit(_lorentzian, f, y, p0=guess, maxfev=20000)
    return {"amplitude": float(params[0]), "center": float(params[1]),
            "hwhm": float(abs(params[2])), "baseline": float(params[3])}


@dataclass(frozen=True)
class BlockEncodingReport:
    n_spins: int
    n_terms: int
    selection_qubits: int
    block_error: float
    walk_error: float

    @property
    def passed(self) -> bool:
        return self.block_error <= 1e-10 and self.walk_error <= 1e-8


def prepare_unitary(coefficients: np.ndarray, size: int) -> np.ndarray:
    """Unitary whose first column is sqrt(|c_i| / alpha), completed by QR."""
    amps = np.zeros(size)
    amps[:len(coefficients)] = np.sqrt(np.abs(coefficients) / np.sum(np.abs(coefficients)))
    seed = np.eye(size)
    seed[:, 0] = amps
    q, r = np.linalg.qr(seed)
    return q * np.sign(r[0, 0])


def block_encoding_matrices(h: SpinHamiltonian) -> Tuple[np.ndarray, np.ndarray, int]:
    """(U_H, W) with the selection register as the leading Kronecker factor."""
    if h.n_spins > settings.BLOCK_ENCODING_SPIN_CAP:
        raise OracleCapError(f"block encoding check is limited to "
                             f"{settings.BLOCK_ENCODING_SPIN_CAP} spins", settings.BLOCK_ENCODING_SPIN_CAP)
    if not 1 <= h.n_terms <= settings.BLOCK_ENCODING_TERM_CAP:
        raise OracleCapError(f"block encoding check needs 1..{settings.BLOCK_ENCODING_TERM_CAP} terms",
                             settings.BLOCK_ENCODING_TERM_CAP)
    m = int(math.ceil(math.log2(h.n_terms))) if h.n_terms > 1 else 0
    size = 2 ** m
    dim = 2 ** h.n_spins
    coeffs = h.coefficients
    select = np.zeros((size * dim, size * dim), dtype=complex)
    for i in range(size):
        block = slice(i * dim, (i + 1) * dim)
        if i < h.n_terms:
            term = h.terms[i]
            select[block, block] = np.sign(term.coefficient) * pauli_string(h.n_spins, term.factors).toarray()
        else:
            select[block, block] = np.eye(dim)
    prep = np.kron(prepare_unitary(coeffs, size), np.eye(dim))
    u_h = prep.conj().T @ select @ prep
    reflect = -np.eye(size)
    reflect[0, 0] = 1.0
    walk = np.kron(reflect, np.eye(dim)) @ u_h
    return u_h, walk, m


def verify_block_encoding(h: SpinHamiltonian) -> BlockEncodingReport:
    """Check <G|U_H|G> = H / alpha and the walk eigenvalues lambda +- i sqrt(1 - lambda^2)."""
    u_h, walk, m = block_encoding_matrices(h)
    dim = 2 ** h.n_spins
    target = dense_matrix(h) / h.alpha
    block_error = float(np.max(np.abs(u_h[:dim, :dim] - target)))

    lams, vecs = np.linalg.eigh(target)
    walk_error = 0.0
    for lam, v in zip(lams, vecs.T):
        b1 = np.zeros(walk.shape[0], dtype=complex)
        b1[:dim] = v
        wb1 = walk @ b1
        residual = wb1 - (b1.conj() @ wb1) * b1
        lam_c = float(np.clip(lam, -1.0, 1.0))
        if np.linalg.norm(residual) < 1e-12:
            walk_error = max(walk_error, abs((b1.conj() @ wb1) - lam_c))
            continue
        b2 = residual / np.linalg.norm(residual)
        basis = np.stack([b1, b2], axis=1)
        reduced = basis.conj().T @ walk @ basis
        got = np.linalg.eigvals(reduced)
        want = lam_c + 1j * np.array([1.0, -1.0]) * math.sqrt(max(0.0, 1.0 - lam_c ** 2))
        got = got[np.argsort(-got.imag)]
        walk_error = max(walk_error, float(np.max(np.abs(got - want))))
    report = BlockEncodingReport(h.n_spins, h.n_terms, m, block_error, walk_error)
    log.debug(f"block encoding N={h.n_spins} M={h.n_terms}: block {block_error:.1e}, walk {walk_error:.1e}")
    return report


def gqsp_crosscheck(h: SpinHamiltonian, plan: GqspPlan) -> float:
    """max over eigenvalues lambda of H/alpha of |P(e^{i arccos lambda}) - e^{i tau lambda}|."""
    lams = np.clip(np.linalg.eigvalsh(dense_matrix(h) / h.alpha), -1.0, 1.0)
    approx = plan.evaluate(np.exp(1j * np.arccos(lams)))
    return float(np.max(np.abs(approx - np.exp(1j * plan.tau * lams))))
