"""
Density matrices of ququart states and the frequency-traced polarization state.
"""
import math
from dataclasses import dataclass

import numpy as np

import core_state
from constants import (BASIS_POL_FREQ_16, BASIS_BELL_4, BASIS_HV_2, TRACE_TOLERANCE,
                       PSD_TOLERANCE)
from errors import NotTraceOne, NotPSD, QQLabError

_S = 1.0 / math.sqrt(2.0)

# Columns: HH, Psi+, VV, Psi- written in the product basis HH, HV, VH, VV
BELL_TO_PRODUCT = np.array([
    [1.0, 0.0, 0.0, 0.0],
    [0.0, _S, 0.0, _S],
    [0.0, _S, 0.0, -_S],
    [0.0, 0.0, 1.0, 0.0],
], dtype=complex)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    entries: np.ndarray
    basis = ''

    def trace(self) -> float:
        return float(np.real(np.trace(self.entries)))

    def to_dict(self) -> dict:
        rows = [[[float(z.real), float(z.imag)] for z in row] for row in self.entries]
        return {'basis': self.basis, 'entries': rows}

    @classmethod
    def from_dict(cls, data: dict):
        if data.get('basis') != cls.basis:
            raise QQLabError(f'Expected basis {cls.basis!r}, got {data.get("basis")!r}')
        entries = np.array([[complex(*pair) for pair in row] for row in data['entries']])
        return cls(entries)


class DensityMatrix16(DensityMatrix):
    basis = BASIS_POL_FREQ_16


class MPSDensity(DensityMatrix):
    basis = BASIS_BELL_4

    def product_basis(self) -> np.ndarray:
        return BELL_TO_PRODUCT @ self.entries @ BELL_TO_PRODUCT.conj().T


class ReducedDensity2(DensityMatrix):
    basis = BASIS_HV_2


@dataclass(frozen=True)
class StokesVector:
    s1: float
    s2: float
    s3: float

    def length(self) -> float:
        return math.sqrt(self.s1 ** 2 + self.s2 ** 2 + self.s3 ** 2)


def full_density(psi: np.ndarray) -> DensityMatrix16:
    v = np.asarray(psi, dtype=complex).reshape(16)
    return DensityMatrix16(np.outer(v, v.conj()))


def trace_out_frequency(rho: DensityMatrix16) -> MPSDensity:
    tr = rho.trace()
    if abs(tr - 1.0) > TRACE_TOLERANCE:
        raise NotTraceOne(f'Trace {tr!r} deviates from 1')
    t = rho.entries.reshape((2,) * 8)
    # row (s1 w1 s2 w2), col (s1' w1' s2' w2'); sum over w1 = w1', w2 = w2'
    product = np.einsum('aibjcidj->abcd', t).reshape(4, 4)
    return MPSDensity(BELL_TO_PRODUCT.conj().T @ product @ BELL_TO_PRODUCT)


def mps_closed_form(q) -> MPSDensity:
    """Block form: qutrit projector plus |B-|^2 on the singlet."""
    m = np.zeros((4, 4), dtype=complex)
    u = q.qutrit.vector()
    m[:3, :3] = np.outer(u, u.conj())
    m[3, 3] = abs(q.b_minus) ** 2
    return MPSDensity(m)


def mps_density(q) -> MPSDensity:
    return trace_out_frequency(full_density(core_state.wave_function(q)))


def reduce_one_photon(rho_bar: MPSDensity, traced_photon: int = 2) -> ReducedDensity2:
    t = rho_bar.product_basis().reshape(2, 2, 2, 2)
    if traced_photon == 2:
        return ReducedDensity2(np.einsum('abcb->ac', t))
    if traced_photon == 1:
        return ReducedDensity2(np.einsum('abad->bd', t))
    raise QQLabError(f'traced_photon must be 1 or 2, got {traced_photon!r}')


def reduced_closed_form(q) -> ReducedDensity2:
    mixed = (abs(q.b_plus) ** 2 + abs(q.b_minus) ** 2) / 2
    off = (q.c1 * q.b_plus.conjugate() + q.b_plus * q.c4.conjugate()) / math.sqrt(2.0)
    return ReducedDensity2(np.array([
        [abs(q.c1) ** 2 + mixed, off],
        [off.conjugate(), abs(q.c4) ** 2 + mixed],
    ], dtype=complex))


def photon_polarization(rho: DensityMatrix16) -> ReducedDensity2:
    """Polarization state of photon 1, tracing its frequency and all of photon 2."""
    t = rho.entries.reshape((2,) * 8)
    return ReducedDensity2(np.einsum('aibjcibj->ac', t))


def stokes_and_polarization(rho_r: ReducedDensity2) -> tuple:
    m = rho_r.entries
    stokes = StokesVector(
        s1=float(2 * m[0, 1].real),
        s2=float(-2 * m[0, 1].imag),
        s3=float((m[0, 0] - m[1, 1]).real),
    )
    return stokes, stokes.length()


def _eigenvalues(m: np.ndarray) -> np.ndarray:
    if m.shape == (2, 2):
        mean = (m[0, 0].real + m[1, 1].real) / 2
        gap = math.hypot((m[0, 0].real - m[1, 1].real) / 2, abs(m[0, 1]))
        return np.array([mean - gap, mean + gap])
    return np.linalg.eigvalsh(m)


def von_neumann_entropy(rho) -> float:
    """Entropy in bits."""
    m = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    eig = _eigenvalues(m)
    if eig.min() < -PSD_TOLERANCE:
        raise NotPSD(f'Minimum eigenvalue {eig.min()!r}')
    eig = eig[eig > 0]
    return float(max(0.0, -np.sum(eig * np.log2(eig))))


def purity(rho) -> float:
    m = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    return float(np.real(np.trace(m @ m)))
