"""
Pure biphoton ququart states.

Each photon carries a polarization (H, V) and a frequency (h, l) label, so a pair
lives in a 16-dimensional space. Exchange symmetry leaves four complex amplitudes:
the symmetric polarization qutrit (C1, B+, C4) paired with the symmetric frequency
Bell state, and B- paired with the antisymmetric polarization and frequency Bell states.

Tensors are indexed [s1, w1, s2, w2] with (H, V) -> (0, 1) and (h, l) -> (0, 1).
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from constants import (NORM_TOLERANCE, CANONICAL_ZERO, STATE_SCHEMA_VERSION)
from errors import NotNormalized, ZeroState, NumericalFailure, QQLabError

log = logging.getLogger('qqlab.core_state')

Amplitude = complex

SQRT2 = math.sqrt(2.0)
INV_SQRT2 = 1.0 / SQRT2

# Bell-type two-mode factors, rows/cols = mode of photon 1 / photon 2
_SYMMETRIC = np.array([[0.0, INV_SQRT2], [INV_SQRT2, 0.0]])
_ANTISYMMETRIC = np.array([[0.0, INV_SQRT2], [-INV_SQRT2, 0.0]])

FIELDS = ('c1', 'b_plus', 'c4', 'b_minus')


def _amplitude(value) -> Amplitude:
    z = complex(value)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise QQLabError(f'Amplitude {value!r} is not finite')
    return z


@dataclass(frozen=True)
class QutritParams:
    c1: Amplitude
    b_plus: Amplitude
    c4: Amplitude

    def vector(self) -> np.ndarray:
        return np.array([self.c1, self.b_plus, self.c4], dtype=complex)

    def norm_squared(self) -> float:
        return float(abs(self.c1) ** 2 + abs(self.b_plus) ** 2 + abs(self.c4) ** 2)


@dataclass(frozen=True)
class QuquartParams:
    c1: Amplitude
    b_plus: Amplitude
    c4: Amplitude
    b_minus: Amplitude

    def vector(self) -> np.ndarray:
        return np.array([self.c1, self.b_plus, self.c4, self.b_minus], dtype=complex)

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.vector()) ** 2))

    @property
    def qutrit(self) -> QutritParams:
        return QutritParams(self.c1, self.b_plus, self.c4)

    def to_dict(self) -> dict:
        out = {'version': STATE_SCHEMA_VERSION}
        for name in FIELDS:
            z = getattr(self, name)
            out[name] = [z.real, z.imag]
        return out

    @classmethod
    def from_dict(cls, data: dict, renormalize: bool = False) -> 'QuquartParams':
        version = data.get('version', STATE_SCHEMA_VERSION)
        if version != STATE_SCHEMA_VERSION:
            raise QQLabError(f'Unsupported state schema version {version!r}')
        try:
            values = [complex(*data[name]) for name in FIELDS]
        except (KeyError, TypeError) as e:
            raise QQLabError(f'Malformed state record: {e}') from e
        return make_ququart(*values, renormalize=renormalize)

    def __str__(self):
        return ', '.join(f'{name}={getattr(self, name):.6g}' for name in FIELDS)


def make_ququart(c1, b_plus, c4, b_minus, renormalize: bool = False) -> QuquartParams:
    values = [_amplitude(v) for v in (c1, b_plus, c4, b_minus)]
    norm = math.sqrt(sum(abs(v) ** 2 for v in values))
    if norm == 0.0:
        raise ZeroState()
    if abs(norm - 1.0) > NORM_TOLERANCE:
        if not renormalize:
            raise NotNormalized(norm)
        log.debug('renormalizing state with norm %r', norm)
        values = [v / norm for v in values]
    return QuquartParams(*values)


def b_from_c(c2, c3) -> tuple:
    c2, c3 = complex(c2), complex(c3)
    return (c2 + c3) * INV_SQRT2, (c2 - c3) * INV_SQRT2


def c_from_b(b_plus, b_minus) -> tuple:
    b_plus, b_minus = complex(b_plus), complex(b_minus)
    return (b_plus + b_minus) * INV_SQRT2, (b_plus - b_minus) * INV_SQRT2


def polarization_qutrit_matrix(q) -> np.ndarray:
    half_b = q.b_plus * INV_SQRT2
    return np.array([[q.c1, half_b], [half_b, q.c4]], dtype=complex)


def wave_function(q: QuquartParams) -> np.ndarray:
    psi = np.einsum('ac,bd->abcd', polarization_qutrit_matrix(q), _SYMMETRIC)
    psi = psi + q.b_minus * np.einsum('ac,bd->abcd', _ANTISYMMETRIC, _ANTISYMMETRIC)
    return psi.astype(complex)


def rotate_frame(q: QuquartParams, alpha: float) -> QuquartParams:
    """Amplitudes seen by polarizers turned by alpha (radians)."""
    c, s = math.cos(alpha), math.sin(alpha)
    cs = SQRT2 * c * s
    c1 = c * c * q.c1 + cs * q.b_plus + s * s * q.c4
    b_plus = -cs * (q.c1 - q.c4) + math.cos(2 * alpha) * q.b_plus
    c4 = s * s * q.c1 - cs * q.b_plus + c * c * q.c4
    return QuquartParams(c1, b_plus, c4, q.b_minus)


def polarizer_rows(alpha: float) -> np.ndarray:
    """Projection rows for the transmitted (alpha) and reflected (alpha + 90) ports."""
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([[c, s], [-s, c]])


def rotate_polarization(psi: np.ndarray, alpha: float) -> np.ndarray:
    r = polarizer_rows(alpha)
    return np.einsum('ai,bj,ixjy->axby', r, r, psi)


def canonicalize(q: QuquartParams) -> QuquartParams:
    """Strip the global phase: B+ real >= 0, else C1, else C4, else B-."""
    for name in ('b_plus', 'c1', 'c4', 'b_minus'):
        z = getattr(q, name)
        if abs(z) > CANONICAL_ZERO:
            u = abs(z) / z
            values = [getattr(q, f) * u for f in FIELDS]
            # kill the residual imaginary part of the reference amplitude
            values[FIELDS.index(name)] = complex(abs(z), 0.0)
            return QuquartParams(*values)
    raise ZeroState()


def pure_schmidt_number(psi: np.ndarray) -> float:
    try:
        singular = np.linalg.svd(np.asarray(psi).reshape(4, 4), compute_uv=False)
    except np.linalg.LinAlgError as e:
        raise NumericalFailure(f'SVD did not converge: {e}') from e
    return float(1.0 / np.sum(singular ** 4))


def random_ququart(rng: np.random.Generator) -> QuquartParams:
    z = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    z = z / np.linalg.norm(z)
    return QuquartParams(*(complex(v) for v in z))
