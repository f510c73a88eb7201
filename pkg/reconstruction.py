"""
Inversion of coincidence records into ququart parameters.

Magnitudes come from the HV-frame records, the phases of C1 and C4 from the slopes of
w(a|a) around 0 and 90 degrees, B+ from the 45/135 record and the phase of B- from a
frequency-resolved record. Phase conventions: B+ real >= 0 (C1 real when B+ = 0) and,
since every probability is invariant under complex conjugation of the state, the phase
of the first free amplitude is returned in [0, pi].
"""
import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar

import core_state
import measurement
from constants import (ZERO_FLOOR, SLOPE_FLOOR, LINEAR_FIT_RATIO, ANGLE_DEGENERACY,
                       RANGE_TOLERANCE, SAMPLED_RANGE_TOLERANCE, ROOT_GRID_POINTS,
                       ROOT_MAX_ITERATIONS, ROOT_RESIDUAL, ROOT_DEDUP, PHASE_DEGENERACY,
                       EXACT_RESOLUTION, VAR_ALPHA0_DEG_DEFAULT, HALF_PI)
from errors import (MissingRecords, InconsistentTotals, EmptyRecord, DegenerateAngle,
                    OutOfRange, NoRoot, AmbiguousRoot, Degenerate, QQLabError)

log = logging.getLogger('qqlab.reconstruction')

SCENARIO_ZERO_C = 'zero_c'
SCENARIO_SINGLE_C = 'single_c'
SCENARIO_GENERAL = 'general'
SCENARIO_ZERO_BPLUS = 'zero_bplus'

FIT_LINEAR = 'linear'
FIT_PARABOLA = 'parabola'
FIT_FLAT = 'flat'

INVERSIONS = {
    SCENARIO_ZERO_C: 'B+ from the rotated-frame w(a|a) at one angle',
    SCENARIO_SINGLE_C: 'B- from w(135|45) with one vanishing C',
    SCENARIO_GENERAL: 'B+ root of the 45/135 equation with slope phases',
    SCENARIO_ZERO_BPLUS: 'phase of C4 from the curvature of w(a|a)',
}

SQRT8 = 2 * math.sqrt(2.0)
_DEG = math.pi / 180


def _deg(value: float) -> float:
    return value * _DEG


def default_alpha0() -> float:
    return _deg(VAR_ALPHA0_DEG_DEFAULT)


def campaign(alpha0_deg: float = VAR_ALPHA0_DEG_DEFAULT) -> list:
    """Every configuration the reconstruction may ask for, as (deg1, deg2, filter1, filter2)."""
    a = alpha0_deg
    return [
        (0.0, 0.0, None, None),
        (0.0, 90.0, None, None),
        (90.0, 90.0, None, None),
        (45.0, 45.0, None, None),
        (135.0, 45.0, None, None),
        (180.0 - a, 180.0 - a, None, None),
        (a, a, None, None),
        (90.0 - a, 90.0 - a, None, None),
        (90.0 + a, 90.0 + a, None, None),
        (0.0, 90.0, 'h', 'l'),
        (45.0, 135.0, 'h', 'l'),
    ]


def measurement_plan(scenario: Optional[str] = None, alpha0_deg: float = VAR_ALPHA0_DEG_DEFAULT) -> list:
    full = campaign(alpha0_deg)
    hv, zero_c, w135, slopes, freq = full[:3], [full[3]], [full[4]], full[5:9], full[9:]
    plans = {
        SCENARIO_ZERO_C: hv + zero_c + freq,
        SCENARIO_SINGLE_C: hv + w135 + slopes + freq,
        SCENARIO_GENERAL: hv + w135 + slopes + freq,
        SCENARIO_ZERO_BPLUS: hv + w135 + slopes + freq,
    }
    if scenario is None:
        return full
    if scenario not in plans:
        raise QQLabError(f'Unknown scenario {scenario!r}')
    return plans[scenario]


def _label(theta1, theta2, f1=None, f2=None) -> str:
    text = f'{measurement.angle_label(theta1)}/{measurement.angle_label(theta2)}'
    if f1 is not None or f2 is not None:
        text += f' {f1 or "-"}/{f2 or "-"}'
    return text


class RecordSet:
    def __init__(self, records):
        self.records = list(records)
        if not self.records:
            raise EmptyRecord('No count records supplied')
        for record in self.records:
            record.validate()
        modes = {record.exact for record in self.records}
        if len(modes) > 1:
            raise InconsistentTotals('Exact-probability and sampled records cannot be mixed')
        self.exact = modes.pop()
        self.used = []

    def find(self, theta1, theta2, f1=None, f2=None):
        for record in self.records:
            if record.contains(theta1, theta2, f1, f2):
                if record not in self.used:
                    self.used.append(record)
                return record
        return None

    def has(self, theta1, theta2, f1=None, f2=None) -> bool:
        return any(r.contains(theta1, theta2, f1, f2) for r in self.records)

    def ratio(self, theta1, theta2, f1=None, f2=None):
        """Return (w, n_total) for an outcome, n_total 0 for exact records."""
        record = self.find(theta1, theta2, f1, f2)
        if record is None:
            raise MissingRecords([_label(theta1, theta2, f1, f2)])
        return record.ratio(theta1, theta2, f1, f2), record.n_total

    def require(self, needed):
        missing = [_label(_deg(a), _deg(b), f1, f2) for a, b, f1, f2 in needed
                   if not self.has(_deg(a), _deg(b), f1, f2)]
        if missing:
            raise MissingRecords(missing)

    @property
    def range_tolerance(self) -> float:
        return RANGE_TOLERANCE if self.exact else SAMPLED_RANGE_TOLERANCE

    def zero_threshold(self) -> float:
        if self.exact:
            return ZERO_FLOOR
        n = min(r.n_total for r in self.records)
        return max(ZERO_FLOOR, math.sqrt(9.0 / n))


def _variance(w: float, n: int) -> float:
    return w * (1 - w) / n if n > 0 else 0.0


@dataclass
class SlopeEstimate:
    tan_theta: float
    parabola_k: float
    alpha0: float
    fit_kind: str
    std_error: float = 0.0

    def __post_init__(self):
        if self.alpha0 <= 0:
            raise QQLabError(f'alpha0 must be positive, got {self.alpha0!r}')


@dataclass
class MPSEstimate:
    abs_c1: float
    abs_c4: float
    b_plus: float
    abs_b_minus: float
    phi1: float
    phi4: float
    scenario: str
    phase_sign_ambiguity: dict = field(default_factory=lambda: {'phi1': False, 'phi4': False})
    residuals: dict = field(default_factory=dict)

    def norm_squared(self) -> float:
        return self.abs_c1 ** 2 + self.abs_c4 ** 2 + self.b_plus ** 2 + self.abs_b_minus ** 2

    def to_dict(self) -> dict:
        return {
            'abs_c1': self.abs_c1,
            'abs_c4': self.abs_c4,
            'b_plus': self.b_plus,
            'abs_b_minus': self.abs_b_minus,
            'phi1': self.phi1,
            'phi4': self.phi4,
            'scenario': self.scenario,
            'inversion': INVERSIONS[self.scenario],
            'phase_sign_ambiguity': dict(self.phase_sign_ambiguity),
            'residuals': dict(self.residuals),
        }


@dataclass
class QuquartEstimate:
    mps: MPSEstimate
    phi_minus: float
    phi_minus_sign_ambiguity: bool = False
    ambiguous: bool = False
    residual: float = 0.0
    candidates: int = 1
    records_used: list = field(default_factory=list)

    def to_params(self) -> core_state.QuquartParams:
        m = self.mps
        return core_state.make_ququart(
            cmath.rect(m.abs_c1, m.phi1), m.b_plus, cmath.rect(m.abs_c4, m.phi4),
            cmath.rect(m.abs_b_minus, self.phi_minus), renormalize=True)

    def to_dict(self) -> dict:
        out = self.mps.to_dict()
        out.update({
            'phi_minus': self.phi_minus,
            'phi_minus_sign_ambiguity': self.phi_minus_sign_ambiguity,
            'ambiguous': self.ambiguous,
            'forward_residual': self.residual,
            'candidates': self.candidates,
            'records_used': list(self.records_used),
            'state': self.to_params().to_dict(),
        })
        return out


def estimate_hv_magnitudes(records) -> tuple:
    rs = records if isinstance(records, RecordSet) else RecordSet(records)
    w_hh, n_hh = rs.ratio(0.0, 0.0)
    w_hv, n_hv = rs.ratio(0.0, HALF_PI)
    w_vv, n_vv = rs.ratio(HALF_PI, HALF_PI)
    total = w_hh + 2 * w_hv + w_vv
    spread = math.sqrt(_variance(w_hh, n_hh) + 4 * _variance(w_hv, n_hv) + _variance(w_vv, n_vv))
    limit = rs.range_tolerance if rs.exact else max(rs.range_tolerance, 6 * spread)
    if abs(total - 1.0) > limit:
        raise InconsistentTotals(f'HV-frame ratios sum to {total!r}')
    return math.sqrt(w_hh), math.sqrt(w_vv), w_hv


def classify_scenario(abs_c1: float, abs_c4: float, slopes=None, zero_threshold: float = ZERO_FLOOR) -> str:
    zero1 = abs_c1 <= zero_threshold
    zero4 = abs_c4 <= zero_threshold
    if zero1 and zero4:
        return SCENARIO_ZERO_C
    if zero1 or zero4:
        return SCENARIO_SINGLE_C
    if slopes is not None and all(s.fit_kind == FIT_FLAT for s in slopes):
        return SCENARIO_ZERO_BPLUS
    return SCENARIO_GENERAL


def _ratio_of(record, alpha: float) -> float:
    if isinstance(record, RecordSet):
        return record.ratio(alpha, alpha)[0]
    if not record.contains(alpha, alpha):
        raise MissingRecords([_label(alpha, alpha)])
    return record.ratio(alpha, alpha)


def reconstruct_zero_c(record, alpha: float, tolerance: float = RANGE_TOLERANCE) -> tuple:
    s2 = math.sin(2 * alpha)
    if abs(s2) < ANGLE_DEGENERACY:
        raise DegenerateAngle(f'sin(2a) vanishes at a={math.degrees(alpha):g} deg')
    w = _ratio_of(record, alpha)
    b2 = 2 * w / (s2 * s2)
    if b2 > 1 + tolerance:
        raise OutOfRange(f'|B+|^2 = {b2!r} exceeds 1')
    b2 = min(b2, 1.0)
    return math.sqrt(b2), math.sqrt(1 - b2)


def reconstruct_single_c(abs_c: float, record, tolerance: float = RANGE_TOLERANCE) -> tuple:
    """abs_c is the magnitude of whichever of C1, C4 does not vanish."""
    if isinstance(record, RecordSet):
        w = record.ratio(_deg(135), _deg(45))[0]
    else:
        if not record.contains(_deg(135), _deg(45)):
            raise MissingRecords(['135/45'])
        w = record.ratio(_deg(135), _deg(45))
    bm2 = 2 * (w - abs_c ** 2 / 4)
    if bm2 < -tolerance:
        raise OutOfRange(f'|B-|^2 = {bm2!r} is negative')
    bm2 = max(bm2, 0.0)
    bp2 = 1 - abs_c ** 2 - bm2
    if bp2 < -tolerance:
        raise OutOfRange(f'|B+|^2 = {bp2!r} is negative')
    return math.sqrt(bm2), math.sqrt(max(bp2, 0.0))


def fit_three_points(w_a, w_o, w_b, var_a, var_b, alpha0: float, exact: bool) -> SlopeEstimate:
    t = (w_b - w_a) / (2 * alpha0)
    k = (w_a + w_b - 2 * w_o) / (2 * alpha0 ** 2)
    se = math.sqrt(var_a + var_b) / (2 * alpha0)
    threshold = SLOPE_FLOOR if exact else max(3 * se, SLOPE_FLOOR)
    if abs(t) < threshold:
        kind = FIT_FLAT
    elif abs(k) * alpha0 < LINEAR_FIT_RATIO * abs(t):
        kind = FIT_LINEAR
    else:
        kind = FIT_PARABOLA
    return SlopeEstimate(t, k, alpha0, kind, se)


def estimate_slopes(records, alpha0: float = None) -> tuple:
    rs = records if isinstance(records, RecordSet) else RecordSet(records)
    alpha0 = default_alpha0() if alpha0 is None else alpha0
    out = []
    for center in (0.0, HALF_PI):
        points = []
        for a in (center - alpha0, center, center + alpha0):
            points.append(rs.ratio(a, a))
        (w_a, n_a), (w_o, _), (w_b, n_b) = points
        out.append(fit_three_points(w_a, w_o, w_b, _variance(w_a, n_a), _variance(w_b, n_b), alpha0, rs.exact))
    return tuple(out)


def correct_tangents(t1: float, t4: float, alpha0: float, single: Optional[int] = None) -> tuple:
    """
    Exact tangents at 0 and 90 degrees from the three-point slopes.

    The odd part of w(a|a) at +-alpha0 is cs(c^2 T1 - s^2 T4) around 0 and
    cs(c^2 T4 - s^2 T1) around 90. With single=1 (C4 = 0) or single=4 (C1 = 0)
    only one tangent survives.
    """
    c, s = math.cos(alpha0), math.sin(alpha0)
    if single == 1:
        return t1 * alpha0 / (c ** 3 * s), 0.0
    if single == 4:
        return 0.0, t4 * alpha0 / (c ** 3 * s)
    y1 = t1 * alpha0 / (c * s)
    y4 = t4 * alpha0 / (c * s)
    det = math.cos(2 * alpha0)
    if abs(det) < ANGLE_DEGENERACY:
        raise DegenerateAngle('alpha0 too close to 45 degrees')
    return (c * c * y1 + s * s * y4) / det, (s * s * y1 + c * c * y4) / det


@dataclass
class GeneralRoot:
    b_plus: float
    phi1: float
    phi4: float
    branch: int
    residual: float


def _cosines(b, abs_c1, abs_c4, tan1, tan4):
    cos1 = float(np.clip(tan1 / (SQRT8 * abs_c1 * b), -1.0, 1.0))
    cos4 = float(np.clip(-tan4 / (SQRT8 * abs_c4 * b), -1.0, 1.0))
    return cos1, cos4


def _b_plus_residual(b, branch, abs_c1, abs_c4, tan1, tan4, cross, w_45_135):
    cos1, cos4 = _cosines(b, abs_c1, abs_c4, tan1, tan4)
    cos_diff = cos1 * cos4 + branch * math.sqrt((1 - cos1 ** 2) * (1 - cos4 ** 2))
    diff2 = abs_c1 ** 2 + abs_c4 ** 2 - 2 * abs_c1 * abs_c4 * cos_diff
    return diff2 / 4 + cross - b * b / 2 - w_45_135


def _scan_grid(b_lo: float, b_hi: float, points: int) -> np.ndarray:
    # phase terms grow like sqrt(b - b_lo), so the grid is quadratic in the distance to b_lo
    u = np.linspace(0.0, 1.0, points)
    return b_lo + (b_hi - b_lo) * u * u


def _scan_roots(f, grid) -> list:
    values = np.array([f(b) for b in grid])
    roots = [float(b) for b, v in zip(grid, values) if abs(v) < ROOT_RESIDUAL]
    brackets = [(grid[i], grid[i + 1]) for i in range(len(grid) - 1) if values[i] * values[i + 1] < 0]

    # a pair of roots can hide between two grid points around a local extremum
    last = len(grid) - 1
    slope = np.sign(np.diff(values))
    suspects = {0, last} | {i for i in range(1, last) if slope[i - 1] != slope[i]}
    for i in sorted(suspects):
        if last == 0 or abs(values[i]) < ROOT_RESIDUAL:
            continue
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, last)]
        s = math.copysign(1.0, values[i])
        res = minimize_scalar(lambda b: s * f(b), bounds=(lo, hi), method='bounded',
                              options={'xatol': 1e-14, 'maxiter': ROOT_MAX_ITERATIONS})
        fm = f(res.x)
        if abs(fm) < ROOT_RESIDUAL:
            roots.append(float(res.x))
        elif s * fm < 0:
            brackets.extend((a, b) for a, b in ((lo, res.x), (res.x, hi)) if f(a) * f(b) < 0)

    for a, b in brackets:
        roots.append(float(brentq(f, a, b, xtol=1e-15, maxiter=ROOT_MAX_ITERATIONS)))
    return roots


def find_b_plus_roots(abs_c1, abs_c4, tan_theta1, tan_theta4, cross, w_45_135,
                      tolerance: float = 0.0) -> list:
    """
    All B+ solving the 45/135 equation on the feasible interval, on both sign branches
    of the C1-C4 phase difference. tolerance > 0 admits a best-fit point for noisy data.
    """
    args = (abs_c1, abs_c4, tan_theta1, tan_theta4, cross, w_45_135)
    b_hi = math.sqrt(max(2 * cross, 0.0))
    b_lo = max(abs(tan_theta1) / (SQRT8 * abs_c1), abs(tan_theta4) / (SQRT8 * abs_c4), 1e-12)
    if b_lo > b_hi + max(tolerance, ROOT_RESIDUAL):
        raise NoRoot(f'feasible B+ interval is empty ({b_lo:.6g} > {b_hi:.6g})')
    b_lo = min(b_lo, b_hi)

    found = []
    for branch in (1, -1):
        f = lambda b: _b_plus_residual(b, branch, *args)
        if b_hi - b_lo < ROOT_RESIDUAL:
            grid = np.array([b_hi])
        else:
            grid = _scan_grid(b_lo, b_hi, ROOT_GRID_POINTS)
        found.extend((b, branch) for b in _scan_roots(f, grid))
        log.debug('branch %+d: %d candidate roots on [%.6g, %.6g]', branch, len(found), b_lo, b_hi)

    if not found and tolerance > 0:
        fine = _scan_grid(b_lo, b_hi, 16 * ROOT_GRID_POINTS) if b_hi > b_lo else np.array([b_hi])
        best = min(((abs(_b_plus_residual(b, s, *args)), float(b), s) for s in (1, -1) for b in fine))
        if best[0] < tolerance:
            log.warning('45/135 equation has no exact root; using best fit (residual %.3g)', best[0])
            found.append((best[1], best[2]))
    if not found:
        raise NoRoot('45/135 equation has no root on the feasible B+ interval')

    roots = []
    for b, branch in sorted(found):
        cos1, cos4 = _cosines(b, abs_c1, abs_c4, tan_theta1, tan_theta4)
        phi1 = math.acos(cos1)
        phi4 = branch * math.acos(cos4)
        cos_diff = math.cos(phi1 - phi4)
        duplicate = any(abs(r.b_plus - b) < ROOT_DEDUP and abs(math.cos(r.phi1 - r.phi4) - cos_diff) < ROOT_DEDUP
                        for r in roots)
        if not duplicate:
            roots.append(GeneralRoot(b, phi1, phi4, branch, abs(_b_plus_residual(b, branch, *args))))
    return roots


def solve_b_plus_general(abs_c1, abs_c4, tan_theta1, tan_theta4, cross, w_45_135) -> tuple:
    roots = find_b_plus_roots(abs_c1, abs_c4, tan_theta1, tan_theta4, cross, w_45_135)
    if len(roots) > 1:
        raise AmbiguousRoot(roots)
    r = roots[0]
    return r.b_plus, r.phi1, r.phi4


def reconstruct_zero_bplus(abs_c1: float, abs_c4: float, parabola_k: float, alpha0: float = None,
                           tolerance: float = RANGE_TOLERANCE) -> tuple:
    """
    Phase of C4 (C1 real, B+ = 0) from the curvature of w(a|a) at 0.

    With alpha0 the three-point curvature is inverted exactly; without it the small-angle
    limit k = 2|C1|(|C4|cos(phi4) - |C1|) is used. Returns (phi4 >= 0, sign ambiguous).
    """
    if alpha0 is None:
        cos4 = (parabola_k / (2 * abs_c1) + abs_c1) / abs_c4
    else:
        c2, s2 = math.cos(alpha0) ** 2, math.sin(alpha0) ** 2
        numerator = abs_c1 ** 2 * (1 - c2 * c2) + parabola_k * alpha0 ** 2 - s2 * s2 * abs_c4 ** 2
        cos4 = numerator / (2 * c2 * s2 * abs_c1 * abs_c4)
    if abs(cos4) > 1 + tolerance:
        raise OutOfRange(f'cos(phi4) = {cos4!r} from the curvature')
    cos4 = float(np.clip(cos4, -1.0, 1.0))
    phi4 = math.acos(cos4)
    return phi4, 0.0 < phi4 < math.pi


def _b_plus_at(mps: MPSEstimate, alpha: float) -> complex:
    q = core_state.QuquartParams(cmath.rect(mps.abs_c1, mps.phi1), complex(mps.b_plus),
                                 cmath.rect(mps.abs_c4, mps.phi4), complex(mps.abs_b_minus))
    return core_state.rotate_frame(q, alpha).b_plus


def _c_difference(mps: MPSEstimate) -> float:
    d2 = mps.abs_c1 ** 2 + mps.abs_c4 ** 2 - 2 * mps.abs_c1 * mps.abs_c4 * math.cos(mps.phi1 - mps.phi4)
    return math.sqrt(max(d2, 0.0))


def _frequency_records(records) -> list:
    return [r for r in records if r.config.frequency_resolved]


def _phase_minus_candidates(mps: MPSEstimate, freq_record, tolerance: float) -> tuple:
    s1, s2 = freq_record.config.settings
    alpha = s1.angle
    if not measurement.same_angle(s2.angle, alpha + HALF_PI):
        raise QQLabError(f'{freq_record.config}: channel 2 must sit at channel 1 + 90 deg')
    b_alpha = _b_plus_at(mps, alpha)
    scale = abs(b_alpha) * mps.abs_b_minus
    if scale < PHASE_DEGENERACY:
        raise Degenerate(f'|B+|*|B-| = {scale:.3g} at {measurement.angle_label(alpha)} deg: phase of B- unobservable')
    f1 = s1.frequency_filter or 'h'
    f2 = s2.frequency_filter or ('l' if f1 == 'h' else 'h')
    if f1 == f2:
        raise QQLabError(f'{freq_record.config}: filters must select different frequencies')
    w = 2 * freq_record.ratio(alpha, alpha + HALF_PI, f1, f2)
    cos_rel = (2 * w - abs(b_alpha) ** 2 - mps.abs_b_minus ** 2) / (2 * scale)
    if f1 == 'l':
        # (l, h) outcome carries |B+ - B-|^2
        cos_rel = -cos_rel
    if abs(cos_rel) > 1 + tolerance:
        raise OutOfRange(f'cos(phi- - phi_ref) = {cos_rel!r}')
    delta = math.acos(float(np.clip(cos_rel, -1.0, 1.0)))
    ref = cmath.phase(b_alpha)
    return _wrap(ref + delta), _wrap(ref - delta), 0.0 < delta < math.pi


def _wrap(phi: float) -> float:
    return math.atan2(math.sin(phi), math.cos(phi))


def _best_freq_record(mps: MPSEstimate, records):
    best, best_scale = None, -1.0
    for record in _frequency_records(records):
        scale = abs(_b_plus_at(mps, record.config.settings[0].angle)) * mps.abs_b_minus
        if scale > best_scale:
            best, best_scale = record, scale
    return best


def reconstruct_phase_minus(mps: MPSEstimate, freq_record, tolerance: float = RANGE_TOLERANCE) -> QuquartEstimate:
    if mps.abs_b_minus < PHASE_DEGENERACY:
        raise Degenerate('B- vanishes: no phase to determine')
    plus, _, ambiguous = _phase_minus_candidates(mps, freq_record, tolerance)
    return QuquartEstimate(mps, plus, phi_minus_sign_ambiguity=ambiguous,
                           records_used=[freq_record.source or str(freq_record.config)])


def forward_residual(q, records) -> float:
    total = 0.0
    for record in records:
        dist = measurement.exact_distribution(q, record.config)
        total += float(np.sum((record.ratios() - dist.probabilities) ** 2))
    return total


def _noise_scale(records) -> float:
    scale = 0.0
    for record in records:
        if record.n_total > 0:
            p = record.ratios()
            scale += float(np.sum(p * (1 - p))) / record.n_total
    return scale


def _mps_candidates(rs: RecordSet, alpha0: float) -> tuple:
    abs_c1, abs_c4, cross = estimate_hv_magnitudes(rs)
    threshold = rs.zero_threshold()
    tol = rs.range_tolerance
    residuals = {'hv_normalization': abs(abs_c1 ** 2 + abs_c4 ** 2 + 2 * cross - 1)}
    alpha0_deg = math.degrees(alpha0)

    if classify_scenario(abs_c1, abs_c4, None, threshold) == SCENARIO_ZERO_C:
        rs.require(measurement_plan(SCENARIO_ZERO_C, alpha0_deg)[3:4])
        b_plus, b_minus = reconstruct_zero_c(rs, _deg(45), tol)
        mps = MPSEstimate(0.0, 0.0, b_plus, b_minus, 0.0, 0.0, SCENARIO_ZERO_C, residuals=residuals)
        return [mps], SCENARIO_ZERO_C

    rs.require(measurement_plan(SCENARIO_GENERAL, alpha0_deg)[3:8])
    slopes = estimate_slopes(rs, alpha0)
    scenario = classify_scenario(abs_c1, abs_c4, slopes, threshold)
    w_45_135 = rs.ratio(_deg(135), _deg(45))[0]

    if scenario == SCENARIO_SINGLE_C:
        c1_side = abs_c1 > threshold
        abs_c = abs_c1 if c1_side else abs_c4
        b_minus, b_plus = reconstruct_single_c(abs_c, rs, tol)
        phase = 0.0
        if b_plus > threshold:
            t1, t4 = correct_tangents(slopes[0].tan_theta, slopes[1].tan_theta, alpha0, 1 if c1_side else 4)
            tangent = t1 if c1_side else -t4
            cos_c = tangent / (SQRT8 * abs_c * b_plus)
            if abs(cos_c) > 1 + tol:
                raise OutOfRange(f'cos(phase of C) = {cos_c!r} from the slope')
            phase = math.acos(float(np.clip(cos_c, -1.0, 1.0)))
        flags = {'phi1': c1_side and 0.0 < phase < math.pi, 'phi4': (not c1_side) and 0.0 < phase < math.pi}
        mps = MPSEstimate(abs_c1 if c1_side else 0.0, 0.0 if c1_side else abs_c4, b_plus, b_minus,
                          phase if c1_side else 0.0, 0.0 if c1_side else phase, scenario,
                          phase_sign_ambiguity=flags, residuals=residuals)
        return [mps], scenario

    if scenario == SCENARIO_ZERO_BPLUS:
        phi4, flag = reconstruct_zero_bplus(abs_c1, abs_c4, slopes[0].parabola_k, alpha0, tol)
        c_diff2 = abs_c1 ** 2 + abs_c4 ** 2 - 2 * abs_c1 * abs_c4 * math.cos(phi4)
        expected = c_diff2 / 4 + cross
        mismatch = abs(expected - w_45_135)
        limit = tol if rs.exact else max(tol, 6 * math.sqrt(_variance(w_45_135, rs.records[0].n_total)))
        if mismatch <= limit:
            residuals['w_135_45'] = mismatch
            mps = MPSEstimate(abs_c1, abs_c4, 0.0, math.sqrt(max(2 * cross, 0.0)), 0.0, phi4, scenario,
                              phase_sign_ambiguity={'phi1': False, 'phi4': flag}, residuals=residuals)
            return [mps], scenario
        log.warning('flat slopes but w(135|45) off by %.3g: B+ is not zero, using the general branch', mismatch)
        scenario = SCENARIO_GENERAL

    t1, t4 = correct_tangents(slopes[0].tan_theta, slopes[1].tan_theta, alpha0)
    roots = find_b_plus_roots(abs_c1, abs_c4, t1, t4, cross, w_45_135, 0.0 if rs.exact else tol)
    if len(roots) > 1:
        log.info('45/135 equation has %d roots, ranking by forward residual', len(roots))
    candidates = []
    for r in roots:
        bm2 = 2 * cross - r.b_plus ** 2
        candidates.append(MPSEstimate(
            abs_c1, abs_c4, r.b_plus, math.sqrt(max(bm2, 0.0)), r.phi1, r.phi4, scenario,
            phase_sign_ambiguity={'phi1': 0.0 < r.phi1 < math.pi, 'phi4': False},
            residuals=dict(residuals, b_plus_equation=r.residual)))
    return candidates, scenario


def reconstruct_full(records, alpha0: float = None) -> QuquartEstimate:
    rs = records if isinstance(records, RecordSet) else RecordSet(records)
    alpha0 = default_alpha0() if alpha0 is None else alpha0
    mps_list, scenario = _mps_candidates(rs, alpha0)
    tol = rs.range_tolerance
    threshold = rs.zero_threshold()
    freq = _frequency_records(rs.records)

    options, unobservable = [], []
    for mps in mps_list:
        if mps.abs_b_minus <= threshold:
            options.append((mps, 0.0, False))
            continue
        if mps.b_plus <= threshold and _c_difference(mps) <= threshold:
            if max(mps.abs_c1, mps.abs_c4) <= threshold:
                # B- alone carries the global phase, fixed at zero
                options.append((mps, 0.0, False))
            else:
                unobservable.append(mps)
            continue
        if not freq:
            raise MissingRecords([_label(0.0, HALF_PI, 'h', 'l')])
        record = _best_freq_record(mps, freq)
        try:
            plus, minus, flag = _phase_minus_candidates(mps, record, tol)
        except Degenerate as e:
            log.debug('candidate B+=%.6g: %s', mps.b_plus, e)
            unobservable.append(mps)
            continue
        except OutOfRange as e:
            log.debug('dropping candidate B+=%.6g: %s', mps.b_plus, e)
            continue
        if record not in rs.used:
            rs.used.append(record)
        options.append((mps, plus, flag))
        if flag:
            options.append((mps, minus, flag))
    if not options and unobservable:
        raise Degenerate('B+ vanishes in every frame: phase of B- unobservable')
    if not options:
        raise NoRoot('No candidate state is consistent with the frequency-resolved records')

    scored = []
    for mps, phi_minus, flag in options:
        q = core_state.make_ququart(cmath.rect(mps.abs_c1, mps.phi1), mps.b_plus,
                                    cmath.rect(mps.abs_c4, mps.phi4),
                                    cmath.rect(mps.abs_b_minus, phi_minus), renormalize=True)
        scored.append((forward_residual(q, rs.records), mps, phi_minus, flag))
    scored.sort(key=lambda item: item[0])
    residual, mps, phi_minus, flag = scored[0]

    margin = EXACT_RESOLUTION if rs.exact else _noise_scale(rs.records)
    ties = [s for s in scored[1:] if s[0] - residual < margin]
    sign_tie = any(s[1] is mps for s in ties)
    ambiguous = any(s[1] is not mps for s in ties)
    if ambiguous:
        log.warning('%d candidate states fit the records equally well', len(ties) + 1)
    if abs(mps.norm_squared() - 1) > tol:
        log.warning('reconstructed norm %.6g deviates from 1', mps.norm_squared())

    estimate = QuquartEstimate(
        mps, phi_minus,
        phi_minus_sign_ambiguity=flag and sign_tie,
        ambiguous=ambiguous,
        residual=residual,
        candidates=len(scored),
        records_used=[r.source or str(r.config) for r in rs.used],
    )
    log.info('scenario %s: %s', scenario, INVERSIONS[mps.scenario])
    return estimate
