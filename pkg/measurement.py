"""
Forward model of the coincidence experiment.

A pair is split on a beam splitter; each output channel has a polarizer (and optionally
a frequency-resolving detector). Only divided pairs produce coincidences, so every
distribution here is conditioned on division and normalized over the registered
outcomes of one polarizer setting.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

import core_state
from constants import (EXACT_MODE, FREQ_LABELS, HALF_PI, RNG_ALGORITHM, NORM_TOLERANCE,
                       ROOT_DEDUP)
from errors import QQLabError, EmptyRecord, InconsistentTotals

log = logging.getLogger('qqlab.measurement')


def normalize_angle(angle: float) -> float:
    a = math.fmod(angle, math.pi)
    if a < 0:
        a += math.pi
    # fold values that round up to pi back onto 0
    if math.pi - a < 1e-12:
        a = 0.0
    return a


def same_angle(a: float, b: float) -> bool:
    d = normalize_angle(a - b)
    return min(d, math.pi - d) < ROOT_DEDUP


def angle_label(angle: float) -> str:
    return format(round(math.degrees(normalize_angle(angle)), 9), 'g')


@dataclass(frozen=True)
class PolarizerSetting:
    channel: int
    angle: float
    frequency_filter: Optional[str] = None

    def __post_init__(self):
        if self.channel not in (1, 2):
            raise QQLabError(f'Invalid channel {self.channel!r}')
        if self.frequency_filter not in (None,) + FREQ_LABELS:
            raise QQLabError(f'Invalid frequency filter {self.frequency_filter!r}')
        object.__setattr__(self, 'angle', normalize_angle(float(self.angle)))


@dataclass(frozen=True)
class MeasurementConfig:
    settings: tuple
    n_total: int = EXACT_MODE
    seed: int = 0
    background_rate: float = 0.0

    def __post_init__(self):
        if len(self.settings) != 2 or [s.channel for s in self.settings] != [1, 2]:
            raise QQLabError('A configuration needs one setting per channel, channel 1 first')
        if self.n_total < 0:
            raise QQLabError(f'n_total must be >= 0, got {self.n_total!r}')
        if not 0.0 <= self.background_rate <= 1.0:
            raise QQLabError(f'background_rate must lie in [0, 1], got {self.background_rate!r}')

    @classmethod
    def from_angles(cls, theta1: float, theta2: float, filter1: str = None, filter2: str = None,
                    n_total: int = EXACT_MODE, seed: int = 0, background_rate: float = 0.0):
        return cls((PolarizerSetting(1, theta1, filter1), PolarizerSetting(2, theta2, filter2)),
                   n_total, seed, background_rate)

    @property
    def exact(self) -> bool:
        return self.n_total == EXACT_MODE

    @property
    def frequency_resolved(self) -> bool:
        return any(s.frequency_filter is not None for s in self.settings)

    def __str__(self):
        s1, s2 = self.settings
        text = f'{angle_label(s1.angle)}/{angle_label(s2.angle)}'
        if self.frequency_resolved:
            text += f' {s1.frequency_filter or "-"}/{s2.frequency_filter or "-"}'
        return text


@dataclass(frozen=True)
class Outcome:
    ch1_angle: float
    ch2_angle: float
    ch1_freq: Optional[str] = None
    ch2_freq: Optional[str] = None

    @property
    def label(self) -> str:
        first = angle_label(self.ch1_angle)
        second = angle_label(self.ch2_angle)
        if self.ch1_freq is not None:
            first += ':' + self.ch1_freq
        if self.ch2_freq is not None:
            second += ':' + self.ch2_freq
        return f'{first}|{second}'

    def matches(self, ch1_angle, ch2_angle, ch1_freq=None, ch2_freq=None) -> bool:
        if not (same_angle(self.ch1_angle, ch1_angle) and same_angle(self.ch2_angle, ch2_angle)):
            return False
        if ch1_freq is not None and ch1_freq != self.ch1_freq:
            return False
        return ch2_freq is None or ch2_freq == self.ch2_freq


def outcomes_for(config: MeasurementConfig) -> list:
    s1, s2 = config.settings
    freqs = FREQ_LABELS if config.frequency_resolved else (None,)
    out = []
    for i in range(2):
        for j in range(2):
            for f1 in freqs:
                for f2 in freqs:
                    out.append(Outcome(normalize_angle(s1.angle + i * HALF_PI),
                                       normalize_angle(s2.angle + j * HALF_PI), f1, f2))
    return out


@dataclass
class OutcomeDistribution:
    outcomes: list
    probabilities: np.ndarray

    def probability(self, ch1_angle, ch2_angle, ch1_freq=None, ch2_freq=None) -> float:
        return float(sum(p for o, p in zip(self.outcomes, self.probabilities)
                         if o.matches(ch1_angle, ch2_angle, ch1_freq, ch2_freq)))

    def conditional_w(self, ch1_angle, ch2_angle, ch1_freq, ch2_freq) -> float:
        """Frequency-resolved conditional probability: twice the ordered-outcome probability."""
        return 2.0 * self.probability(ch1_angle, ch2_angle, ch1_freq, ch2_freq)

    def marginal_polarization(self) -> 'OutcomeDistribution':
        merged = {}
        for o, p in zip(self.outcomes, self.probabilities):
            key = Outcome(o.ch1_angle, o.ch2_angle)
            merged[key] = merged.get(key, 0.0) + p
        return OutcomeDistribution(list(merged), np.array(list(merged.values())))

    def as_dict(self) -> dict:
        return {o.label: float(p) for o, p in zip(self.outcomes, self.probabilities)}


def _four(alpha: float, values) -> OutcomeDistribution:
    config = MeasurementConfig.from_angles(alpha, alpha)
    return OutcomeDistribution(outcomes_for(config), np.array(values, dtype=float))


def conditional_probabilities_hv(q) -> OutcomeDistribution:
    cross = (abs(q.b_plus) ** 2 + abs(q.b_minus) ** 2) / 2
    return _four(0.0, [abs(q.c1) ** 2, cross, cross, abs(q.c4) ** 2])


def conditional_probabilities_rotated(q, alpha: float) -> OutcomeDistribution:
    r = core_state.rotate_frame(q, alpha)
    cross = (abs(r.b_plus) ** 2 + abs(q.b_minus) ** 2) / 2
    return _four(alpha, [abs(r.c1) ** 2, cross, cross, abs(r.c4) ** 2])


def _distribution_from_amplitudes(amp: np.ndarray, config: MeasurementConfig) -> OutcomeDistribution:
    prob = np.abs(amp) ** 2  # [i, w1, j, w2]
    if config.frequency_resolved:
        values = np.transpose(prob, (0, 2, 1, 3)).reshape(16)
    else:
        values = prob.sum(axis=(1, 3)).reshape(4)
    return OutcomeDistribution(outcomes_for(config), values)


def freq_resolved_distribution(q, alpha: float) -> OutcomeDistribution:
    config = MeasurementConfig.from_angles(alpha, alpha, 'h', 'h')
    return _distribution_from_amplitudes(core_state.wave_function(core_state.rotate_frame(q, alpha)), config)


def exact_distribution(q, config: MeasurementConfig) -> OutcomeDistribution:
    s1, s2 = config.settings
    amp = np.einsum('ai,bj,ixjy->axby', core_state.polarizer_rows(s1.angle),
                    core_state.polarizer_rows(s2.angle), core_state.wave_function(q))
    dist = _distribution_from_amplitudes(amp, config)
    if config.background_rate > 0:
        b = config.background_rate
        dist.probabilities = (1 - b) * dist.probabilities + b / len(dist.outcomes)
    return dist


@dataclass
class CountRecord:
    config: MeasurementConfig
    counts: dict
    rng_algorithm: str = RNG_ALGORITHM
    source: str = field(default='', compare=False)

    @property
    def n_total(self) -> int:
        return self.config.n_total

    @property
    def exact(self) -> bool:
        return self.config.exact

    def total(self) -> float:
        return float(sum(self.counts.values()))

    def validate(self):
        total = self.total()
        if self.exact:
            if abs(total - 1.0) > NORM_TOLERANCE:
                raise InconsistentTotals(f'{self.config}: probabilities sum to {total!r}')
            return
        if total == 0:
            raise EmptyRecord(f'{self.config}: no coincidences registered')
        if int(round(total)) != self.n_total:
            raise InconsistentTotals(f'{self.config}: counts sum to {total:g}, n_total is {self.n_total}')

    def ratio(self, ch1_angle, ch2_angle, ch1_freq=None, ch2_freq=None) -> float:
        hit = sum(v for o, v in self.counts.items() if o.matches(ch1_angle, ch2_angle, ch1_freq, ch2_freq))
        return float(hit) / (1.0 if self.exact else self.n_total)

    def contains(self, ch1_angle, ch2_angle, ch1_freq=None, ch2_freq=None) -> bool:
        return any(o.matches(ch1_angle, ch2_angle, ch1_freq, ch2_freq) for o in self.counts)

    def ratios(self) -> np.ndarray:
        return np.array(list(self.counts.values()), dtype=float) / (1.0 if self.exact else self.n_total)


def simulate_coincidences(q, config: MeasurementConfig) -> CountRecord:
    dist = exact_distribution(q, config)
    if config.exact:
        return CountRecord(config, dict(zip(dist.outcomes, (float(p) for p in dist.probabilities))))

    rng = np.random.default_rng(config.seed)
    remaining = config.n_total
    mass = 1.0
    counts = []
    for p in dist.probabilities[:-1]:
        p = float(max(p, 0.0))
        if remaining == 0 or mass <= 0:
            counts.append(0)
            continue
        drawn = int(rng.binomial(remaining, min(1.0, p / mass)))
        counts.append(drawn)
        remaining -= drawn
        mass -= p
    counts.append(remaining)
    log.debug('simulated %s with seed %d', config, config.seed)
    return CountRecord(config, dict(zip(dist.outcomes, counts)))
