"""
File formats: state and report JSON, count-record CSV, campaign manifests.

JSON output is byte-stable: keys sorted, floats written with 17 significant digits.
"""
import csv
import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import core_state
import measurement
from constants import FILTER_NONE, EXACT_MODE, RNG_ALGORITHM, VAR_SEED_BASE_DEFAULT
from errors import QQLabError, InconsistentTotals

log = logging.getLogger('qqlab.codec')

CSV_HEADER = ['ch1_angle_deg', 'ch1_filter', 'ch2_angle_deg', 'ch2_filter',
              'outcome', 'count', 'n_total', 'seed', 'rng_algorithm']
RECORD_EXTENSIONS = ('.csv', '.json')


def format_float(x: float) -> str:
    if not math.isfinite(x):
        raise QQLabError(f'Cannot serialize non-finite value {x!r}')
    return format(x, '.17g')


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    pad = ' ' * (indent * (_level + 1))
    end = ' ' * (indent * _level)
    if obj is None:
        return 'null'
    if isinstance(obj, bool):
        return 'true' if obj else 'false'
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return '{}'
        items = [f'{pad}{json.dumps(str(k))}: {dumps(obj[k], indent, _level + 1)}' for k in sorted(obj)]
        return '{\n' + ',\n'.join(items) + '\n' + end + '}'
    if isinstance(obj, (list, tuple)):
        if not obj:
            return '[]'
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return '[' + ', '.join(dumps(v) for v in obj) + ']'
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return '[\n' + ',\n'.join(items) + '\n' + end + ']'
    if hasattr(obj, 'item'):
        # numpy scalar
        return dumps(obj.item(), indent, _level)
    raise QQLabError(f'Cannot serialize {type(obj).__name__}')


def write_json(path: str, obj):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(dumps(obj) + '\n')


def read_json(path: str):
    try:
        with open(path, encoding='utf-8') as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise QQLabError(f'Cannot read {path}: {e}') from e


def save_state(path: str, q: core_state.QuquartParams):
    write_json(path, q.to_dict())


def load_state(path: str) -> core_state.QuquartParams:
    return core_state.QuquartParams.from_dict(read_json(path))


def _angle_text(angle_rad: float) -> str:
    return repr(round(math.degrees(angle_rad), 9))


def _filter_text(value: Optional[str]) -> str:
    return value if value is not None else FILTER_NONE


def _filter_value(text: str) -> Optional[str]:
    return None if text == FILTER_NONE else text


def record_rows(record: measurement.CountRecord) -> list:
    s1, s2 = record.config.settings
    rows = []
    for outcome, count in record.counts.items():
        value = format_float(float(count)) if record.exact else str(int(count))
        rows.append([_angle_text(s1.angle), _filter_text(s1.frequency_filter),
                     _angle_text(s2.angle), _filter_text(s2.frequency_filter),
                     outcome.label, value, str(record.n_total), str(record.config.seed),
                     record.rng_algorithm])
    return rows


def record_to_dict(record: measurement.CountRecord) -> list:
    """JSON form of a record: one object per outcome, keyed like the CSV columns."""
    s1, s2 = record.config.settings
    rows = []
    for outcome, count in record.counts.items():
        rows.append({
            'ch1_angle_deg': round(math.degrees(s1.angle), 9),
            'ch1_filter': _filter_text(s1.frequency_filter),
            'ch2_angle_deg': round(math.degrees(s2.angle), 9),
            'ch2_filter': _filter_text(s2.frequency_filter),
            'outcome': outcome.label,
            'count': float(count) if record.exact else int(count),
            'n_total': record.n_total,
            'seed': record.config.seed,
            'rng_algorithm': record.rng_algorithm,
        })
    return rows


def record_file_name(index: int, config: measurement.MeasurementConfig, extension: str = '.csv') -> str:
    s1, s2 = config.settings
    name = f'{index:03d}_{measurement.angle_label(s1.angle)}_{measurement.angle_label(s2.angle)}'
    if config.frequency_resolved:
        name += f'_{_filter_text(s1.frequency_filter)}{_filter_text(s2.frequency_filter)}'
    return name.replace('.', 'p') + extension


def write_record(path: str, record: measurement.CountRecord):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(CSV_HEADER)
        writer.writerows(record_rows(record))


def write_record_json(path: str, record: measurement.CountRecord):
    write_json(path, record_to_dict(record))


def record_from_rows(rows: list, path: str = '') -> measurement.CountRecord:
    if not rows:
        raise QQLabError(f'{path}: no rows')
    first = rows[0]
    try:
        n_total = int(first['n_total'])
        config = measurement.MeasurementConfig.from_angles(
            math.radians(float(first['ch1_angle_deg'])), math.radians(float(first['ch2_angle_deg'])),
            _filter_value(first['ch1_filter']), _filter_value(first['ch2_filter']),
            n_total=n_total, seed=int(first['seed']))
        values = {}
        for row in rows:
            if int(row['n_total']) != n_total:
                raise InconsistentTotals(f'{path}: rows disagree on n_total')
            values[row['outcome']] = float(row['count']) if n_total == EXACT_MODE else int(row['count'])
    except (KeyError, ValueError, TypeError) as e:
        raise QQLabError(f'{path}: malformed record ({e})') from e

    counts = {}
    for outcome in measurement.outcomes_for(config):
        counts[outcome] = values.pop(outcome.label, 0.0 if config.exact else 0)
    if values:
        raise QQLabError(f'{path}: unknown outcomes {sorted(values)}')
    # older files have no rng_algorithm column
    algorithm = first.get('rng_algorithm') or RNG_ALGORITHM
    record = measurement.CountRecord(config, counts, rng_algorithm=algorithm, source=os.path.basename(path))
    record.validate()
    return record


def read_record(path: str) -> measurement.CountRecord:
    if path.endswith('.json'):
        rows = read_json(path)
        if not isinstance(rows, list) or not all(isinstance(r, dict) for r in rows):
            raise QQLabError(f'{path}: expected a list of outcome rows')
        return record_from_rows(rows, path)
    try:
        with open(path, encoding='utf-8', newline='') as f:
            rows = list(csv.DictReader(f))
    except OSError as e:
        raise QQLabError(f'Cannot read {path}: {e}') from e
    return record_from_rows(rows, path)


def read_records(directory: str) -> list:
    if not os.path.isdir(directory):
        raise QQLabError(f'{directory} is not a directory')
    names = sorted(n for n in os.listdir(directory) if n.endswith(RECORD_EXTENSIONS))
    log.debug('reading %d record files from %s', len(names), directory)
    return [read_record(os.path.join(directory, n)) for n in names]


def write_rows_csv(path: str, rows: list):
    if not rows:
        raise QQLabError('Nothing to write')
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    columns = list(rows[0])
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_float(v) if isinstance(v, float) else v for v in (row[c] for c in columns)])


@dataclass
class CampaignManifest:
    measurements: list
    output_dir: str = ''
    state_file: str = ''
    seed_base: int = VAR_SEED_BASE_DEFAULT
    background_rate: float = 0.0

    def __post_init__(self):
        if not self.measurements:
            raise QQLabError('Manifest lists no measurements')

    def configs(self) -> list:
        out = []
        for index, m in enumerate(self.measurements):
            out.append(measurement.MeasurementConfig.from_angles(
                math.radians(m['ch1_angle_deg']), math.radians(m['ch2_angle_deg']),
                _filter_value(m.get('ch1_filter', FILTER_NONE)), _filter_value(m.get('ch2_filter', FILTER_NONE)),
                n_total=int(m['n_total']), seed=self.seed_base + index,
                background_rate=self.background_rate))
        return out

    def to_dict(self) -> dict:
        return {
            'state_file': self.state_file,
            'output_dir': self.output_dir,
            'seed_base': self.seed_base,
            'background_rate': self.background_rate,
            'measurements': self.measurements,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'CampaignManifest':
        try:
            return cls(measurements=list(data['measurements']),
                       output_dir=data.get('output_dir', ''),
                       state_file=data.get('state_file', ''),
                       seed_base=int(data.get('seed_base', VAR_SEED_BASE_DEFAULT)),
                       background_rate=float(data.get('background_rate', 0.0)))
        except (KeyError, TypeError, ValueError) as e:
            raise QQLabError(f'Malformed manifest: {e}') from e

    @classmethod
    def from_plan(cls, plan: list, n_total: int, seed_base: int = VAR_SEED_BASE_DEFAULT,
                  state_file: str = '', output_dir: str = '') -> 'CampaignManifest':
        measurements = [{'ch1_angle_deg': float(a), 'ch1_filter': _filter_text(f1),
                         'ch2_angle_deg': float(b), 'ch2_filter': _filter_text(f2),
                         'n_total': n_total} for a, b, f1, f2 in plan]
        return cls(measurements, output_dir, state_file, seed_base)


def load_manifest(path: str) -> CampaignManifest:
    return CampaignManifest.from_dict(read_json(path))
