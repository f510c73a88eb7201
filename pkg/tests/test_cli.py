import cmath
import csv
import json
import math
import os

import numpy as np
import pytest

import cli
import codec
import reconstruction

S = 1 / math.sqrt(2)


def amp(z: complex) -> str:
    return f'{z.real!r},{z.imag!r}'


def run(out_dir, *args) -> int:
    return cli.main(['--output-dir', str(out_dir)] + [str(a) for a in args])


def synth(out_dir, c1=0j, b_plus=0j, c4=0j, b_minus=0j, output=None):
    args = ['synth', f'--c1={amp(c1)}', f'--b-plus={amp(b_plus)}', f'--c4={amp(c4)}', f'--b-minus={amp(b_minus)}']
    if output:
        args += ['--output', output]
    return run(out_dir, *args)


def load(path):
    with open(path, encoding='utf-8') as f:
        return json.load(f)


def read_bytes(path):
    with open(path, 'rb') as f:
        return f.read()


def record_dir_bytes(directory):
    return {name: read_bytes(os.path.join(directory, name)) for name in sorted(os.listdir(directory))}


def test_synth_explicit_state(tmp_path, capsys):
    assert synth(tmp_path, c1=1) == 0
    state = codec.load_state(str(tmp_path / 'state.json'))
    assert state.c1 == 1 and state.b_minus == 0
    assert 'Norm check' in capsys.readouterr().out


def test_synth_random_is_deterministic(tmp_path):
    assert run(tmp_path, 'synth', '--random', '--seed', 7, '--output', tmp_path / 'a.json') == 0
    assert run(tmp_path, 'synth', '--random', '--seed', 7, '--output', tmp_path / 'b.json') == 0
    assert run(tmp_path, 'synth', '--random', '--seed', 8, '--output', tmp_path / 'c.json') == 0
    assert read_bytes(tmp_path / 'a.json') == read_bytes(tmp_path / 'b.json')
    assert read_bytes(tmp_path / 'a.json') != read_bytes(tmp_path / 'c.json')
    assert abs(codec.load_state(str(tmp_path / 'a.json')).norm_squared() - 1) < 1e-12


def test_synth_rejects_unnormalized_state(tmp_path, capsys):
    assert synth(tmp_path, c1=1, b_plus=1) == 2
    assert 'norm' in capsys.readouterr().err
    assert not (tmp_path / 'state.json').exists()


def campaign_dir(tmp_path, amplitudes, n_total=0, scenario=None, workers=1, seed_base=0):
    synth(tmp_path, *amplitudes)
    plan = ['plan', '--n-total', n_total, '--seed-base', seed_base, '--state', tmp_path / 'state.json']
    if scenario:
        plan += ['--scenario', scenario]
    assert run(tmp_path, *plan) == 0
    assert run(tmp_path, 'simulate', tmp_path / 'manifest.json', '--workers', workers) == 0
    return tmp_path / 'records'


def test_exact_end_to_end_roundtrip(tmp_path, capsys):
    source = (0.5 * cmath.exp(0.3j), 0.5, 0.5 * cmath.exp(-0.4j), 0.5 * cmath.exp(0.7j))
    records = campaign_dir(tmp_path, source)
    assert len(os.listdir(records)) == len(reconstruction.campaign())
    assert run(tmp_path, 'reconstruct', records) == 0

    data = load(tmp_path / 'estimate.json')
    assert data['scenario'] == 'general'
    state = codec.load_state(str(tmp_path / 'state.json'))
    assert np.allclose([data['abs_c1'], data['abs_c4'], data['b_plus'], data['abs_b_minus']],
                       np.abs([state.c1, state.c4, state.b_plus, state.b_minus]), atol=1e-6)
    assert np.allclose(np.cos([data['phi1'], data['phi4'], data['phi_minus']]),
                       np.cos([cmath.phase(state.c1), cmath.phase(state.c4), cmath.phase(state.b_minus)]),
                       atol=1e-6)
    assert data['records_used']
    assert 'Scenario: general' in capsys.readouterr().out


def test_zero_c_report_names_inversion(tmp_path, capsys):
    records = campaign_dir(tmp_path, (0, 0.6, 0, 0.8), scenario='zero_c')
    assert run(tmp_path, 'reconstruct', records) == 0
    out = capsys.readouterr().out
    assert 'Scenario: zero_c' in out
    assert reconstruction.INVERSIONS['zero_c'] in out
    data = load(tmp_path / 'estimate.json')
    assert abs(data['b_plus'] - 0.6) < 1e-9


def test_simulation_is_byte_stable_and_worker_independent(tmp_path):
    source = (0.5 * cmath.exp(0.3j), 0.5, 0.5 * cmath.exp(-0.4j), 0.5 * cmath.exp(0.7j))
    first = campaign_dir(tmp_path / 'one', source, n_total=5000, seed_base=11)
    second = campaign_dir(tmp_path / 'two', source, n_total=5000, seed_base=11)
    threaded = campaign_dir(tmp_path / 'three', source, n_total=5000, seed_base=11, workers=4)
    assert record_dir_bytes(first) == record_dir_bytes(second) == record_dir_bytes(threaded)


def test_simulate_hv_plan_of_single_basis_state(tmp_path):
    synth(tmp_path, c1=1)
    manifest = codec.CampaignManifest.from_plan(reconstruction.campaign()[:3], 1000,
                                                state_file=str(tmp_path / 'state.json'))
    codec.write_json(str(tmp_path / 'manifest.json'), manifest.to_dict())
    assert run(tmp_path, 'simulate', tmp_path / 'manifest.json') == 0
    with open(tmp_path / 'records' / '000_0_0.csv', newline='') as f:
        rows = list(csv.DictReader(f))
    nonzero = [r for r in rows if int(r['count']) != 0]
    assert len(nonzero) == 1
    assert nonzero[0]['outcome'] == '0|0' and nonzero[0]['count'] == '1000'
    assert rows[0]['n_total'] == '1000'


def test_frequency_resolved_record_sums_to_n_total(tmp_path):
    records = campaign_dir(tmp_path, (0.5, 0.5, 0.5, 0.5), n_total=777)
    with open(records / '009_0_90_hl.csv', newline='') as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 16
    assert sum(int(r['count']) for r in rows) == 777


def test_missing_records_exit_code(tmp_path, capsys):
    records = campaign_dir(tmp_path, (0.5 * cmath.exp(0.3j), 0.5, 0.5 * cmath.exp(-0.4j), 0.5))
    for name in ('003_45_45.csv', '004_135_45.csv', '010_45_135_hl.csv'):
        os.remove(records / name)
    assert run(tmp_path, 'reconstruct', records) == 3
    assert '135/45' in capsys.readouterr().err


def test_analyze_reports_model_divergence(tmp_path):
    synth(tmp_path, b_plus=S, b_minus=S)
    assert run(tmp_path, 'analyze', tmp_path / 'state.json') == 0
    report = load(tmp_path / 'analysis.json')
    assert abs(report['k_bar'] - 2) < 1e-12
    assert abs(report['p_bar']) < 1e-12
    assert abs(report['k_2qb'] - 1) < 1e-12


def test_analyze_single_basis_state(tmp_path):
    synth(tmp_path, c1=1)
    assert run(tmp_path, 'analyze', tmp_path / 'state.json') == 0
    report = load(tmp_path / 'analysis.json')
    for key in ('c_bar', 's_rel', 'mutual_info', 'c_cl', 'c_cl_from_k', 'c_2qb'):
        assert abs(report[key]) < 1e-9
    assert report['k_bar'] == report['k_2qb'] == 1


def test_compare_prints_both_models(tmp_path, capsys):
    synth(tmp_path, b_plus=S, b_minus=S)
    assert run(tmp_path, 'compare', tmp_path / 'state.json') == 0
    out = capsys.readouterr().out
    assert 'two-qubit model' in out and 'mixed polarization' in out


def test_sweep_csv(tmp_path):
    assert run(tmp_path, 'sweep', 'b_minus', '0:1:11') == 0
    with open(tmp_path / 'sweep_b_minus.csv', newline='') as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 11
    for row in rows:
        assert float(row['s_rel']) <= float(row['c_bar']) + 1e-9
    assert abs(float(rows[5]['c_bar'])) < 1e-9 and abs(float(rows[5]['s_rel'])) < 1e-9


def test_analyze_with_sweep(tmp_path):
    synth(tmp_path, b_plus=1)
    assert run(tmp_path, 'analyze', tmp_path / 'state.json', '--sweep', 'b_minus', '0:1:3') == 0
    assert (tmp_path / 'sweep_b_minus.csv').exists()


@pytest.mark.parametrize('grid', ['0:1', 'a:b:c'])
def test_bad_sweep_grid(tmp_path, grid):
    assert run(tmp_path, 'sweep', 'b_minus', grid) == 2


def test_sweep_around_b_minus_only_state(tmp_path):
    synth(tmp_path, b_minus=1)
    assert run(tmp_path, 'sweep', 'b_minus', '0:1:3', '--state', tmp_path / 'state.json') == 0
    assert run(tmp_path, 'analyze', tmp_path / 'state.json', '--sweep', 'b_minus', '0:1:3') == 0
    with open(tmp_path / 'sweep_b_minus.csv', newline='') as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 3


def test_reconstruct_singlet(tmp_path):
    records = campaign_dir(tmp_path, (0, 0, 0, 1))
    assert run(tmp_path, 'reconstruct', records) == 0
    data = load(tmp_path / 'estimate.json')
    assert data['scenario'] == 'zero_c'
    assert data['phi_minus'] == 0.0


def test_json_records_roundtrip(tmp_path):
    source = (0.5 * cmath.exp(0.3j), 0.5, 0.5 * cmath.exp(-0.4j), 0.5 * cmath.exp(0.7j))
    synth(tmp_path, *source)
    assert run(tmp_path, 'plan', '--n-total', 0, '--state', tmp_path / 'state.json') == 0
    assert run(tmp_path, 'simulate', tmp_path / 'manifest.json', '--format', 'json') == 0
    names = sorted(os.listdir(tmp_path / 'records'))
    assert names and all(n.endswith('.json') for n in names)
    assert run(tmp_path, 'reconstruct', tmp_path / 'records') == 0
    assert load(tmp_path / 'estimate.json')['scenario'] == 'general'
