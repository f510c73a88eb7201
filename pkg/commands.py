import logging
import math
import os
import queue
import threading
from typing import List

import numpy as np

import codec
import core_state
import correlations
import measurement
import reconstruction
from constants import *
from errors import QQLabError

log = logging.getLogger('qqlab.commands')


def parse_grid(text: str) -> np.ndarray:
    """'start:stop:count' -> evenly spaced grid, endpoints included."""
    try:
        start, stop, count = text.split(':')
        grid = np.linspace(float(start), float(stop), int(count))
    except ValueError as e:
        raise QQLabError(f'Bad grid {text!r}, expected start:stop:count') from e
    if len(grid) == 0:
        raise QQLabError(f'Grid {text!r} is empty')
    return grid


class CommandBase():
    def __init__(self, config: dict):
        self.isDone = False
        self.config = config
        self.result = None

    def start(self):
        log.debug('%s started', self)

    def update(self):
        pass

    def finish(self):
        self.isDone = True
        log.debug('%s finished', self)

    def output_path(self, name: str) -> str:
        return os.path.join(self.config[VAR_OUTPUT_DIR], name)

    def __str__(self):
        return self.__class__.__name__


class CommandSynth(CommandBase):
    def __init__(self, config: dict, amplitudes=None, seed: int = None, output: str = None):
        CommandBase.__init__(self, config)
        self.amplitudes = amplitudes
        self.seed = seed
        self.output = output or self.output_path('state.json')

    def update(self):
        if self.amplitudes is None:
            q = core_state.random_ququart(np.random.default_rng(self.seed))
        else:
            q = core_state.make_ququart(*self.amplitudes)
        q = core_state.canonicalize(q)
        codec.save_state(self.output, q)
        print(f'State {q}')
        print(f'Norm check: |norm^2 - 1| = {abs(q.norm_squared() - 1):.3g}')
        print(f'Written {self.output}')
        self.result = q
        self.finish()

    def __str__(self):
        return 'Synth ' + ('random seed ' + str(self.seed) if self.amplitudes is None else 'explicit')


class SimulationWorker(threading.Thread):
    """Drains (index, config) jobs; each job has its own seed so order does not matter."""

    def __init__(self, q, jobs: queue.Queue, results: dict, errors: list, *args, **kwargs):
        threading.Thread.__init__(self, *args, **kwargs)
        self.q = q
        self.jobs = jobs
        self.results = results
        self.errors = errors

    def run(self):
        while True:
            try:
                index, config = self.jobs.get_nowait()
            except queue.Empty:
                return
            try:
                self.results[index] = measurement.simulate_coincidences(self.q, config)
            except Exception as e:
                log.error('simulation of entry %d (%s) failed: %s', index, config, e)
                self.errors.append((index, e))
            finally:
                self.jobs.task_done()


def simulate_campaign(q, configs: list, workers: int = 1) -> list:
    jobs = queue.Queue()
    for index, config in enumerate(configs):
        jobs.put((index, config))
    results, errors = {}, []
    threads = [SimulationWorker(q, jobs, results, errors, daemon=True) for _ in range(max(1, workers))]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise sorted(errors, key=lambda item: item[0])[0][1]
    return [results[i] for i in range(len(configs))]


class CommandSimulate(CommandBase):
    formats = {'csv': ('.csv', codec.write_record), 'json': ('.json', codec.write_record_json)}

    def __init__(self, config: dict, manifest_file: str, state_file: str = None, record_format: str = 'csv'):
        CommandBase.__init__(self, config)
        if record_format not in self.formats:
            raise QQLabError(f'Unknown record format {record_format!r}')
        self.record_format = record_format
        self.manifest = codec.load_manifest(manifest_file)
        self.manifest_dir = os.path.dirname(os.path.abspath(manifest_file))
        self.state_file = state_file or self.manifest.state_file
        if not self.state_file:
            raise QQLabError('No state file given on the command line or in the manifest')
        if not os.path.isabs(self.state_file) and not os.path.exists(self.state_file):
            self.state_file = os.path.join(self.manifest_dir, self.state_file)

    def update(self):
        q = codec.load_state(self.state_file)
        configs = self.manifest.configs()
        out_dir = self.manifest.output_dir or self.output_path('records')
        records = simulate_campaign(q, configs, self.config[VAR_WORKERS])
        extension, write = self.formats[self.record_format]
        paths = []
        for index, record in enumerate(records):
            path = os.path.join(out_dir, codec.record_file_name(index, record.config, extension))
            write(path, record)
            paths.append(path)
        print(f'Simulated {len(records)} records into {out_dir}')
        self.result = paths
        self.finish()


def format_estimate(estimate: reconstruction.QuquartEstimate) -> str:
    m = estimate.mps
    lines = [
        f'Scenario: {m.scenario}',
        f'Inversion: {reconstruction.INVERSIONS[m.scenario]}',
        f'|C1| = {m.abs_c1:.6f}  phi1 = {math.degrees(m.phi1):.4f} deg' +
        ('  (sign ambiguous)' if m.phase_sign_ambiguity.get('phi1') else ''),
        f'|C4| = {m.abs_c4:.6f}  phi4 = {math.degrees(m.phi4):.4f} deg' +
        ('  (sign ambiguous)' if m.phase_sign_ambiguity.get('phi4') else ''),
        f'B+   = {m.b_plus:.6f}',
        f'|B-| = {m.abs_b_minus:.6f}  phi- = {math.degrees(estimate.phi_minus):.4f} deg' +
        ('  (sign ambiguous)' if estimate.phi_minus_sign_ambiguity else ''),
        f'Forward residual: {estimate.residual:.3g} over {estimate.candidates} candidate(s)',
    ]
    if estimate.ambiguous:
        lines.append('WARNING: several candidate states fit the records equally well')
    return '\n'.join(lines)


class CommandReconstruct(CommandBase):
    def __init__(self, config: dict, logs_dir: str, output: str = None):
        CommandBase.__init__(self, config)
        self.logs_dir = logs_dir
        self.output = output or self.output_path('estimate.json')

    def update(self):
        records = codec.read_records(self.logs_dir)
        alpha0 = math.radians(self.config[VAR_ALPHA0_DEG])
        estimate = reconstruction.reconstruct_full(records, alpha0)
        codec.write_json(self.output, estimate.to_dict())
        print(format_estimate(estimate))
        print(f'Written {self.output}')
        self.result = estimate
        self.finish()


def optimizer_rng(config: dict) -> np.random.Generator:
    return np.random.default_rng(config[VAR_OPTIMIZER_SEED])


class CommandAnalyze(CommandBase):
    def __init__(self, config: dict, state_file: str, sweep: str = None, both_models: bool = False,
                 output: str = None):
        CommandBase.__init__(self, config)
        self.state_file = state_file
        self.sweep = sweep
        self.both_models = both_models
        self.output = output or self.output_path('analysis.json')

    def update(self):
        q = codec.load_state(self.state_file)
        report = correlations.correlation_report(q, optimizer_rng(self.config),
                                                self.config[VAR_OPTIMIZER_RESTARTS],
                                                self.config[VAR_OPTIMIZER_COMPONENTS])
        codec.write_json(self.output, report.to_dict())
        if self.both_models:
            print(f'{"quantity":<10}{"mixed polarization":>22}{"two-qubit model":>18}')
            print(f'{"K":<10}{report.k_bar:>22.12g}{report.k_2qb:>18.12g}')
            print(f'{"C":<10}{report.c_bar:>22.12g}{report.c_2qb:>18.12g}')
            print(f'{"P":<10}{report.p_bar:>22.12g}{report.p_2qb:>18.12g}')
        else:
            for key, value in report.to_dict().items():
                print(f'{key}: {value}')
        print(f'Written {self.output}')
        if self.sweep is not None:
            CommandSweep(self.config, 'b_minus', self.sweep, q).update()
        self.result = report
        self.finish()


class CommandSweep(CommandBase):
    parameters = ('b_minus',)

    def __init__(self, config: dict, parameter: str, grid: str, base=None, output: str = None):
        CommandBase.__init__(self, config)
        if parameter not in self.parameters:
            raise QQLabError(f'Unsupported sweep parameter {parameter!r}')
        self.grid = parse_grid(grid)
        self.base = codec.load_state(base) if isinstance(base, str) else base
        self.output = output or self.output_path(f'sweep_{parameter}.csv')

    def update(self):
        rows = correlations.sweep_b_minus(self.grid, self.base, optimizer_rng(self.config),
                                         self.config[VAR_OPTIMIZER_RESTARTS],
                                         self.config[VAR_OPTIMIZER_COMPONENTS])
        codec.write_rows_csv(self.output, rows)
        print(f'Swept {len(rows)} points into {self.output}')
        self.result = rows
        self.finish()


class CommandPlan(CommandBase):
    def __init__(self, config: dict, scenario: str = None, state_file: str = '', output: str = None):
        CommandBase.__init__(self, config)
        self.scenario = scenario
        self.state_file = state_file
        self.output = output or self.output_path('manifest.json')

    def update(self):
        plan = reconstruction.measurement_plan(self.scenario, self.config[VAR_ALPHA0_DEG])
        manifest = codec.CampaignManifest.from_plan(plan, self.config[VAR_N_TOTAL],
                                                    self.config[VAR_SEED_BASE], self.state_file)
        codec.write_json(self.output, manifest.to_dict())
        print(f'Planned {len(plan)} measurements into {self.output}')
        self.result = manifest
        self.finish()


class Commands():
    command_mappings = {
        COMMAND_SYNTH: CommandSynth,
        COMMAND_SIMULATE: CommandSimulate,
        COMMAND_RECONSTRUCT: CommandReconstruct,
        COMMAND_ANALYZE: CommandAnalyze,
        COMMAND_SWEEP: CommandSweep,
        COMMAND_PLAN: CommandPlan,
    }

    def __init__(self, config: dict):
        self.currentCommands = []  # type: List[CommandBase]
        self.config = config

    def addCommand(self, commandName: str, *args, **kwargs):
        instance = self.command_mappings[commandName](self.config, *args, **kwargs)
        self.currentCommands.append(instance)
        return instance

    def runAll(self) -> list:
        results = []
        while self.currentCommands:
            command = self.currentCommands.pop(0)
            command.start()
            while not command.isDone:
                command.update()
            results.append(command.result)
        return results
