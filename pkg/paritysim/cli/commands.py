"""Command handlers: run, sweep, nmr, fidelity and bench."""

import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import List, Tuple

import numpy as np

from config import Config
from paritysim.cli.reports import (
    RunReport,
    merge_runs,
    render,
    write_fid_csv,
    write_spectrum_csv,
    write_text,
    write_timing_csv,
)
from paritysim.services.bv import (
    BitString,
    ParityOracle,
    classical_solve,
    run_original_bv,
    run_refined_bv,
)
from paritysim.services.nmr import (
    ExperimentOptions,
    answer_weight,
    experiment_sequence,
    fidelity_table,
    pseudo_pure_fit,
    run_experiment,
    run_reference,
)
from paritysim.services.quantum_core import DenseLimitError
from paritysim.services.spectro import InconclusiveReadoutError, Spectrometer, decode_answer, phase_reference

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_WRONG = 1
EXIT_USAGE = 2

FIDELITY_FLOOR = 1 - 1e-6
NMR_STRINGS = ('00', '01', '10', '11')


def _fail(message: str, code: int = EXIT_USAGE) -> int:
    logger.error(message)
    print(f"error: {message}", file=sys.stderr)
    return code


def _write_failed(e: OSError) -> int:
    return _fail(f"cannot write output: {e}")


def execute_run(a: BitString, algorithm: str, backend: str, config: Config) -> RunReport:
    """Run one algorithm on a fresh oracle and collect the report fields."""
    oracle = ParityOracle(a)
    n = len(a)
    start = time.perf_counter()
    if algorithm == 'classical':
        answer = classical_solve(oracle)
        wall = time.perf_counter() - start
        return RunReport(n, str(a), str(answer), algorithm, 'classical', oracle.queries,
                         None, None, True, wall)

    if algorithm == 'original':
        result = run_original_bv(oracle, config.dense_limit, record=True, seed=config.seed)
    else:
        result = run_refined_bv(oracle, backend, config.dense_limit, record=True, seed=config.seed)
    wall = time.perf_counter() - start
    report = result.separability
    return RunReport(n, str(a), str(result.answer), algorithm, result.backend, result.queries,
                     result.qubits_used, report.max_impurity, result.certain, wall,
                     separable=report.separable(config.separability_tol))


def cmd_run(args, config: Config) -> int:
    """Run one hidden string through the chosen algorithm and print the report."""
    try:
        a = BitString.parse(args.a)
        backend = 'dense' if args.algorithm == 'original' else args.backend
        report = execute_run(a, args.algorithm, backend, config)
    except ValueError as e:
        return _fail(str(e))

    text = render(report.fields(args.timing))
    print(text, end='')
    if args.out:
        try:
            write_text(args.out, text)
        except OSError as e:
            return _write_failed(e)
    logger.info("run finished: %s", 'success' if report.success else 'mismatch')
    return EXIT_OK if report.success else EXIT_WRONG


def _sweep_strings(n: int, trials: int, seed: int) -> Tuple[str, List[BitString]]:
    if n <= 20 and trials == 2 ** n:
        return 'exhaustive', [BitString.from_index(i, n) for i in range(trials)]
    rng = np.random.default_rng(seed)
    return 'random', [BitString.random(n, rng) for _ in range(trials)]


def cmd_sweep(args, config: Config) -> int:
    """Run many hidden strings and report the aggregate success rate."""
    if args.n < 1 or args.trials < 1:
        return _fail("--n and --trials must be at least 1")
    if args.backend == 'dense' and args.n > config.dense_limit:
        return _fail(f"n = {args.n} exceeds the dense limit {config.dense_limit}")

    mode, strings = _sweep_strings(args.n, args.trials, config.seed)
    logger.info("sweep: %d %s trials at n=%d on %s", len(strings), mode, args.n, args.backend)
    try:
        if args.workers > 1:
            with ThreadPoolExecutor(max_workers=args.workers) as pool:
                runs = list(pool.map(
                    lambda a: execute_run(a, 'refined', args.backend, config), strings))
        else:
            runs = [execute_run(a, 'refined', args.backend, config) for a in strings]
    except ValueError as e:
        return _fail(str(e))

    summary = merge_runs(runs, args.n, args.backend, config.seed, mode)
    text = render(summary.fields(args.timing))
    print(text, end='')
    if args.out:
        try:
            write_text(args.out, text)
        except OSError as e:
            return _write_failed(e)
    return EXIT_OK if summary.successes == summary.trials else EXIT_WRONG


def cmd_nmr(args, config: Config) -> int:
    """Simulate the two-spin experiment for one hidden string and decode its spectrum."""
    if args.a not in NMR_STRINGS:
        return _fail(f"the NMR experiment needs one of {NMR_STRINGS}, got {args.a!r}")
    prefix = args.out or f'nmr_{args.a}'
    options = ExperimentOptions(config.gradient_mode, config.prep_echo)
    spectrometer = Spectrometer(config.params, config.acquisition)

    # reference: pseudo-pure |00> read by a single pulse
    reference_fid = spectrometer.acquire(run_reference(config.params, options))
    phase = phase_reference(spectrometer.spectrum(reference_fid))
    reference_spectrum = spectrometer.spectrum(reference_fid, phase)
    reference_readings = spectrometer.read(reference_spectrum)
    reference_integral = min(abs(r.integral) for r in reference_readings)

    before_detection = run_experiment(args.a, config.params, options, detect=False)
    fit = pseudo_pure_fit(before_detection)
    fid = spectrometer.acquire(run_experiment(args.a, config.params, options))
    spectrum = spectrometer.spectrum(fid, phase)
    readings = spectrometer.read(spectrum)

    fields: list = [('a_true', args.a), ('reference_phase_rad', phase)]
    for r in readings:
        fields += [(f'{r.spin}_center_hz', r.center), (f'{r.spin}_splitting_hz', r.splitting),
                   (f'{r.spin}_integral', r.integral)]
    fields += [
        ('signs', '(' + ','.join('+' if r.integral > 0 else '-' for r in readings) + ')'),
        ('pseudo_pure_excess', fit.excess),
        ('answer_weight', answer_weight(before_detection, args.a)),
    ]
    try:
        decoded = decode_answer(readings, reference_integral)
    except InconclusiveReadoutError as e:
        decoded, inconclusive = 'inconclusive', str(e)
    else:
        inconclusive = None

    fields.append(('a_decoded', decoded))
    text = render(fields)
    print(text, end='')
    try:
        write_fid_csv(f'{prefix}_reference_fid.csv', reference_fid)
        write_spectrum_csv(f'{prefix}_reference_spectrum.csv', reference_spectrum)
        write_fid_csv(f'{prefix}_fid.csv', fid)
        write_spectrum_csv(f'{prefix}_spectrum.csv', spectrum)
        write_text(f'{prefix}_sequence.txt', experiment_sequence(args.a, config.params, options).to_text())
        write_text(f'{prefix}_report.txt', text)
    except OSError as e:
        return _write_failed(e)

    if inconclusive is not None:
        return _fail(f"inconclusive readout: {inconclusive}", EXIT_WRONG)
    return EXIT_OK if decoded == args.a else EXIT_WRONG


def cmd_fidelity(args, config: Config) -> int:
    """Print the fidelity of each compiled pulse program against its ideal gate."""
    rows = fidelity_table(config.params)
    print('sequence,fidelity')
    for name, value in rows:
        print(f'{name},{value:.6f}')
    worst = min(value for _, value in rows)
    if worst < FIDELITY_FLOOR:
        return _fail(f"worst fidelity {worst:.9f} is below {FIDELITY_FLOOR}", EXIT_WRONG)
    return EXIT_OK


def _bench_sizes(limit: int, start: int) -> List[int]:
    sizes, n = [], start
    while n < limit:
        sizes.append(n)
        n *= 10
    sizes.append(limit)
    return sizes


def cmd_bench(args, config: Config) -> int:
    """Time the refined algorithm on both backends and emit n,backend,seconds."""
    rng = np.random.default_rng(config.seed)
    plan = [(n, 'dense') for n in range(2, args.dense_max_n + 1, 2)]
    plan += [(n, 'product') for n in _bench_sizes(args.max_n, 10)]

    rows = []
    ok = True
    for n, backend in plan:
        a = BitString.random(n, rng)
        start = time.perf_counter()
        try:
            result = run_refined_bv(ParityOracle(a), backend, config.dense_limit)
        except DenseLimitError as e:
            logger.warning("skipping %s n=%d: %s", backend, n, e)
            continue
        seconds = time.perf_counter() - start
        ok = ok and result.answer == a
        rows.append((n, backend, seconds))
        logger.info("%s n=%d: %.4f s", backend, n, seconds)

    print('n,backend,seconds')
    for n, backend, seconds in rows:
        print(f'{n},{backend},{seconds:.6f}')
    if args.out:
        try:
            write_timing_csv(args.out, rows)
        except OSError as e:
            return _write_failed(e)
    return EXIT_OK if ok else EXIT_WRONG
