"""Report rendering and CSV export for runs, sweeps and spectra (the only file writers)."""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from paritysim.services.spectro import FID, Spectrum

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
Fields = Sequence[Tuple[str, object]]


def _format(value: object) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if value is None:
        return 'n/a'
    if isinstance(value, (float, np.floating)):
        return f'{float(value):.9g}'
    return str(value)


def render(fields: Fields) -> str:
    """Structured text report: one `key = value` line per field, in the given order."""
    return ''.join(f'{key} = {_format(value)}\n' for key, value in fields)


@dataclass(frozen=True)
class RunReport:
    """Outcome of a single run of one algorithm on one hidden string."""

    n: int
    a_true: str
    a_measured: str
    algorithm: str
    backend: str
    queries_used: int
    qubits_used: Optional[int]
    max_impurity: Optional[float]
    certain: bool
    wall_time: float = 0.0
    separable: Optional[bool] = None

    @property
    def success(self) -> bool:
        return self.a_measured == self.a_true

    def fields(self, include_timing: bool = False) -> Fields:
        fields = [
            ('n', self.n),
            ('a_true', self.a_true),
            ('a_measured', self.a_measured),
            ('algorithm', self.algorithm),
            ('backend', self.backend),
            ('queries_used', self.queries_used),
            ('qubits_used', self.qubits_used),
            ('max_impurity', self.max_impurity),
            ('separable', self.separable),
            ('certain', self.certain),
            ('success', self.success),
        ]
        if include_timing:
            fields.append(('wall_time_s', self.wall_time))
        return fields


@dataclass(frozen=True)
class SweepReport:
    n: int
    trials: int
    backend: str
    seed: int
    mode: str
    successes: int
    max_impurity: Optional[float]
    mean_wall_time: float = 0.0
    separable: Optional[bool] = None

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials

    def fields(self, include_timing: bool = False) -> Fields:
        fields = [
            ('n', self.n),
            ('trials', self.trials),
            ('backend', self.backend),
            ('seed', self.seed),
            ('mode', self.mode),
            ('successes', self.successes),
            ('success_rate', self.success_rate),
            ('max_impurity', self.max_impurity),
            ('separable', self.separable),
        ]
        if include_timing:
            fields.append(('mean_wall_time_s', self.mean_wall_time))
        return fields


def merge_runs(runs: Sequence[RunReport], n: int, backend: str, seed: int, mode: str) -> SweepReport:
    impurities = [r.max_impurity for r in runs if r.max_impurity is not None]
    flags = [r.separable for r in runs if r.separable is not None]
    return SweepReport(
        n=n,
        trials=len(runs),
        backend=backend,
        seed=seed,
        mode=mode,
        successes=sum(1 for r in runs if r.success and r.certain),
        max_impurity=max(impurities) if impurities else None,
        mean_wall_time=float(np.mean([r.wall_time for r in runs])),
        separable=all(flags) if flags else None,
    )


def _write_rows(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format(v) for v in row])
    logger.info("wrote %s", path)


def write_spectrum_csv(path: PathLike, spectrum: Spectrum) -> None:
    """freq_hz,real,imag with ascending frequencies."""
    rows = zip(spectrum.freqs, spectrum.values.real, spectrum.values.imag)
    _write_rows(path, ('freq_hz', 'real', 'imag'), rows)


def write_fid_csv(path: PathLike, fid: FID) -> None:
    rows = zip(fid.times, fid.samples.real, fid.samples.imag)
    _write_rows(path, ('t_s', 'real', 'imag'), rows)


def write_timing_csv(path: PathLike, rows: Iterable[Tuple[int, str, float]]) -> None:
    _write_rows(path, ('n', 'backend', 'seconds'), rows)


def write_text(path: PathLike, text: str) -> None:
    Path(path).write_text(text)
    logger.info("wrote %s", path)
