"""Configuration module for simulator defaults and run configuration files."""

import os
from dataclasses import dataclass
from typing import Callable, Dict, Optional

from dotenv import dotenv_values, load_dotenv

from paritysim.services.nmr import GRADIENT_MODES, SpinParamsError, SpinSystemParams
from paritysim.services.spectro import AcquisitionError, AcquisitionParams

load_dotenv()

# Spin system configuration
NU_A = float(os.getenv('PARITYSIM_NU_A', '382.5'))
NU_B = float(os.getenv('PARITYSIM_NU_B', '-382.5'))
J_HZ = float(os.getenv('PARITYSIM_J_HZ', '7.17'))

# Acquisition configuration
SWEEP_WIDTH = float(os.getenv('PARITYSIM_SWEEP_WIDTH', '2048'))
POINTS = int(os.getenv('PARITYSIM_POINTS', '16384'))
T2_STAR = float(os.getenv('PARITYSIM_T2_STAR', '0.3'))

# Experiment configuration
GRADIENT_MODE = os.getenv('PARITYSIM_GRADIENT_MODE', 'physical')
PREP_ECHO = os.getenv('PARITYSIM_PREP_ECHO', 'true')

# Gate-level configuration
SEPARABILITY_TOL = float(os.getenv('PARITYSIM_SEPARABILITY_TOL', '1e-10'))
DENSE_LIMIT = int(os.getenv('PARITYSIM_DENSE_LIMIT', '24'))
SEED = int(os.getenv('PARITYSIM_SEED', '1234'))


class ConfigError(ValueError):
    """Raised when a configuration value is missing, malformed or out of range."""


def _parse_bool(raw: str) -> bool:
    value = str(raw).strip().lower()
    if value in ('1', 'true', 'yes', 'on'):
        return True
    if value in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


_PARSERS: Dict[str, Callable[[str], object]] = {
    'nu_a': float,
    'nu_b': float,
    'j_hz': float,
    'sweep_width': float,
    'points': int,
    't2_star': float,
    'gradient_mode': str,
    'prep_echo': _parse_bool,
    'separability_tol': float,
    'dense_limit': int,
    'seed': int,
}


@dataclass(frozen=True)
class Config:
    """Validated settings shared by every command."""

    params: SpinSystemParams
    acquisition: AcquisitionParams
    gradient_mode: str
    prep_echo: bool
    separability_tol: float
    dense_limit: int
    seed: int


def _defaults() -> Dict[str, str]:
    return {
        'nu_a': str(NU_A),
        'nu_b': str(NU_B),
        'j_hz': str(J_HZ),
        'sweep_width': str(SWEEP_WIDTH),
        'points': str(POINTS),
        't2_star': str(T2_STAR),
        'gradient_mode': GRADIENT_MODE,
        'prep_echo': PREP_ECHO,
        'separability_tol': str(SEPARABILITY_TOL),
        'dense_limit': str(DENSE_LIMIT),
        'seed': str(SEED),
    }


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, object]] = None) -> Config:
    """
    Build a Config from environment defaults, an optional key = value file and overrides.

    Args:
        path: Config file, one `key = value` per line
        overrides: Values taking precedence over the file (e.g. --seed)

    Returns:
        Validated Config
    """
    raw = _defaults()
    if path:
        if not os.path.isfile(path):
            raise ConfigError(f"config file not found: {path}")
        for key, value in dotenv_values(path).items():
            name = key.strip().lower()
            if name not in _PARSERS:
                raise ConfigError(f"unknown config key {key!r}")
            if value is None:
                raise ConfigError(f"config key {key!r} has no value")
            raw[name] = value
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = str(value)

    values = {}
    for name, parse in _PARSERS.items():
        try:
            values[name] = parse(raw[name].strip())
        except ValueError as e:
            raise ConfigError(f"{name}: {e}") from e

    if values['gradient_mode'] not in GRADIENT_MODES:
        raise ConfigError(f"gradient_mode must be one of {GRADIENT_MODES}, got {values['gradient_mode']!r}")
    if not 0 < values['separability_tol'] < 1:
        raise ConfigError(f"separability_tol must lie in (0, 1), got {values['separability_tol']}")
    if values['dense_limit'] < 1:
        raise ConfigError(f"dense_limit must be at least 1, got {values['dense_limit']}")

    try:
        params = SpinSystemParams(values['nu_a'], values['nu_b'], values['j_hz'])
        acquisition = AcquisitionParams(values['sweep_width'], values['points'], values['t2_star'])
        acquisition.validate_for(params)
    except (SpinParamsError, AcquisitionError) as e:
        raise ConfigError(str(e)) from e

    return Config(
        params=params,
        acquisition=acquisition,
        gradient_mode=values['gradient_mode'],
        prep_echo=values['prep_echo'],
        separability_tol=values['separability_tol'],
        dense_limit=values['dense_limit'],
        seed=values['seed'],
    )
