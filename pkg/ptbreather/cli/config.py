import hashlib
import json
from copy import deepcopy
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from ptbreather.enums import Command
from ptbreather.json_parser import JsonParser
from ptbreather.lattice_core import Params
from ptbreather.validator import Validator

DEFAULTS = {
    'command': Command.CHECK.value,
    'params': {
        'omega': 0.75,
        'gamma': 0.5,
        'epsilon': 0.05,
        'e_freq': 2.635366,
    },
    'n_half': 20,
    'tol': 1e-12,
    'dt': 1e-3,
    't_end': 50.0,
    'sweep': None,
    'seed': 0,
    'output_dir': 'runs',
    'delta': 0.01,
    'nu': 0.2,
    't_max': 400.0,
    'eps_max': 0.2,
    'workers': 1,
    'a_max': 2.0,
    'n_points': 201,
}

CONFIG_RULES = {
    'config': f"required|dict:{','.join(DEFAULTS)}",
    'config.command': f"required|string|in:{','.join(command.value for command in Command)}",
    'config.params': 'required|dict:omega,gamma,epsilon,e_freq',
    'config.params.omega': 'required|numeric|finite',
    'config.params.gamma': 'required|numeric|finite|gt:0',
    'config.params.epsilon': 'required|numeric|finite|min:0',
    'config.params.e_freq': 'required|numeric|finite',
    'config.n_half': 'required|integer|min:1',
    'config.tol': 'required|numeric|gt:0',
    'config.dt': 'required|numeric|gt:0',
    'config.t_end': 'required|numeric|gt:0',
    'config.sweep': 'nullable|list:numeric',
    'config.seed': 'required|integer|min:0',
    'config.output_dir': 'required|string',
    'config.delta': 'required|numeric|gt:0',
    'config.nu': 'required|numeric|gt:0',
    'config.t_max': 'required|numeric|gt:0',
    'config.eps_max': 'required|numeric|min:0',
    'config.workers': 'required|integer|min:1',
    'config.a_max': 'required|numeric|gt:0',
    'config.n_points': 'required|integer|min:2',
}


@dataclass(frozen=True)
class ExperimentConfig:
    command: Command
    params: Params
    n_half: int
    tol: float
    dt: float
    t_end: float
    seed: int
    output_dir: str
    delta: float
    nu: float
    t_max: float
    eps_max: float
    workers: int
    a_max: float
    n_points: int
    sweep: Optional[List[float]] = field(default=None)

    def to_dict(self) -> dict:
        """The validated document, in the layout of the configuration file."""
        return {
            'command': self.command.value,
            'params': self.params.to_dict(),
            'n_half': self.n_half,
            'tol': self.tol,
            'dt': self.dt,
            't_end': self.t_end,
            'sweep': self.sweep,
            'seed': self.seed,
            'output_dir': self.output_dir,
            'delta': self.delta,
            'nu': self.nu,
            't_max': self.t_max,
            'eps_max': self.eps_max,
            'workers': self.workers,
            'a_max': self.a_max,
            'n_points': self.n_points,
        }

    def digest(self) -> str:
        """A short hash of the document; output_dir does not take part."""
        document = self.to_dict()
        document.pop('output_dir')
        canonical = json.dumps(document, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()[:12]


def _merge(base: dict, update: dict) -> dict:
    merged = deepcopy(base)

    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)

        else:
            merged[key] = value

    return merged


def _set_dotted(data: dict, key: str, value: Any) -> None:
    *parents, leaf = key.split('.')

    for parent in parents:
        data = data.setdefault(parent, {})

    data[leaf] = value


def build_config(document: Optional[dict] = None, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """Defaults, then the document, then the dotted overrides; validated as a whole.

    Raises:
        ValidationError
    """
    data = _merge(DEFAULTS, document or {})

    for key, value in (overrides or {}).items():
        if value is not None:
            _set_dotted(data, key, value)

    # It raises the ValidationError
    Validator({'config': data}, CONFIG_RULES).validate()

    return ExperimentConfig(
        command=Command(data['command']),
        params=Params(**data['params']),
        n_half=data['n_half'],
        tol=float(data['tol']),
        dt=float(data['dt']),
        t_end=float(data['t_end']),
        sweep=None if data['sweep'] is None else [float(value) for value in data['sweep']],
        seed=data['seed'],
        output_dir=data['output_dir'],
        delta=float(data['delta']),
        nu=float(data['nu']),
        t_max=float(data['t_max']),
        eps_max=float(data['eps_max']),
        workers=data['workers'],
        a_max=float(data['a_max']),
        n_points=data['n_points'],
    )


def load_config(config_path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """Read a JSON configuration file (optional) and apply flag overrides.

    Raises:
        ValidationError
        ValueError -- the file root is not an object.
        OSError
    """
    document = JsonParser(config_path).data() if config_path else {}
    return build_config(document, overrides)
