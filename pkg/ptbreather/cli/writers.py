import csv
import json
import os
from dataclasses import dataclass, field
from numbers import Integral, Real
from typing import Any, Iterable, List, Sequence

import numpy as np

from ptbreather import __version__
from ptbreather.exceptions import SchemaError, ValidationError
from ptbreather.lattice_core import Params
from ptbreather.stationary import BreatherProfile
from ptbreather.utils import trans
from ptbreather.validator import Validator

SCHEMA_VERSION = 1

PROFILE_RULES = {
    'schema_version': f'required|integer|in:{SCHEMA_VERSION}',
    'params': 'required|dict:omega,gamma,epsilon,e_freq',
    'params.omega': 'required|numeric|finite',
    'params.gamma': 'required|numeric|finite|min:0',
    'params.epsilon': 'required|numeric|finite|min:0',
    'params.e_freq': 'required|numeric|finite',
    'n_half': 'required|integer|min:0',
    'u_profile': 'required|list:list',
    'residual': 'required|numeric|min:0',
    'metadata': 'required|dict',
}


def format_value(value: Any) -> str:
    """Integers as they are, reals with 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()

    if isinstance(value, Integral):
        return str(int(value))

    if isinstance(value, Real):
        return f'{float(value):.17g}'

    return str(value)


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """A comma separated file with a header row and LF line endings."""
    with open(path, 'w', encoding='utf-8', newline='') as file:
        writer = csv.writer(file, lineterminator='\n')
        writer.writerow(header)

        for row in rows:
            writer.writerow([format_value(value) for value in row])

    return path


def dumps(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=True) + '\n'


def write_json(path: str, data: Any) -> str:
    with open(path, 'w', encoding='utf-8', newline='\n') as file:
        file.write(dumps(data))

    return path


@dataclass(frozen=True)
class ProfileFile:
    """The persisted form of a breather profile; complex values as [re, im] pairs."""
    params: dict
    n_half: int
    u_profile: List[List[float]]
    residual: float
    metadata: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def from_profile(cls, profile: BreatherProfile) -> 'ProfileFile':
        return cls(
            params=profile.params.to_dict(),
            n_half=profile.n_half,
            u_profile=[[float(z.real), float(z.imag)] for z in profile.u_profile],
            residual=float(profile.residual),
            metadata=json.loads(json.dumps(profile.metadata)),
        )

    @classmethod
    def from_dict(cls, data: Any) -> 'ProfileFile':
        """Raises:
            SchemaError
        """
        if not isinstance(data, dict):
            raise SchemaError(trans('en.lattice.schema', attributes={'reason': 'the root must be an object'}))

        unknown = sorted(set(data) - set(PROFILE_RULES))
        if unknown:
            raise SchemaError(trans('en.lattice.schema', attributes={'reason': f"unknown keys {', '.join(unknown)}"}))

        try:
            Validator(data, PROFILE_RULES).validate()

        except ValidationError as e:
            raise SchemaError(trans('en.lattice.schema', attributes={'reason': str(e)}), details=e.get_errors()) from e

        pairs = data['u_profile']
        if len(pairs) != 2 * data['n_half'] + 1:
            raise SchemaError(trans('en.lattice.schema', attributes={'reason': 'u_profile length does not match n_half'}))

        for pair in pairs:
            if len(pair) != 2 or not all(isinstance(x, Real) and not isinstance(x, bool) and np.isfinite(x) for x in pair):
                raise SchemaError(trans('en.lattice.schema', attributes={'reason': 'u_profile entries must be [re, im]'}))

        return cls(
            params=data['params'],
            n_half=data['n_half'],
            u_profile=pairs,
            residual=data['residual'],
            metadata=data['metadata'],
            schema_version=data['schema_version'],
        )

    def to_dict(self) -> dict:
        return {
            'schema_version': self.schema_version,
            'params': self.params,
            'n_half': self.n_half,
            'u_profile': self.u_profile,
            'residual': self.residual,
            'metadata': self.metadata,
        }

    def to_profile(self) -> BreatherProfile:
        values = np.array([complex(re, im) for re, im in self.u_profile])
        values.setflags(write=False)
        return BreatherProfile(
            params=Params(**self.params),
            n_half=self.n_half,
            u_profile=values,
            residual=float(self.residual),
            metadata=dict(self.metadata),
        )

    def write(self, path: str) -> str:
        return write_json(path, self.to_dict())

    @classmethod
    def read(cls, path: str) -> 'ProfileFile':
        """Raises:
            SchemaError -- unreadable JSON or a document that breaks the schema.
        """
        try:
            with open(path, encoding='utf-8') as file:
                data = json.load(file)

        except json.JSONDecodeError as e:
            raise SchemaError(trans('en.lattice.schema', attributes={'reason': f'invalid JSON ({e.msg})'})) from e

        return cls.from_dict(data)


class RunDirectory:
    """One output directory per run, named by command and configuration hash.

    Holds the configuration snapshot, the results and a manifest listing them.
    """

    def __init__(self, root: str, command: str, config_document: dict, digest: str):
        self.path = os.path.join(root, f'{command}-{digest}')
        self._command = command
        self._files = []
        os.makedirs(self.path, exist_ok=True)
        self._add(write_json(os.path.join(self.path, 'config.json'), config_document))

    def _add(self, path: str) -> str:
        self._files.append(os.path.basename(path))
        return path

    def file(self, name: str) -> str:
        return os.path.join(self.path, name)

    def csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
        return self._add(write_csv(self.file(name), header, rows))

    def json(self, name: str, data: Any) -> str:
        return self._add(write_json(self.file(name), data))

    def profile(self, name: str, profile: BreatherProfile) -> str:
        return self._add(ProfileFile.from_profile(profile).write(self.file(name)))

    def close(self, summary: dict) -> str:
        return write_json(self.file('manifest.json'), {
            'command': self._command,
            'version': __version__,
            'files': sorted(self._files),
            'summary': summary,
        })
