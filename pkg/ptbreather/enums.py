from enum import Enum


class ValueType(Enum):
    STRING = 'string'
    LIST = 'list'
    INTEGER = 'integer'
    NUMERIC = 'numeric'
    DICT = 'dict'


class HessianKind(Enum):
    EXTENDED = 'extended'
    MODIFIED = 'modified'


class Command(Enum):
    BRANCH = 'branch'
    BREATHER = 'breather'
    SPECTRUM = 'spectrum'
    EVOLVE = 'evolve'
    METASTAB = 'metastab'
    CHECK = 'check'


class ExitCode(Enum):
    SUCCESS = 0
    VALIDATION = 2
    SOLVER = 3
    INVARIANT = 4
