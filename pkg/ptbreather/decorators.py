from functools import wraps
from inspect import signature
from ptbreather.validator import Validator


def validate(**rules):
    """Validate the named arguments of the decorated function before calling it.

    Example:
        @validate(dt='required|numeric|gt:0')
        def step_rk4(state, params, dt): ...
    """

    def args_validator(f):
        f_signature = signature(f)

        @wraps(f)
        def wrapper(*args, **kwargs):
            bound = f_signature.bind(*args, **kwargs)
            bound.apply_defaults()

            validator = Validator(
                data={name: bound.arguments[name] for name in rules if name in bound.arguments},
                rules=rules
            )

            # It raises the ValidationError
            validator.validate()

            return f(*args, **kwargs)

        return wrapper

    return args_validator
