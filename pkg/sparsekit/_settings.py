import inspect
from functools import wraps

from ._context import current_context, DEFAULT_SETTINGS


def uses_settings(f):
    """
    Decorator for functions taking solver settings as parameters. A setting
    parameter that is missing or None is filled from the current
    SolverContext:

    @uses_settings
    def solve(program, tol_solver=None):
        ...

    with SolverContext(tol_solver=1e-9):
        solve(program)
    """
    signature = inspect.signature(f)
    names = [name for name in signature.parameters if name in DEFAULT_SETTINGS]

    @wraps(f)
    def decorator(*args, **kwargs):
        bound = signature.bind(*args, **kwargs)
        bound.apply_defaults()
        context = current_context()
        for name in names:
            if bound.arguments.get(name) is None:
                bound.arguments[name] = context[name]
        return f(*bound.args, **bound.kwargs)
    decorator.__uses_settings__ = tuple(names)
    return decorator


__all__ = ['uses_settings']
