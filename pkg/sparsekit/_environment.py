import os

from .exceptions import InvalidSeed

SEED_VARIABLE = 'SPARSEKIT_SEED'


def seed_from_environment(environment_variable: str = SEED_VARIABLE,
                          default: int = 0) -> int:
    """
    Read an integer seed from an environment variable
    :param environment_variable: variable holding the seed
    :param default: seed used when the variable is unset or empty
    :return: the seed
    """
    value = os.environ.get(environment_variable, '').strip()
    if not value:
        return default
    try:
        seed = int(value, 0)
    except ValueError:
        raise InvalidSeed(f'{environment_variable}={value!r} is not an integer')
    if seed < 0 or seed >= 2 ** 64:
        raise InvalidSeed(f'{environment_variable}={value!r} is not a 64-bit seed')
    return seed


__all__ = ['seed_from_environment', 'SEED_VARIABLE']
