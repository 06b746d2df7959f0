from functools import wraps
from typing import Type, Set, TypeVar, Union, Dict, Any
import threading
import inspect
from collections import Counter

from .exceptions import AmbiguousBackends, NoNamedSetting


T = TypeVar('T')

DEFAULT_SETTINGS: Dict[str, Any] = {
    'tol_solver': 1e-7,
    'max_iters': 50_000,
    'eps_floor': 1e-8,
    'zero_weight_cap': 1e4,
    'oracle_box': 1e4,
}


class _LocalStorage(threading.local):
    def __init__(self):
        self.current: 'SolverContext' = None


class SolverContext:
    """
    Context manager/decorator for providing the cone solver backend and
    solver settings:

    with SolverContext(SplittingBackend, tol_solver=1e-6):
        solve(program)
    or

    @SolverContext(max_iters=200)
    def fun():
        solve(program)

    Settings not given fall back to the enclosing context, and finally to
    DEFAULT_SETTINGS.
    """
    __local_storage = _LocalStorage()

    @staticmethod
    def current_context() -> 'SolverContext':
        context = SolverContext.__local_storage.current
        if context is None:
            context = SolverContext()
            SolverContext._set_current(context)
        return context

    @staticmethod
    def _set_current(context: 'SolverContext'):
        SolverContext.__local_storage.current = context

    def __init__(self, *backends: Type[object], **settings: Any) -> None:
        """
        Construct a new context
        :param backends: Backend classes to provide in this context
        :param settings: Named solver settings to provide in this context
        """
        for name in settings:
            if name not in DEFAULT_SETTINGS:
                raise NoNamedSetting(f'Unknown solver setting "{name}"')
        self.__registry: Set[Type[object]] = set(backends)
        self.__settings = settings
        self.__parent: Union['SolverContext', None] = None
        self.__old_current = None

    def __getitem__(self, item: str):
        """
        Get a solver setting in this context
        :param item: Name of the setting
        :return: value from this context, an enclosing one, or the default
        """
        if item in self.__settings:
            return self.__settings[item]
        if self.__parent is not None:
            return self.__parent[item]
        try:
            return DEFAULT_SETTINGS[item]
        except KeyError:
            raise NoNamedSetting(
                f'Setting "{item}" not found in: {repr(self)}'
            )

    def __contains__(self, item: Union[str, Type[object]]) -> bool:
        """
        Test if a setting or backend is provided by this context
        """
        if isinstance(item, str):
            return item in self.__settings or item in DEFAULT_SETTINGS
        return item in self.__registry

    def __iter__(self):
        """
        Iterate over the backends visible from this context, innermost first
        """
        yield from self.__registry
        if self.__parent is not None:
            yield from self.__parent

    def __call__(self, f):
        """
        Decorate a function to run in this context
        :param f: function to decorate
        :return: decorated function
        """
        @wraps(f)
        def run_in(*args, **kwargs):
            with self:
                return f(*args, **kwargs)
        return run_in

    def __or__(self, other: 'SolverContext') -> 'SolverContext':
        """
        Combine this context with another. Settings of other win.
        """
        settings = dict(self.__settings)
        settings.update(other.__settings)
        return SolverContext(*(self.__registry | other.__registry), **settings)

    def __enter__(self):
        self.__old_current = SolverContext.current_context()
        if self.__old_current is not self:
            self.__parent = self.__old_current
        SolverContext._set_current(self)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        SolverContext._set_current(self.__old_current)
        self.__old_current = None
        self.__parent = None

    def settings(self) -> Dict[str, Any]:
        """
        :return: the effective value of every known setting
        """
        return {name: self[name] for name in DEFAULT_SETTINGS}

    def flattened(self) -> 'SolverContext':
        """
        Detached copy with the enclosing contexts folded in. Worker threads
        do not see the current context of the submitting thread, so they
        enter a flattened copy instead.
        """
        context = self
        while not context.__registry and context.__parent is not None:
            context = context.__parent
        return SolverContext(*context.__registry, **self.settings())

    @staticmethod
    def provide(base: Type[T], default: Type[T] = None) -> T:
        """
        Instantiate the most specific registered subtype of base
        :param base: abstract backend type
        :param default: type to instantiate when nothing is registered
        :return: backend instance
        """
        subtype = SolverContext.find_subtype(base)
        if subtype is None:
            subtype = default if default is not None else base
        return subtype()

    @staticmethod
    def find_subtype(component: Type[T]) -> Union[Type[T], None]:
        def mro_distance(subtype: Type[T]) -> int:
            mro = inspect.getmro(subtype)
            return mro.index(component)

        context = SolverContext.current_context()
        subtypes = [c for c in context.__registry if issubclass(c, component)]
        if not subtypes and context.__parent is not None:
            with _Detached(context.__parent):
                return SolverContext.find_subtype(component)
        distances = [mro_distance(subtype) for subtype in subtypes]
        counter = Counter(distances)
        if any(count > 1 for count in counter.values()):
            ambiguous = [str(subtype) for subtype in subtypes
                         if counter[mro_distance(subtype)] > 1]
            message = ('Attempt to provide backend {} with '
                       'equally specific registered subtypes: {}')
            message = message.format(str(component), ', '.join(ambiguous))
            raise AmbiguousBackends(message)
        if not subtypes:
            return None
        return max(subtypes, key=mro_distance)

    def __repr__(self):
        backends = sorted(b.__name__ for b in self.__registry)
        settings = [f'{key}={repr(value)}'
                    for key, value in self.__settings.items()]
        return f'SolverContext({", ".join(backends + settings)})'


class _Detached:
    def __init__(self, context: SolverContext):
        self.context = context
        self.old = None

    def __enter__(self):
        self.old = SolverContext.current_context()
        SolverContext._set_current(self.context)

    def __exit__(self, *_):
        SolverContext._set_current(self.old)


def current_context() -> SolverContext:
    return SolverContext.current_context()


__all__ = ['SolverContext', 'DEFAULT_SETTINGS', 'current_context']
