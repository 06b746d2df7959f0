from sparsekit import (
    SolverContext,
    ConeSolverBackend,
    InteriorPointBackend,
    SplittingBackend,
    DEFAULT_SETTINGS,
    current_context,
)
from sparsekit.exceptions import AmbiguousBackends, NoNamedSetting
import threading
import pytest


class RecordingBackend(ConeSolverBackend):
    def solve(self, program, tol_solver, max_iters):
        pass


class AlternativeBackend(ConeSolverBackend):
    def solve(self, program, tol_solver, max_iters):
        pass


def test_can_register_backend():
    e = SolverContext(SplittingBackend)
    assert SplittingBackend in e


def test_provides_default_backend():
    with SolverContext():
        b = SolverContext.provide(ConeSolverBackend, default=InteriorPointBackend)
        assert isinstance(b, InteriorPointBackend)


def test_provides_registered_backend():
    with SolverContext(SplittingBackend):
        b = SolverContext.provide(ConeSolverBackend, default=InteriorPointBackend)
        assert isinstance(b, SplittingBackend)
    with SolverContext(RecordingBackend):
        b = SolverContext.provide(ConeSolverBackend, default=InteriorPointBackend)
        assert isinstance(b, RecordingBackend)


def test_inner_context_sees_outer_backend():
    with SolverContext(SplittingBackend):
        with SolverContext(tol_solver=1e-9):
            b = SolverContext.provide(ConeSolverBackend)
            assert isinstance(b, SplittingBackend)


def test_union():
    e1 = SolverContext(SplittingBackend, tol_solver=1e-6)
    e2 = SolverContext(RecordingBackend, tol_solver=1e-8, max_iters=10)
    e3 = e1 | e2
    assert SplittingBackend in e3
    assert RecordingBackend in e3
    assert e3['tol_solver'] == 1e-8
    assert e3['max_iters'] == 10


def test_decorator():
    context = SolverContext(max_iters=7)

    @context
    def f():
        return current_context()['max_iters']

    assert f() == 7
    assert current_context()['max_iters'] == DEFAULT_SETTINGS['max_iters']


def test_new_context_in_thread():
    seen = []

    def worker():
        with SolverContext(AlternativeBackend):
            seen.append(SolverContext.provide(ConeSolverBackend))

    with SolverContext(RecordingBackend):
        thread = threading.Thread(target=worker)
        thread.start()
        thread.join()
        b = SolverContext.provide(ConeSolverBackend)
        assert isinstance(b, RecordingBackend)
    assert isinstance(seen[0], AlternativeBackend)


def test_thread_does_not_share_current_context():
    e = SolverContext(RecordingBackend)
    seen = []

    def worker():
        seen.append(SolverContext.current_context() is e)

    with e:
        thread = threading.Thread(target=worker)
        thread.start()
        thread.join()
    assert seen == [False]


def test_flattened_carries_settings_and_backend():
    with SolverContext(SplittingBackend, tol_solver=1e-6):
        with SolverContext(max_iters=12):
            flat = current_context().flattened()
    assert flat['tol_solver'] == 1e-6
    assert flat['max_iters'] == 12
    assert SplittingBackend in flat


def test_context_manager():
    e = SolverContext()
    with e:
        assert SolverContext.current_context() is e
    assert SolverContext.current_context() is not e


def test_unknown_setting():
    with pytest.raises(NoNamedSetting):
        SolverContext(tolerance=1e-3)
    c = SolverContext()
    pytest.raises(NoNamedSetting, lambda: c['tolerance'])


def test_getitem_falls_back_to_defaults():
    e = SolverContext(eps_floor=1e-6)
    assert e['eps_floor'] == 1e-6
    assert e['zero_weight_cap'] == DEFAULT_SETTINGS['zero_weight_cap']
    assert e.settings()['eps_floor'] == 1e-6


def test_gets_most_specific():
    class RecordingBackendSub(RecordingBackend):
        pass

    with SolverContext(RecordingBackend, RecordingBackendSub):
        b = SolverContext.provide(ConeSolverBackend)
        assert isinstance(b, RecordingBackendSub)


def test_fails_with_ambiguous_backends():
    with SolverContext(RecordingBackend, AlternativeBackend):
        with pytest.raises(AmbiguousBackends):
            SolverContext.provide(ConeSolverBackend)
