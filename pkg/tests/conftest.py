import pytest

from facecall.config import bundled_asset_path
from facecall.expression import load_clip_library
from facecall.persona import GuardrailPolicy, PersonaSpec
from facecall.providers.base import ProviderSet, TimeoutBudgets
from facecall.providers.mocks import (
    MockLlmProvider,
    MockModerationProvider,
    MockSttProvider,
    MockTtsProvider,
)
from facecall.session import SimulatedClock, create_session


@pytest.fixture(scope="session")
def library():
    return load_clip_library(bundled_asset_path("sample_clips.json"))


@pytest.fixture
def spec():
    return PersonaSpec(
        agent_name="Ava",
        personality_traits=("warm", "curious"),
        background="A career coach.",
        premise="You are coaching the user through a mock job interview.",
        user_info={"name": "Sam"},
    )


@pytest.fixture
def policy():
    return GuardrailPolicy()


def make_mock_providers(cues=None, blocklist=None, budgets=None, **latency):
    kwargs = dict(blocklist=blocklist) if blocklist is not None else {}
    return ProviderSet(
        stt=MockSttProvider(**latency),
        llm=MockLlmProvider(cues=cues, **latency),
        tts=MockTtsProvider(**latency),
        moderation=MockModerationProvider(**kwargs, **latency),
        budgets=budgets or TimeoutBudgets(),
    )


@pytest.fixture
def provider_set():
    return make_mock_providers()


def make_test_session(spec, policy, goal="practice", clock=None, **kwargs):
    session = create_session(
        spec=spec,
        policy=policy,
        goal=goal,
        clock=clock or SimulatedClock(),
        **kwargs,
    )
    session.activate()
    return session


@pytest.fixture
def session(spec, policy):
    return make_test_session(spec, policy)


# Per-criterion pass/fail lines for the acceptance suite, printed even when
# pytest captures test output.
_acceptance_results: dict[str, tuple[str, str]] = {}


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    if report.when == "call" and item.path.name == "test_acceptance.py":
        label = (item.function.__doc__ or item.name).strip().splitlines()[0]
        status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        _acceptance_results[item.nodeid] = (label, status)
    return report


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for label, status in _acceptance_results.values():
        terminalreporter.write_line(f"{status}  {label}")
