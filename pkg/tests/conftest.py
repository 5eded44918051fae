import pytest

from helpers import synthetic_corpus, tiny_config

_acceptance = {}  # criterion id -> [(outcome, nodeid)]


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(id): acceptance criterion implemented by this test")


def pytest_runtest_logreport(report):
    marker = getattr(report, "acceptance_id", None)
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        outcome = "SKIP" if report.skipped else ("PASS" if report.passed else "FAIL")
        _acceptance.setdefault(marker, []).append((outcome, report.nodeid))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("acceptance")
    if m is not None:
        rep.acceptance_id = m.args[0]


def pytest_terminal_summary(terminalreporter):
    """One line per criterion: FAIL if any part failed, SKIP if every part skipped, else PASS."""
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_acceptance, key=int):
        parts = _acceptance[key]
        outcomes = {o for o, _ in parts}
        verdict = "FAIL" if "FAIL" in outcomes else ("SKIP" if outcomes == {"SKIP"} else "PASS")
        detail = ", ".join(f"{nodeid.split('::')[-1]}={o}" for o, nodeid in parts)
        terminalreporter.write_line(f"criterion {key}: {verdict}  ({detail})")


@pytest.fixture(scope="session")
def synth_docs():
    return synthetic_corpus(8)


@pytest.fixture(scope="session")
def trained(synth_docs):
    """A tiny joint MRC model overfit on the synthetic corpus."""
    from entrel.trainer import train

    cfg = tiny_config(**{"train.epochs": 120})
    stop = lambda r: all(s.f1 >= 0.99 for s in r.levels.values())  # noqa: E731
    return train(synth_docs, synth_docs, cfg, log=lambda _: None, early_stop=stop)
