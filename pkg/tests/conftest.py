"""Suite-wide configuration: the acceptance summary.

Acceptance tests carry a ``criterion`` marker; after the run a one-line
PASS/FAIL verdict per criterion is printed in the terminal summary.
"""
import collections


_criterion_of = {}
_outcomes = collections.defaultdict(list)
_labels = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "criterion(ident, label): marks a test as part of an acceptance criterion")


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("criterion")
        if marker is not None:
            ident, label = marker.args
            _criterion_of[item.nodeid] = ident
            _labels[ident] = label


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    ident = _criterion_of.get(report.nodeid)
    if ident is not None:
        _outcomes[ident].append(report.outcome)


def _sort_key(ident):
    head = ident.split(".")[0]
    return (int(head) if head.isdigit() else 99, ident)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.write_sep("=", "acceptance criteria")
    for ident in sorted(_outcomes, key=_sort_key):
        outcomes = _outcomes[ident]
        verdict = "PASS" if all(o == "passed" for o in outcomes) else "FAIL"
        tr.write_line(f"criterion {ident:<4} {verdict}  {_labels[ident]} "
                      f"({len(outcomes)} check{'s' if len(outcomes) != 1 else ''})")
