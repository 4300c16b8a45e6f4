"""Brute-force reference for single-event streams."""


def hypotheses(n, b):
    """Every single-drop and single-adjacent-swap explanation of a length-n stream."""
    for j in range(n - b):
        yield ("drop", j), [i for i in range(n) if i != j]
    for j in range(n - 1 - b):
        order = list(range(n))
        order[j], order[j + 1] = order[j + 1], order[j]
        yield ("swap", j), order


def oracle_assignment(k, n, b, observed_offsets):
    """Expected output slots for an observed port-offset sequence.

    Searches every single-event explanation whose port sequence matches the
    observation and requires it to be unique.
    """
    matches = [
        (kind, order)
        for kind, order in hypotheses(n, b)
        if [i % k for i in order] == observed_offsets
    ]
    assert len(matches) == 1, f"ambiguous or unexplained observation {observed_offsets}"
    (kind, j), order = matches[0]
    expected = list(range(n))
    if kind == "drop":
        expected[j] = None
    return expected
