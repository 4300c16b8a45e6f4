import pytest
from hypothesis import given
from hypothesis import strategies as st

from kudp import (
    EmptyStream,
    KeySpecError,
    PortKey,
    PortOutsideKey,
    offset_of_port,
    port_for_index,
    schedule_stream,
)

KEY5 = PortKey(59000, 5)


@pytest.mark.parametrize("i, port", [(0, 59000), (4, 59004), (7, 59002)])
def test_port_for_index(i, port):
    assert port_for_index(KEY5, i) == port


def test_port_for_index_rejects_negative():
    with pytest.raises(ValueError):
        port_for_index(KEY5, -1)


def test_offset_of_port_inside():
    assert offset_of_port(KEY5, 59003) == 3


@pytest.mark.parametrize("port", [58999, 59005])
def test_offset_of_port_outside(port):
    with pytest.raises(PortOutsideKey) as info:
        offset_of_port(KEY5, port)
    assert info.value.port == port
    assert "59000:5" in str(info.value)


def test_schedule_one_cycle():
    packets = schedule_stream(KEY5, [bytes([i]) for i in range(5)])
    assert [p.dest_port for p in packets] == [59000, 59001, 59002, 59003, 59004]


def test_schedule_four_cycles():
    packets = schedule_stream(KEY5, [b"x"] * 20)
    assert [p.dest_port for p in packets] == list(range(59000, 59005)) * 4
    assert [p.seq_index for p in packets] == list(range(20))


def test_schedule_k1_is_plain_udp():
    packets = schedule_stream(PortKey(4000, 1), [b"a", b"b", b"c"])
    assert {p.dest_port for p in packets} == {4000}


def test_schedule_empty():
    with pytest.raises(EmptyStream):
        schedule_stream(KEY5, [])


def test_schedule_keeps_payloads():
    payloads = [b"alpha", b"", b"gamma"]
    assert [p.payload for p in schedule_stream(KEY5, payloads)] == payloads


def test_key_ports_and_text():
    assert KEY5.ports == [59000, 59001, 59002, 59003, 59004]
    assert KEY5.last_port == 59004
    assert str(KEY5) == "59000:5"
    assert 59004 in KEY5 and 59005 not in KEY5


@pytest.mark.parametrize(
    "base, k",
    [(0, 5), (65536, 1), (59000, 0), (65535, 2)],
)
def test_invalid_keys(base, k):
    with pytest.raises(KeySpecError):
        PortKey(base, k)


def test_key_may_end_on_last_port():
    assert PortKey(65531, 5).last_port == 65535


def test_parse_roundtrip():
    assert PortKey.parse(" 59000:200 ") == PortKey(59000, 200)


@pytest.mark.parametrize(
    "text, fragment",
    [("59000", "BASE:K"), ("abc:5", "base port"), ("59000:five", "key length"), ("59000:0", "key length")],
)
def test_parse_names_bad_component(text, fragment):
    with pytest.raises(KeySpecError, match=fragment):
        PortKey.parse(text)


@given(
    base=st.integers(1, 60000),
    k=st.integers(1, 200),
    i=st.integers(0, 10**6),
)
def test_roundtrip_property(base, k, i):
    key = PortKey(base, k)
    assert offset_of_port(key, port_for_index(key, i)) == i % k


@given(k=st.integers(1, 50), n=st.integers(1, 300))
def test_schedule_shape_property(k, n):
    key = PortKey(30000, k)
    packets = schedule_stream(key, [b""] * n)
    assert len(packets) == n
    assert all(p.dest_port == 30000 + p.seq_index % k for p in packets)
