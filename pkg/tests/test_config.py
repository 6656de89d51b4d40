import pytest

from quadgait.config import (
    config_hash,
    dump_flat_config,
    load_flat_config,
    parse_flat_config,
    save_flat_config,
)


def test_parse_scalars():
    text = """
    # comment line
    iterations = 40
    lr = 3e-4
    gait = trot
    deterministic = true
    resume = false
    note = "quoted string"
    checkpoint = none
    """
    values = parse_flat_config(text)
    assert values["iterations"] == 40
    assert isinstance(values["iterations"], int)
    assert values["lr"] == pytest.approx(3e-4)
    assert values["gait"] == "trot"
    assert values["deterministic"] is True
    assert values["resume"] is False
    assert values["note"] == "quoted string"
    assert values["checkpoint"] is None


def test_parse_tuples_and_inline_comments():
    values = parse_flat_config("seeds = 0, 1, 2  # three seeds\nmix = 1, a, 2.5\n")
    assert values["seeds"] == (0, 1, 2)
    assert values["mix"] == (1, "a", 2.5)


def test_parse_rejects_bad_lines():
    with pytest.raises(ValueError, match="line 1"):
        parse_flat_config("just some words\n")
    with pytest.raises(ValueError, match="empty key"):
        parse_flat_config(" = 3\n")


def test_roundtrip_through_dump(tmp_path):
    values = {
        "iterations": 12,
        "lr": 0.0003,
        "gait": "bound",
        "flag": True,
        "seeds": (3, 4),
        "nothing": None,
    }
    path = tmp_path / "run.cfg"
    save_flat_config(path, values)
    back = load_flat_config(path)
    assert back == values


def test_dump_sorts_keys():
    text = dump_flat_config({"b": 1, "a": 2})
    assert text.index("a = 2") < text.index("b = 1")


def test_config_hash_order_insensitive():
    a = config_hash({"x": 1, "y": 2.0})
    b = config_hash({"y": 2.0, "x": 1})
    assert a == b
    assert len(a) == 12
    assert a != config_hash({"x": 1, "y": 2.5})


def test_float_dump_preserves_value():
    # repr keeps enough digits for an exact float round-trip
    v = 0.1 + 0.2
    back = parse_flat_config(dump_flat_config({"v": v}))
    assert back["v"] == v
