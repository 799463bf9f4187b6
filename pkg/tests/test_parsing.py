import math

import pytest

from fineq.errors import InputError
from fineq.parsing import parse_call, parse_number, split_args


@pytest.mark.parametrize("text,value", [
    ("1", 1.0), ("-3*pi/4", -0.75 * math.pi), ("2**3", 8.0), ("1e-3", 1e-3),
    ("pi", math.pi), ("+(1 - 2) * 3", -3.0), (" 0.5 ", 0.5),
])
def test_parse_number(text, value):
    assert parse_number(text) == pytest.approx(value, rel=1e-15)


@pytest.mark.parametrize("text", ["", "e", "__import__('os')", "1/0", "2**1000", "10.0**300*10.0**300",
                                  "[1]", "'a'", "1 if 1 else 2", "x"])
def test_parse_number_rejects(text):
    with pytest.raises(InputError):
        parse_number(text)


def test_split_args_nesting():
    assert split_args("a, prod(b, c), d") == ["a", "prod(b, c)", "d"]
    assert split_args("") == []
    assert split_args("a,") == ["a", ""]


@pytest.mark.parametrize("text", ["a(b", "a)b", "(()"])
def test_split_args_unbalanced(text):
    with pytest.raises(InputError):
        split_args(text)


def test_parse_call():
    assert parse_call("rot_x(pi/3)") == ("rot_x", ["pi/3"])
    assert parse_call(" twopiloop ") == ("twopiloop", [])
    assert parse_call("prod(kick(u2), rot_u(1))") == ("prod", ["kick(u2)", "rot_u(1)"])
    with pytest.raises(InputError):
        parse_call("rot_x(1) + 2")
    with pytest.raises(InputError):
        parse_call("rot_x)")
