import pytest

from lhtwpa.units import parse_quantity, quantity_in


@pytest.mark.parametrize(
    "text, unit, expected",
    [
        ("1670pH", "H", 1.67e-9),
        ("9.6 fF", "F", 9.6e-15),
        ("10um", "m", 1e-5),
        ("10µm", "m", 1e-5),
        ("7.5GHz", "Hz", 7.5e9),
        ("50Ohm", "Ohm", 50.0),
        ("0.2uA", "A", 2e-7),
        ("5m", "m", 5.0),
        ("3", "Hz", 3.0),
    ],
)
def test_parse_quantity(text, unit, expected):
    assert parse_quantity(text, unit) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("text, unit", [("1670p", "H"), ("7.5GHz", "H"), ("abc", "Hz"), ("1..2pH", "H")])
def test_parse_quantity_rejects(text, unit):
    with pytest.raises(ValueError):
        parse_quantity(text, unit)


def test_bare_numbers_use_field_scale():
    assert quantity_in(1670, "H", 1e-12) == pytest.approx(1.67e-9)
    assert quantity_in("1670", "H", 1e-12) == pytest.approx(1.67e-9)
    assert quantity_in("1670pH", "H", 1e-12) == pytest.approx(1.67e-9)
    with pytest.raises(ValueError):
        quantity_in(True, "H", 1e-12)
