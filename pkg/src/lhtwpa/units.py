"""Engineering-unit parsing for user-facing inputs.

Quantities in config files may be plain numbers (already in the unit the
field name implies) or strings such as ``"1670pH"``, ``"7.5 GHz"`` or
``"10um"``.
"""

import re

_PREFIX = {
    "f": 1e-15,
    "p": 1e-12,
    "n": 1e-9,
    "u": 1e-6,
    "µ": 1e-6,
    "μ": 1e-6,
    "m": 1e-3,
    "": 1.0,
    "k": 1e3,
    "M": 1e6,
    "G": 1e9,
    "T": 1e12,
}

_BASE_UNITS = {"H", "F", "Hz", "m", "A", "Ohm", "ohm", "Ω", "s"}

_QUANTITY = re.compile(
    r"^\s*(?P<num>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*"
    r"(?P<prefix>[fpnuµμmkMGT]?)(?P<unit>Hz|H|F|m|A|Ohm|ohm|Ω|s)?\s*$"
)


def parse_quantity(value, unit):
    """Convert ``value`` to SI given the expected base ``unit``.

    Parameters
    ----------
    value : float, int or str
        A bare number is taken to be in SI units already. A string may carry
        an SI prefix and must carry ``unit`` when a prefix is present.
    unit : str
        Expected base unit, e.g. ``"H"`` or ``"Hz"``.

    Returns
    -------
    float
    """
    if unit not in _BASE_UNITS:
        raise ValueError(f"unknown base unit {unit!r}")
    if isinstance(value, bool):
        raise ValueError(f"expected a quantity in {unit}, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    match = _QUANTITY.match(str(value))
    if match is None:
        raise ValueError(f"cannot parse {value!r} as a quantity in {unit}")
    num = float(match.group("num"))
    prefix = match.group("prefix")
    got_unit = match.group("unit")
    if got_unit is None:
        # "1670p" is ambiguous enough to reject; "1670" is fine
        if prefix == "m" and unit == "m":
            return num
        if prefix:
            raise ValueError(f"{value!r}: prefix without unit")
        return num
    if got_unit in ("Ohm", "ohm", "Ω"):
        got_unit = "Ohm"
    want = "Ohm" if unit in ("Ohm", "ohm", "Ω") else unit
    if got_unit != want:
        raise ValueError(f"{value!r}: expected unit {unit}, got {got_unit}")
    return num * _PREFIX[prefix]


def quantity_in(value, unit, scale):
    """Parse ``value`` where bare numbers are expressed in ``scale`` x SI.

    ``quantity_in(1670, "H", 1e-12)`` and ``quantity_in("1670pH", "H", 1e-12)``
    both return ``1.67e-9``.
    """
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value) * scale
    text = str(value).strip()
    try:
        return float(text) * scale
    except ValueError:
        return parse_quantity(text, unit)
