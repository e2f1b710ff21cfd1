import math

from ..errors import ValidationError


def _is_number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def check_number(name, value):
    if not _is_number(value) or not math.isfinite(value):
        raise ValidationError(
            "Attribute '{}' has to be a finite number, not {}.".format(
                name, repr(value)
            )
        )
    return value


def check_positive(name, value):
    check_number(name, value)
    if value <= 0:
        raise ValidationError(
            "Attribute '{}' has to be positive, not {}.".format(name, repr(value))
        )
    return value


def check_nonnegative(name, value):
    check_number(name, value)
    if value < 0:
        raise ValidationError(
            "Attribute '{}' has to be nonnegative, not {}.".format(name, repr(value))
        )
    return value


def check_int(name, value, minimum=None):
    if not isinstance(value, int) or isinstance(value, bool):
        raise ValidationError(
            "Attribute '{}' has to be an integer, not {}.".format(
                name, repr(type(value))
            )
        )
    if minimum is not None and value < minimum:
        raise ValidationError(
            "Attribute '{}' has to be at least {}, not {}.".format(
                name, minimum, value
            )
        )
    return value


def check_choice(name, value, choices):
    if value not in choices:
        raise ValidationError(
            "Attribute '{}' has to be one of {}, not {}.".format(
                name, choices, repr(value)
            )
        )
    return value
