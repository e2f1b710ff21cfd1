import re

import yaml


class NumberLoader(yaml.SafeLoader):
    """
    Safe loader that also reads exponent floats written without a dot or an
    exponent sign (`6e7`, `1.7e6`), which YAML 1.1 leaves as strings.
    """


NumberLoader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?[0-9][0-9_]*(?:\.[0-9_]*)?[eE][-+]?[0-9]+
        |[-+]?\.[0-9_]+[eE][-+]?[0-9]+)$""",
        re.X,
    ),
    list("-+0123456789."),
)


def load_yaml(stream):
    """`yaml.safe_load` with `NumberLoader`; `stream` is a file or a string."""
    return yaml.load(stream, Loader=NumberLoader)
