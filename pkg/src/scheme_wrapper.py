from typing import Union

from base_scheme import BaseScheme, SchemeConfig
from l_scheme import LScheme
from m_scheme import MScheme, NewtonScheme


def create_scheme(config: Union[SchemeConfig, dict]) -> BaseScheme:
    if isinstance(config, dict):
        config = SchemeConfig(**config)
    scheme_type = config.type

    if scheme_type == "l":
        return LScheme(config)
    elif scheme_type == "m":
        return MScheme(config)
    elif scheme_type == "newton":
        return NewtonScheme(config)
    else:
        raise ValueError(f"Unsupported scheme type: {scheme_type}")
