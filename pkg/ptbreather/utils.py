from typing import Any, Union, Dict
from os import getenv
from ptbreather.translator import CatalogCollection


def env(key: str, default_value: Any = None) -> Any:
    """Get the variable from the environment

    Arguments:
        key (str) -- The specific key

    Keyword Arguments:
        default_value (Any) -- The default value (default None)
    """
    return getenv(key, default_value)


def trans(key: str, attributes: Union[Dict, None] = None) -> str:
    """Look a message up in the catalog.

    Arguments:
        key (str) -- The key path, language first ('en.lattice.blow_up')

    Keyword Arguments:
        attributes (Union[Dict, None]) -- The placeholder values (default None)

    Returns:
        str
    """
    return CatalogCollection.get_instance().get(key=key, attributes=attributes)
