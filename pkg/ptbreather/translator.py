from os.path import join as join_path
from typing import Union, Dict
from ptbreather.json_parser import JsonParser
from ptbreather import __path__ as module_base_path


class MessageCatalog:

    def __init__(self, catalog_file: str):
        """The initialize method

        Arguments:
            catalog_file (str) -- The message catalog path.
        """
        self._messages = JsonParser(catalog_file)

    def get(self, key: str, attributes: Union[Dict, None] = None) -> str:
        """Get the message of a key with the placeholders filled in

        Arguments:
            key (str) -- The dotted message key

        Keyword Arguments:
            attributes (Union[Dict, None]) -- The placeholder values (default None)

        Returns:
            str
        """
        message = self._messages.get(key, key)

        if attributes:
            # longest first, names may prefix each other
            for _attribute in sorted(attributes, key=len, reverse=True):
                message = message.replace(f':{_attribute}', str(attributes[_attribute]))

        return message


class CatalogCollection:

    _instance = None

    def __init__(self):

        if CatalogCollection._instance is not None:
            raise Exception('The class is a singleton')

        else:
            CatalogCollection._instance = self

        self._data = {}

    @staticmethod
    def get_instance():
        if CatalogCollection._instance is None:
            CatalogCollection()

        return CatalogCollection._instance

    def get(self, key: str, attributes: Union[Dict, None] = None) -> str:
        """Get the message of a language-prefixed key, e.g. 'en.lattice.blow_up'

        Arguments:
            key (str) -- The key

        Keyword Arguments:
            attributes (Union[Dict, None]) -- The placeholder values (default None)

        Returns:
            str
        """
        key = key.split('.')
        language = key.pop(0)
        key = '.'.join(key)

        catalog = self._data.get(language)

        if not catalog:
            catalog = self._load_catalog(language)

        return catalog.get(key, attributes)

    def _load_catalog(self, language: str) -> MessageCatalog:
        """Load the catalog of a language

        Arguments:
            language (str) -- The catalog file name.

        Return:
            MessageCatalog
        """
        catalog = MessageCatalog(join_path(module_base_path[0], 'languages', f'{language}.json'))
        self._data[language] = catalog
        return catalog
