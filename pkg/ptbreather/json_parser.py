from typing import Any
from json import load as json_load

_MISSING = object()


class JsonParser:

    def __init__(self, config_path: str):
        """The init method

        Arguments:
            config_path (str) -- The JSON file path
        """
        self._config_path = None
        self._data = {}
        self.load_config(config_path)

    def load_config(self, config_path: str) -> None:
        """Load the JSON file

        Arguments:
            config_path (str) -- The JSON file path

        Raises:
            ValueError -- The root of the document is not an object.
        """
        self._config_path = config_path
        self._data = self._read_json_file(self._config_path)

        if not isinstance(self._data, dict):
            raise ValueError(f'The root of {config_path} must be a JSON object')

    @staticmethod
    def _read_json_file(file_path: str) -> Any:
        """Read the json file

        Arguments:
            file_path (str) -- The JSON file path
        """
        with open(file_path, encoding='utf-8') as file:
            return json_load(file)

    def data(self) -> dict:
        """Get the whole loaded document

        Returns:
            dict
        """
        return self._data

    def get(self, key: str, default_value: Any = None) -> Any:
        """Get the variable from the loaded document

        Arguments:
            key (str) -- The dotted key

        Keyword Arguments:
            default_value (Any) -- The default value (default None)
        """
        value = self._walk_into_data(self._data, key)
        return default_value if value is _MISSING else value

    def _walk_into_data(self, data: Any, key: str, walk_depth: int = 0) -> Any:
        """Walk into the nested data

        Arguments:
            data (Any) -- The data source
            key (str) -- The nested key separated by dots

        Keyword Arguments:
            walk_depth (int) -- The current walking depth (default 0)

        Returns:
            Any
        """
        if walk_depth >= 10:
            raise Exception('The maximum walking depth is exceeded')

        splitted_key = key.split('.')
        target_key = splitted_key.pop(0)

        if not isinstance(data, dict) or target_key not in data:
            return _MISSING

        if splitted_key:
            return self._walk_into_data(data[target_key], '.'.join(splitted_key), walk_depth + 1)

        return data[target_key]
