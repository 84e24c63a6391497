from typing import Any, Tuple, Union


class JsonSchema:

    def __init__(self, data: Union[dict, None] = None):
        """The initialize method.

        Arguments:
            data {Union[dict, None]} -- The data input (default: {None})
        """
        self._data = data or {}

    def get_value_details(self, attribute: str, default_value: Any = None) -> Tuple[Any, bool]:
        """Get the value of a dotted attribute and whether it exists

        Arguments:
            attribute {str} -- e.g. 'params.omega'

        Keyword Arguments:
            default_value {Any}

        Returns:
            Tuple[Any, bool] -- The value and the existed flag.
        """
        data = self._data

        for key_holder in attribute.split('.'):

            if isinstance(data, dict) and key_holder in data:
                data = data[key_holder]

            elif isinstance(data, list) and self.is_integer(key_holder) and int(key_holder) < len(data):
                data = data[int(key_holder)]

            else:
                return default_value, False

        return data, True

    def dot(self) -> dict:
        """Flat the dictionary with dot

        Returns:
            dict
        """
        result = {}
        self._dot_walk(self._data, result, [])
        return result

    def _dot_walk(self, data: Union[list, dict], result: dict, key_path: list) -> None:
        """Flat the dictionary with dot

        Arguments:
            data {Union[list, dict]} -- The data input
            result {dict} -- The flattened output
            key_path {list} -- The key path
        """
        items = data.items() if isinstance(data, dict) else enumerate(data)

        for key, value in items:
            key_path.append(str(key))

            if isinstance(value, (dict, list)) and value:
                self._dot_walk(value, result, key_path)

            else:
                result['.'.join(key_path)] = value

            key_path.pop()

    @staticmethod
    def is_integer(value: Any) -> bool:
        """The is integer check

        Arguments:
            value (Any)

        Returns:
            bool
        """
        try:
            int(value)
            return True

        except ValueError as e:
            return False
