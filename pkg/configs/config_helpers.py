from typing import Dict, Iterable, List

import numpy as np

from configs.errors import NullArgumentError, InvalidConfigValueError


class ConfigHelpers:

    @staticmethod
    def set_default_value(passed_value, default_value):
        if passed_value is None:
            return default_value
        return passed_value

    @staticmethod
    def null_field_check(field_name, field_value):
        if field_value is None:
            raise NullArgumentError(f"Null value found for a non-null attribute: {field_name}")

    @staticmethod
    def boolify(value):
        if isinstance(value, bool):
            return value
        if isinstance(value, str):
            return value.strip().lower() not in {"false", "0", "no", "off"}
        return value

    @staticmethod
    def flatten(l):
        for el in l:
            if isinstance(el, Iterable) and not isinstance(el, (str, bytes)):
                yield from ConfigHelpers.flatten(el)
            else:
                yield el

    @staticmethod
    def parse_key_value_text(text: str, source: str = "<config>") -> Dict[str, str]:
        """Parse flat ``key = value`` text.

        Blank lines and everything after ``#`` are ignored. A repeated key keeps the last value.

        :param text: file contents
        :param source: name used in error messages
        :return: mapping of raw string values
        """
        values = {}
        for number, raw_line in enumerate(text.splitlines(), start=1):
            line = raw_line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidConfigValueError(f"{source}:{number}: expected 'key = value', got {raw_line!r}")
            key, value = line.split("=", 1)
            key = key.strip().replace("-", "_")
            if not key:
                raise InvalidConfigValueError(f"{source}:{number}: empty key")
            values[key] = value.strip()
        return values

    @staticmethod
    def parse_snr_range(value) -> List[float]:
        """Parse an SNR grid.

        Accepts ``"a:b:step"`` (inclusive of ``b``), a comma separated list, or an already
        parsed sequence of numbers.
        """
        if not isinstance(value, str):
            return [float(v) for v in ConfigHelpers.flatten([value])]
        text = value.strip()
        try:
            if ":" in text:
                parts = [float(p) for p in text.split(":")]
                if len(parts) != 3:
                    raise ValueError(text)
                start, stop, step = parts
                if step <= 0 or stop < start:
                    raise ValueError(text)
                count = int(np.floor((stop - start) / step + 1e-9)) + 1
                return [float(start + k * step) for k in range(count)]
            return [float(p) for p in text.split(",") if p.strip()]
        except ValueError:
            raise InvalidConfigValueError(f"Invalid SNR grid {value!r}; expected 'a:b:step' or a list")

    @staticmethod
    def parse_list(value) -> List[str]:
        if isinstance(value, str):
            return [p.strip().lower() for p in value.split(",") if p.strip()]
        return [str(p).strip().lower() for p in ConfigHelpers.flatten([value])]

    @staticmethod
    def to_int(value, field_name):
        try:
            if isinstance(value, bool):
                raise ValueError(value)
            if isinstance(value, str):
                value = value.strip()
            number = int(value)
            if isinstance(value, float) and number != value:
                raise ValueError(value)
            return number
        except (TypeError, ValueError):
            raise InvalidConfigValueError(f"{field_name} must be an integer, got {value!r}")

    @staticmethod
    def to_float(value, field_name):
        try:
            return float(value)
        except (TypeError, ValueError):
            raise InvalidConfigValueError(f"{field_name} must be a number, got {value!r}")
