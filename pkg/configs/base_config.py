import dataclasses
from typing import Any, Callable, Dict, List, Mapping, Type, TypeVar

import jsons

from configs.config_helpers import ConfigHelpers
from configs.errors import UnknownConfigKeyError


T = TypeVar('T', bound='Config')


class Config(jsons.JsonSerializable):
    """Base for dataclass configs.

    Subclasses are dataclasses whose fields default to ``None``. ``__post_init__`` fills
    ``None`` fields from ``__default_values__``, types raw values through ``__coercers__``,
    null-checks ``__mandatory_fields__`` and finally calls ``validate``.
    """
    __default_values__: Dict[str, Any] = {}

    __mandatory_fields__: List[str] = []

    __coercers__: Dict[str, Callable[[Any, str], Any]] = {}

    def __post_init__(self):
        # Default fields check
        for field, default in self.__default_values__.items():
            self.__setattr__(
                field,
                ConfigHelpers.set_default_value(self.__getattribute__(field), default)
            )

        for field, coerce in self.__coercers__.items():
            value = self.__getattribute__(field)
            if value is not None:
                self.__setattr__(field, coerce(value, field))

        # Mandatory fields check
        for field in self.__mandatory_fields__:
            ConfigHelpers.null_field_check(field, self.__getattribute__(field))

        self.validate()

    def validate(self) -> None:
        """Raise a ``ConfigError`` when field values are inconsistent."""

    @classmethod
    def field_names(cls) -> List[str]:
        return [field.name for field in dataclasses.fields(cls)]

    @classmethod
    def from_mapping(cls: Type[T], mapping: Mapping[str, Any]) -> T:
        """Build a config from raw values, rejecting keys that are not fields.

        :param mapping: field name to raw (possibly string) value
        :return: the config
        """
        known = set(cls.field_names())
        unknown = sorted(key for key in mapping if key not in known)
        if unknown:
            raise UnknownConfigKeyError(f"Unknown config keys: {', '.join(unknown)}")
        return cls(**dict(mapping))

    def to_dict(self) -> Dict[str, Any]:
        return jsons.dump(self, strip_privates=True, strip_properties=True)
