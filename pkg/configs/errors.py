class ConfigError(Exception):
    pass

class NullArgumentError(ConfigError):
    pass

class UnknownConfigKeyError(ConfigError):
    pass

class InvalidConfigValueError(ConfigError):
    pass
