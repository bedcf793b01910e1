class SimulationError(Exception):
    pass

class InvalidChannelError(SimulationError):
    pass

class UnknownAlgorithmError(SimulationError):
    pass
