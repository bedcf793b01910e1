class TrellisError(Exception):
    pass

class InvalidPriorError(TrellisError):
    pass

class InvalidQuadraticError(TrellisError):
    pass

class NotBandedError(InvalidQuadraticError):
    pass

class OracleTooLargeError(TrellisError):
    pass
