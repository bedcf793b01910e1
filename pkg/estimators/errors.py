class EstimatorError(Exception):
    pass

class InvalidSparsityError(EstimatorError):
    pass

class InvalidSupportError(EstimatorError):
    pass
