class NumericsError(Exception):
    pass

class InvalidTrainingError(NumericsError):
    pass

class DimensionMismatchError(NumericsError):
    pass

class RankDeficientError(NumericsError):
    pass

class SingularGramError(RankDeficientError):
    pass
