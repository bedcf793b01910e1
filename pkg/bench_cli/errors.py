class CliError(Exception):
    pass

class VerificationFailedError(CliError):
    pass
