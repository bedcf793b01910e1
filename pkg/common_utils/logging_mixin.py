import logging
import sys
from typing import Optional

import ulid

LOG_FORMAT = "%(asctime)s %(levelname)s [%(run_id)s] %(name)s: %(message)s"


class LoggingMixin:
    """
    Convenience super-class to have a logger configured with the class name.
    """
    def __init__(self, context=None):
        self._set_context(context)

    @property
    def logger(self):
        return self.log

    @property
    def log(self):
        try:
            return self._log
        except AttributeError:
            self._log = logging.getLogger((
                self.__class__.__module__ + "." + self.__class__.__name__
            ))
            return self._log

    def _set_context(self, context):
        if context is not None:
            set_context(self.log, context)


class RunContextFilter(logging.Filter):
    """Stamps every record passing through a handler with the current run id."""

    def __init__(self, run_id: str = "-"):
        super().__init__()
        self.run_id = run_id

    def set_context(self, value):
        self.run_id = str(value)

    def filter(self, record):
        record.run_id = self.run_id
        return True


class ContextHandler(logging.StreamHandler):
    """Stream handler that forwards ``set_context`` to its run-context filter."""

    def __init__(self, stream=None):
        super().__init__(stream)
        self.context_filter = RunContextFilter()
        self.addFilter(self.context_filter)

    def set_context(self, value):
        self.context_filter.set_context(value)


def set_context(logger, value):
    """
    Walks the tree of loggers and tries to set the context for each handler
    :param logger: logger
    :param value: value to set
    """
    _logger = logger
    while _logger:
        for handler in _logger.handlers:
            try:
                handler.set_context(value)
            except AttributeError:
                # Not all handlers need to have context passed in so we ignore
                # the error when handlers do not have set_context defined.
                pass
        if _logger.propagate is True:
            _logger = _logger.parent
        else:
            _logger = None


def new_run_id() -> str:
    """Return a fresh, sortable run identifier."""
    return ulid.new().str


def configure_logging(verbosity: int = 0, stream=None, run_id: Optional[str] = None) -> str:
    """Install a single stderr handler on the root logger.

    :param verbosity: -1 quiet (WARNING), 0 INFO, 1 or more DEBUG
    :param stream: target stream, defaults to stderr
    :param run_id: run identifier to stamp on records, a new ULID when omitted
    :return: the run id in use
    """
    if verbosity < 0:
        level = logging.WARNING
    elif verbosity == 0:
        level = logging.INFO
    else:
        level = logging.DEBUG

    root = logging.getLogger()
    for handler in list(root.handlers):
        if isinstance(handler, ContextHandler):
            root.removeHandler(handler)

    handler = ContextHandler(stream if stream is not None else sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(level)

    run_id = run_id or new_run_id()
    set_context(root, run_id)
    return run_id
