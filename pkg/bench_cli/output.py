"""Result files: a ``#`` header block followed by CSV rows, or one JSON document."""
import contextlib
import csv
import json
import math
import sys
from typing import Any, Dict, Iterator, List, Optional, Sequence, TextIO

import jsons

from bench_cli import __version__

TOOLKIT_NAME = "sparse-channel-toolkit"

RESULT_COLUMNS = (
    "algorithm", "snr_db", "mse", "nmse", "crb_s", "crb_us", "mean_iterations", "failures", "wall_time_s",
)

FORMATS = ("csv", "json")


def render_value(value) -> str:
    """Render a cell; floats keep 17 significant digits so files round-trip exactly."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".17g")
    return str(value)


def header_block(command: str, config: Dict[str, Any], **extra) -> Dict[str, Any]:
    header = {
        "toolkit": f"{TOOLKIT_NAME} {__version__}",
        "command": command,
    }
    header.update(extra)
    header["config"] = config
    return header


@contextlib.contextmanager
def open_output(path: Optional[str]) -> Iterator[TextIO]:
    """Yield the declared output stream; ``None`` or ``-`` means stdout."""
    if path in (None, "-"):
        yield sys.stdout
        return
    with open(path, "w", encoding="utf-8", newline="") as stream:
        yield stream


def to_plain(obj) -> Any:
    return jsons.dump(obj, strip_privates=True, strip_properties=True)


def write_table(
        stream: TextIO,
        fmt: str,
        header: Dict[str, Any],
        columns: Sequence[str],
        rows: Sequence[Any],
        extras: Optional[Dict[str, Any]] = None,
) -> None:
    """Write rows (dataclasses or mappings) under a header block.

    :param stream: destination
    :param fmt: ``csv`` or ``json``
    :param header: run description; echoed as ``# key: value`` lines in CSV
    :param columns: CSV column order
    :param rows: records
    :param extras: additional JSON sections, summarised as header lines in CSV
    """
    extras = extras or {}
    if fmt == "json":
        document = {"header": header, "records": [to_plain(row) for row in rows]}
        document.update({key: to_plain(value) for key, value in extras.items()})
        json.dump(document, stream, indent=2, sort_keys=False, allow_nan=True)
        stream.write("\n")
        return

    for key, value in list(header.items()) + list(extras.items()):
        if not isinstance(value, str):
            value = json.dumps(to_plain(value), sort_keys=True, separators=(",", ":"))
        stream.write(f"# {key}: {value}\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([render_value(_cell(row, column)) for column in columns])


def _cell(row, column):
    if isinstance(row, dict):
        return row.get(column, "")
    return getattr(row, column)


def flagged_points(records: List[Any]) -> List[str]:
    return [f"{r.algorithm}@{render_value(r.snr_db)}" for r in records if r.flagged]
