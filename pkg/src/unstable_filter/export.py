"""Deterministic CSV / JSON writers.

Floats are written with 9 significant digits, '.' decimal, comma delimiter and
LF line endings, so identical inputs give byte-identical files.
"""
import csv
import json
import math

import numpy as np

FLOAT_FORMAT = "%.8e"


def budget_columns(budget):
    """Standard column set for a NoiseBudget."""
    cols = {
        "frequency_Hz": budget.frequency_hz,
        "shot_asd": budget.shot_asd,
        "thermal_asd": budget.thermal_asd,
        "total_asd": budget.total_asd,
        "signal_tf_re": np.real(budget.signal_tf),
        "signal_tf_im": np.imag(budget.signal_tf),
    }
    if budget.radiation_pressure_asd is not None:
        cols["radiation_pressure_asd"] = budget.radiation_pressure_asd
    return cols


def _cell(v):
    if isinstance(v, str):
        return v
    return FLOAT_FORMAT % float(v)


def write_csv(path, columns):
    names = list(columns)
    data = [np.asarray(columns[n]) if not isinstance(columns[n], str) else columns[n]
            for n in names]
    nrows = max(len(d) for d in data if not isinstance(d, str))
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for i in range(nrows):
            w.writerow([_cell(d if isinstance(d, str) else d[i]) for d in data])


def jsonable(obj):
    """Recursively convert numpy / complex values to plain JSON types.

    Complex numbers become ``[re, im]``; non-finite floats become strings.
    """
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(obj.real), jsonable(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    return obj


def dumps(obj):
    return json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj):
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(dumps(obj))


def write_table(path_stem, columns, fmt):
    """Write ``columns`` as ``<stem>.csv`` or ``<stem>.json``; return the path."""
    if fmt == "csv":
        path = path_stem + ".csv"
        write_csv(path, columns)
    else:
        path = path_stem + ".json"
        write_json(path, {k: (v if isinstance(v, str) else np.asarray(v))
                          for k, v in columns.items()})
    return path
