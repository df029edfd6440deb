"""Tiny CSV writing helper shared by the export functions.

Floats are written with repr (shortest round-trip form), so exports are
deterministic and re-parseable without loss.
"""

import csv


def format_value(v):
    # cast first: repr of a numpy float64 is "np.float64(...)", not a number
    if isinstance(v, float):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
