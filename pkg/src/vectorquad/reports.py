"""File writers for telemetry, summaries, envelopes and ROA tables."""
import csv
import io
import json
from pathlib import Path
from typing import List, Sequence

import numpy as np

from .sim import ROA_COLUMNS, Telemetry
from .so3 import continuous_quaternions

FLOAT_FMT = "%.17g"


def _axes(name: str, n: int = 3) -> List[str]:
    return [f"{name}_{c}" for c in "xyz"] if n == 3 else [f"{name}_{i}" for i in range(1, n + 1)]


def _quat(name: str) -> List[str]:
    return [f"{name}_{c}" for c in "wxyz"]


TELEMETRY_COLUMNS = tuple(
    ["t"] + _axes("p") + _axes("v") + _quat("q") + _axes("w") + _axes("pd") + _quat("qd")
    + ["psi", "ep_norm"] + _axes("fd") + _axes("taud") + _axes("f") + _axes("tau")
    + _axes("alpha", 4) + _axes("beta", 4) + _axes("omega", 4) + ["sat_scale"]
)


def telemetry_table(tel: Telemetry) -> np.ndarray:
    """Telemetry as a 2-D array in ``TELEMETRY_COLUMNS`` order."""
    return np.column_stack([
        tel.t, tel.p, tel.v, continuous_quaternions(tel.R), tel.w, tel.pd,
        continuous_quaternions(tel.Rd), tel.psi, tel.ep_norm, tel.fd, tel.taud, tel.f, tel.tau,
        tel.alpha, tel.beta, tel.omega, tel.sat_scale,
    ])


def _write_text(path, text: str):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def write_telemetry_csv(path, tel: Telemetry):
    buf = io.StringIO()
    np.savetxt(buf, telemetry_table(tel), fmt=FLOAT_FMT, delimiter=",",
               header=",".join(TELEMETRY_COLUMNS), comments="")
    _write_text(path, buf.getvalue())


def write_json(path, doc):
    _write_text(path, json.dumps(doc, indent=2, sort_keys=False) + "\n")


def _fmt_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return FLOAT_FMT % float(v)


def write_roa_csv(path, rows: Sequence[dict], columns: Sequence[str] = ROA_COLUMNS):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt_cell(r[c]) for c in columns])
    _write_text(path, buf.getvalue())
