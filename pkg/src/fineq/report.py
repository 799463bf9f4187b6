"""CSV / JSON output and log-log SVG figures.

defects.csv   experiment,k,defect,p,extra
rates.csv     experiment,slope,intercept,r2,verdict
report.json   both tables plus thresholds and notes, with a schema_version

Floats are written with 17 significant digits.  Every file is written to a
temporary sibling and renamed into place.  Figures are rendered from the
defects CSV alone, so `plot` on a saved CSV reproduces the run's figures
byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import re
import tempfile
from collections import OrderedDict
from pathlib import Path

import numpy as np

from .experiments import FLOOR, fit_rate
from .errors import InsufficientDataError, InputError

SCHEMA_VERSION = 1
DEFECT_HEADER = ("experiment", "k", "defect", "p", "extra")
RATE_HEADER = ("experiment", "slope", "intercept", "r2", "verdict")


def fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return f"{x:.17g}"


def _fmt_p(p) -> str:
    return "inf" if math.isinf(p) else f"{p:g}"


def atomic_write(path, data, mode: str = "w"):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        if isinstance(data, bytes):
            with os.fdopen(fd, mode + "b") as fh:
                fh.write(data)
        else:
            with os.fdopen(fd, mode, newline="") as fh:
                fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _extra(report, sample) -> str:
    items = [("exact", "1" if sample.exact else "0"),
             ("integrator", fmt(sample.integrator_error)),
             ("budget", fmt(max(FLOOR, sample.budget)))]
    for key, val in report.params.items():
        items.append((key, fmt(val) if isinstance(val, float) else str(val).replace(";", " ")))
    return ";".join(f"{k}={v}" for k, v in items)


def defects_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DEFECT_HEADER)
    for r in reports:
        for s in r.samples:
            w.writerow([r.name, s.k, fmt(s.defect), _fmt_p(r.p), _extra(r, s)])
    return buf.getvalue()


def rates_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RATE_HEADER)
    for r in reports:
        w.writerow([r.name, fmt(r.slope), fmt(r.intercept), fmt(r.r_squared), r.verdict])
    return buf.getvalue()


def report_json(reports, config=None) -> str:
    def th(t):
        return {k: getattr(t, k) for k in ("slope_max", "slope_min", "r2_min", "abs_max", "abs_min")
                if getattr(t, k) is not None}

    doc = OrderedDict()
    doc["schema_version"] = SCHEMA_VERSION
    if config is not None:
        doc["config"] = {"ks": list(config.ks), "seed": config.seed, "l_cap": config.l_cap,
                         "experiments": list(config.experiments),
                         "integrator": {"method": config.integrator.method, "tol": config.integrator.tol}}
    doc["reports"] = [
        OrderedDict(
            experiment=r.experiment,
            name=r.name,
            p=_fmt_p(r.p),
            params=_jsonable(r.params),
            thresholds=th(r.thresholds),
            samples=[{"k": s.k, "defect": float(fmt(s.defect)), "exact": s.exact,
                      "integrator_error": s.integrator_error} for s in r.samples],
            slope=r.slope,
            intercept=r.intercept,
            r2=r.r_squared,
            verdict=r.verdict,
            note=r.note,
        )
        for r in reports
    ]
    doc["summary"] = {v: sum(r.verdict == v for r in reports) for v in ("pass", "fail", "invalid")}
    return json.dumps(doc, indent=1, allow_nan=False, default=_json_default) + "\n"


def _jsonable(x):
    """Plain JSON data; non-finite floats become strings like the p column."""
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x) if math.isfinite(x) else fmt(x)
    if x is None or isinstance(x, str):
        return x
    return str(x)


def _json_default(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    raise TypeError(type(x))


def write_reports(reports, out_dir, config=None, plots: bool = True) -> dict:
    out = Path(out_dir)
    paths = {"defects": out / "defects.csv", "rates": out / "rates.csv", "json": out / "report.json"}
    text = defects_csv(reports)
    atomic_write(paths["defects"], text)
    atomic_write(paths["rates"], rates_csv(reports))
    atomic_write(paths["json"], report_json(reports, config))
    if plots:
        paths["plots"] = plot_csv_text(text, out / "plots")
    return paths


# ---------------------------------------------------------------- figures


def read_defects(text: str) -> list:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != DEFECT_HEADER:
        raise InputError(f"not a defects table (expected header {','.join(DEFECT_HEADER)})")
    out = []
    for row in rows[1:]:
        if len(row) != 5:
            raise InputError(f"malformed row {row!r}")
        extra = dict(item.split("=", 1) for item in row[4].split(";") if "=" in item)
        out.append({"experiment": row[0], "k": int(row[1]), "defect": float(row[2]),
                    "p": row[3], "exact": extra.get("exact") == "1"})
    return out


def _family(name: str) -> str:
    return name.split("[", 1)[0]


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_")


def plot_csv_text(text: str, plot_dir) -> list:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = read_defects(text)
    groups = OrderedDict()
    for row in rows:
        if row["p"] != "inf":
            continue
        groups.setdefault(_family(row["experiment"]), OrderedDict()).setdefault(row["experiment"], []).append(row)
    plot_dir = Path(plot_dir)
    written = []
    style = {"svg.hashsalt": "fineq", "svg.fonttype": "path", "font.size": 8, "figure.figsize": (6.4, 4.2)}
    with matplotlib.rc_context(style):
        for family, series in groups.items():
            fig, ax = plt.subplots()
            plotted = False
            for name, pts in series.items():
                ks = np.array([r["k"] for r in pts], dtype=float)
                ds = np.array([r["defect"] for r in pts])
                if len(set(ks)) < 2:
                    continue
                exact = np.array([r["exact"] or r["defect"] <= FLOOR for r in pts])
                label = name[len(family):] or name
                try:
                    slope, icpt, _ = fit_rate([(int(k), d) for k, d, e in zip(ks, ds, exact) if not e])
                    label += f"  slope {slope:.2f}"
                except InsufficientDataError:
                    slope = None
                    if exact.all():
                        label += "  exact"
                shown = np.where(exact, FLOOR, ds)
                (line,) = ax.loglog(ks, shown, marker="o", ms=3, lw=1, label=label)
                if exact.any():
                    ax.loglog(ks[exact], shown[exact], ls="none", marker="o", ms=5, mfc="none",
                              color=line.get_color())
                if slope is not None:
                    kk = np.array([ks.min(), ks.max()])
                    ax.loglog(kk, np.exp(icpt) * kk ** slope, ls=":", lw=0.8, color=line.get_color())
                plotted = True
            if not plotted:
                plt.close(fig)
                continue
            ax.set_xlabel("k")
            ax.set_ylabel("defect (exact samples drawn at the floor)")
            ax.set_title(family)
            ax.grid(True, which="both", lw=0.3, alpha=0.5)
            ax.legend(fontsize=6, loc="best")
            fig.tight_layout()
            buf = io.StringIO()
            fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
            plt.close(fig)
            path = plot_dir / f"{_safe(family)}.svg"
            atomic_write(path, buf.getvalue())
            written.append(path)
    return written


def plot_csv(csv_path, plot_dir=None) -> list:
    csv_path = Path(csv_path)
    try:
        text = csv_path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {csv_path}: {exc.strerror}") from None
    return plot_csv_text(text, plot_dir or csv_path.parent / "plots")
