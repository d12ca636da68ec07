"""Deterministic artifact writers: estimate CSVs, report CSV/JSON, plot data.

Floats are written with repr (shortest round-trip), so identical runs produce
byte-identical files.
"""

import json
import math


def _fmt(v):
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def write_estimates_csv(path, rows, seed):
    """McEstimates as CSV with columns name,value,stderr,n,seed."""
    with open(path, "w", newline="") as fh:
        fh.write("name,value,stderr,n,seed\n")
        for name, est in rows:
            fh.write(f"{name},{_fmt(est.value)},{_fmt(est.stderr)},{est.n},{seed}\n")


def _param_string(parameters):
    return ";".join(f"{k}={_fmt(v)}" for k, v in sorted(parameters.items()))


def write_reports_csv(path, reports, seed):
    """Inequality reports, one row per (check, parameter point)."""
    with open(path, "w", newline="") as fh:
        fh.write("name,params,lhs,lhs_se,rhs,rhs_se,margin,margin_se,verdict,seed\n")
        for r in reports:
            fh.write(
                ",".join(
                    [
                        r.name,
                        '"' + _param_string(r.parameters) + '"',
                        _fmt(r.lhs.value),
                        _fmt(r.lhs.stderr),
                        _fmt(r.rhs.value),
                        _fmt(r.rhs.stderr),
                        _fmt(r.margin),
                        _fmt(r.margin_stderr),
                        r.verdict,
                        str(seed),
                    ]
                )
                + "\n"
            )


def summarize(reports):
    """Pass/fail/inconclusive counts per check name."""
    summary = {}
    for r in reports:
        entry = summary.setdefault(r.name, {"pass": 0, "fail": 0, "inconclusive": 0})
        entry[r.verdict] += 1
    return summary


def write_summary_json(path, reports, manifest_info=None):
    payload = {
        "checks": summarize(reports),
        "total": len(reports),
        "failures": sum(1 for r in reports if r.verdict == "fail"),
        "inconclusive": sum(1 for r in reports if r.verdict == "inconclusive"),
    }
    if manifest_info:
        payload["manifest"] = manifest_info
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_plot_data(path, xs, ys, header=""):
    """Two-column whitespace-separated text, gnuplot-style."""
    with open(path, "w") as fh:
        if header:
            fh.write(f"# {header}\n")
        for x, y in zip(xs, ys):
            fh.write(f"{_fmt(float(x))} {_fmt(float(y))}\n")
