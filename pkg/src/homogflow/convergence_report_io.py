"""Deterministic text serialization of convergence reports.

Column order is frozen (documented in the README); floats are written with
``repr`` so identical runs produce bit-identical files.
"""

from __future__ import annotations

CSV_COLUMNS = (
    "eps", "weak_metric", "corrector_metric",
    "func_const", "func_sine", "func_bubble",
    "grad_u_sq", "eps2_grad_v_sq", "jump_sq", "h_eps_norm",
    "rate_weak", "rate_corrector", "fingerprint",
)


def _num(x) -> str:
    return repr(float(x))


def format_csv(report) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for k, row in enumerate(report.rows):
        rate_w = _num(report.weak_rates[k - 1]) if k > 0 else ""
        rate_c = _num(report.corrector_rates[k - 1]) if k > 0 else ""
        cells = [
            _num(row.eps), _num(row.weak_metric), _num(row.corrector_metric),
            _num(row.functional_metrics[0]), _num(row.functional_metrics[1]),
            _num(row.functional_metrics[2]),
            _num(row.grad_u_sq), _num(row.eps2_grad_v_sq), _num(row.jump_sq),
            _num(row.h_eps_norm), rate_w, rate_c, report.fingerprint,
        ]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def format_dat(report) -> str:
    """gnuplot-friendly whitespace table for log-log rate plots."""
    lines = ["# eps weak_metric corrector_metric h_eps_norm"]
    for row in report.rows:
        lines.append(" ".join([
            _num(row.eps), _num(row.weak_metric),
            _num(row.corrector_metric), _num(row.h_eps_norm),
        ]))
    return "\n".join(lines) + "\n"
