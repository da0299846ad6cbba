"""Tradeoff curves over ``M in [0, N]`` and their CSV/JSON serialization."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Tuple

from .converse import (
    ave_converse_curve,
    best_peak_converse_curve,
    corner_envelope,
    thm4_curve,
)
from .envelope import PiecewiseLinearCurve
from .rates import RatePoint, SystemParams, average_rates_integer, memory_at, r_u_integer

CSV_COLUMNS = ["curve_name", "M_num", "M_den", "R_num", "R_den", "M_decimal", "R_decimal"]

CURVE_NAMES = (
    "achievable-peak",
    "achievable-average",
    "converse-thm2-envelope",
    "converse-thm4",
    "best-converse",
)


def achievable_peak_curve(n_files: int, n_users: int) -> PiecewiseLinearCurve:
    params = SystemParams(n_files, n_users)
    return PiecewiseLinearCurve.through(
        RatePoint(memory_at(n_files, n_users, r), r_u_integer(params, r)) for r in range(n_users + 1)
    )


def achievable_average_curve(n_files: int, n_users: int) -> PiecewiseLinearCurve:
    rates = average_rates_integer(n_files, n_users)
    return PiecewiseLinearCurve.through(
        RatePoint(memory_at(n_files, n_users, r), rates[r]) for r in range(n_users + 1)
    )


@dataclass
class CurveBundle:
    label: str
    n_files: int
    n_users: int
    curves: Dict[str, PiecewiseLinearCurve] = field(default_factory=dict)

    def rows(self) -> List[Tuple[str, Fraction, Fraction]]:
        return [
            (name, p.memory, p.rate)
            for name, curve in self.curves.items()
            for p in curve.breakpoints
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for name, m, r in self.rows():
            w.writerow([name, m.numerator, m.denominator, r.numerator, r.denominator,
                        _decimal(m), _decimal(r)])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "label": self.label,
            "params": {"N": self.n_files, "K": self.n_users},
            "columns": CSV_COLUMNS,
            "curves": [
                {
                    "curve_name": name,
                    "breakpoints": [
                        {
                            "M_num": p.memory.numerator, "M_den": p.memory.denominator,
                            "R_num": p.rate.numerator, "R_den": p.rate.denominator,
                            "M_decimal": _decimal(p.memory), "R_decimal": _decimal(p.rate),
                        }
                        for p in curve.breakpoints
                    ],
                }
                for name, curve in self.curves.items()
            ],
        }
        return json.dumps(doc, indent=2) + "\n"


def _decimal(x: Fraction) -> str:
    return f"{float(x):.12g}"


def tradeoff_bundle(n_files: int, n_users: int, label: str | None = None) -> CurveBundle:
    j = min(n_files, n_users)
    bundle = CurveBundle(label or f"K={n_users}, N={n_files}", n_files, n_users)
    bundle.curves["achievable-peak"] = achievable_peak_curve(n_files, n_users)
    bundle.curves["achievable-average"] = achievable_average_curve(n_files, n_users)
    bundle.curves["converse-thm2-envelope"] = corner_envelope(n_files, j)
    bundle.curves["converse-thm4"] = thm4_curve(n_files, n_users)
    bundle.curves["best-converse"] = best_peak_converse_curve(n_files, n_users)
    return bundle


def _curves_from_rows(rows) -> Dict[str, PiecewiseLinearCurve]:
    pts: Dict[str, List[RatePoint]] = {}
    for name, mn, md, rn, rd in rows:
        pts.setdefault(name, []).append(
            RatePoint(Fraction(int(mn), int(md)), Fraction(int(rn), int(rd))))
    return {name: PiecewiseLinearCurve(tuple(p)) for name, p in pts.items()}


def read_csv(text: str) -> Dict[str, PiecewiseLinearCurve]:
    reader = csv.DictReader(io.StringIO(text))
    return _curves_from_rows(
        (row["curve_name"], row["M_num"], row["M_den"], row["R_num"], row["R_den"])
        for row in reader
    )


def read_json(text: str) -> CurveBundle:
    doc = json.loads(text)
    rows = [
        (c["curve_name"], b["M_num"], b["M_den"], b["R_num"], b["R_den"])
        for c in doc["curves"]
        for b in c["breakpoints"]
    ]
    return CurveBundle(doc["label"], doc["params"]["N"], doc["params"]["K"], _curves_from_rows(rows))
