"""Parameter sweeps over (d, T, b) and their delimited output.

A sweep evaluates all three strategies on a grid and writes one CSV row per
point.  The coherent-probe value is independent of d, so it is computed
once per (T, b) pair and replicated; rows are emitted in deterministic
(T, b, d) order regardless of how the work was scheduled.
"""

from __future__ import annotations

import concurrent.futures
import csv
import io
import sys
from dataclasses import dataclass, field, replace

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .fock import Cutoff
from .qfi import Convention, QfiResult
from . import strategies
from .strategies import ChannelParams

CSV_HEADER = "d,T,b,iq1,iq2,iq3,iq1_boxed,iq2_boxed,ratio_2_over_3,cutoff_used,converged,convention"

DEFAULT_D_VALUES = tuple(range(2, 201, 2))
DEFAULT_T_VALUES = (1e-1, 1e-2, 1e-3)
DEFAULT_B_VALUES = (1e-4,)


@dataclass(frozen=True)
class SweepSpec:
    """Grid of channel parameters plus the numerical controls of a sweep."""

    d_values: tuple[int, ...] = DEFAULT_D_VALUES
    T_values: tuple[float, ...] = DEFAULT_T_VALUES
    b_values: tuple[float, ...] = DEFAULT_B_VALUES
    convention: Convention = Convention.PAPER
    cutoff_start: Cutoff = Cutoff(24)
    rel_tol: float = 1e-8
    support_tol: float = 1e-12
    eps_schedule: tuple[float, ...] = (4e-2, 2e-2, 1e-2)
    seed: int = 20230817
    max_cutoff: int = 48

    def __post_init__(self):
        if not self.d_values or not self.T_values or not self.b_values:
            raise ValueError("every sweep axis needs at least one value")
        if any(int(d) != d or d < 2 or d % 2 for d in self.d_values):
            raise ValueError("mode counts must be even integers >= 2")
        if any(not 0.0 < t <= 1.0 for t in self.T_values):
            raise ValueError("transmissivities must lie in (0, 1]")
        if any(b < 0.0 for b in self.b_values):
            raise ValueError("noise values must be >= 0")
        if self.rel_tol <= 0.0:
            raise ValueError("rel_tol must be positive")


@dataclass(frozen=True)
class SweepRow:
    """One grid point: all strategy values in the row's stated convention."""

    d: int
    T: float
    b: float
    iq1: float
    iq2: float
    iq3: float
    iq1_boxed: float
    iq2_boxed: float
    ratio_2_over_3: float
    cutoff_used: int
    converged: bool
    convention: str
    error: str | None = None


def _axis_values(table: dict, key: str, default: tuple, as_int: bool = False):
    section = table.get(key)
    if section is None:
        return default
    if "values" in section:
        vals = section["values"]
    elif {"start", "stop", "step"} <= section.keys():
        vals = list(range(int(section["start"]), int(section["stop"]) + 1,
                          int(section["step"])))
    else:
        raise ValueError(f"section [{key}] needs either 'values' or start/stop/step")
    return tuple(int(v) if as_int else float(v) for v in vals)


def load_spec(path: str) -> SweepSpec:
    """Read a sweep specification from a TOML config file.

    Recognised sections: [modes], [transmissivity], [noise] (each with a
    'values' list, or start/stop/step for [modes]) and [numerics] with keys
    convention, cutoff_start, max_cutoff, rel_tol, support_tol,
    eps_schedule and seed.  Missing pieces fall back to the defaults.
    """
    with open(path, "rb") as fh:
        table = tomllib.load(fh)
    numerics = table.get("numerics", {})
    spec = SweepSpec(
        d_values=_axis_values(table, "modes", DEFAULT_D_VALUES, as_int=True),
        T_values=_axis_values(table, "transmissivity", DEFAULT_T_VALUES),
        b_values=_axis_values(table, "noise", DEFAULT_B_VALUES),
        convention=Convention.parse(numerics.get("convention", "paper")),
        cutoff_start=Cutoff(int(numerics.get("cutoff_start", 24))),
        rel_tol=float(numerics.get("rel_tol", 1e-8)),
        support_tol=float(numerics.get("support_tol", 1e-12)),
        eps_schedule=tuple(float(e) for e in numerics.get("eps_schedule",
                                                          (4e-2, 2e-2, 1e-2))),
        seed=int(numerics.get("seed", 20230817)),
        max_cutoff=int(numerics.get("max_cutoff", 48)),
    )
    return spec


def _case3_for_pair(spec: SweepSpec, t: float, b: float) -> QfiResult:
    params = ChannelParams(t, b, spec.d_values[0])
    return strategies.case3_qfi(
        params, cutoff=spec.cutoff_start, convention=spec.convention,
        support_tol=spec.support_tol, rel_tol=spec.rel_tol, max_n=spec.max_cutoff)


def run_sweep(spec: SweepSpec, jobs: int = 1) -> list[SweepRow]:
    """Evaluate the grid; one row per point, deterministic (T, b, d) order.

    The coherent-probe value does not depend on d, so it is evaluated once
    per (T, b) pair, optionally across `jobs` worker threads.  A failure at
    one grid point is captured in that row's error field instead of
    aborting the sweep.
    """
    pairs = [(t, b) for t in spec.T_values for b in spec.b_values]
    case3_results: dict[tuple[float, float], QfiResult | Exception] = {}
    if jobs > 1 and len(pairs) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {pair: pool.submit(_case3_for_pair, spec, *pair) for pair in pairs}
        for pair, fut in futures.items():
            try:
                case3_results[pair] = fut.result()
            except Exception as exc:  # recorded per-row below
                case3_results[pair] = exc
    else:
        for pair in pairs:
            try:
                case3_results[pair] = _case3_for_pair(spec, *pair)
            except Exception as exc:
                case3_results[pair] = exc

    conv_name = spec.convention.value
    rows = []
    for t in spec.T_values:
        for b in spec.b_values:
            case3 = case3_results[(t, b)]
            for d in spec.d_values:
                try:
                    if isinstance(case3, Exception):
                        raise case3
                    params = ChannelParams(t, b, d)
                    iq1 = strategies.case1_closed(params, spec.convention).value
                    iq2 = strategies.case2_closed(params, spec.convention).value
                    boxed_scale = 2.0 if spec.convention is Convention.STANDARD else 1.0
                    rows.append(SweepRow(
                        d=d, T=t, b=b, iq1=iq1, iq2=iq2, iq3=case3.value,
                        iq1_boxed=boxed_scale * strategies.case1_boxed(params),
                        iq2_boxed=boxed_scale * strategies.case2_boxed(params),
                        ratio_2_over_3=iq2 / case3.value if case3.value > 0 else float("nan"),
                        cutoff_used=case3.cutoff_used or spec.cutoff_start.n_max,
                        converged=case3.converged, convention=conv_name))
                except Exception as exc:
                    rows.append(SweepRow(
                        d=d, T=t, b=b, iq1=float("nan"), iq2=float("nan"),
                        iq3=float("nan"), iq1_boxed=float("nan"),
                        iq2_boxed=float("nan"), ratio_2_over_3=float("nan"),
                        cutoff_used=0, converged=False, convention=conv_name,
                        error=f"{type(exc).__name__}: {exc}"))
    return rows


def _fmt(x: float) -> str:
    return repr(float(x))


def format_csv(rows: list[SweepRow]) -> str:
    """Render clean rows as CSV text; floats in shortest round-trip decimal."""
    lines = [CSV_HEADER]
    for row in rows:
        if row.error is not None:
            continue
        lines.append(",".join([
            str(row.d), _fmt(row.T), _fmt(row.b), _fmt(row.iq1), _fmt(row.iq2),
            _fmt(row.iq3), _fmt(row.iq1_boxed), _fmt(row.iq2_boxed),
            _fmt(row.ratio_2_over_3), str(row.cutoff_used),
            "true" if row.converged else "false", row.convention]))
    return "\n".join(lines) + "\n"


def emit_csv(rows: list[SweepRow], path: str) -> None:
    """Write the CSV file (UTF-8, bare newlines); error rows are skipped."""
    text = format_csv(rows)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def parse_csv(path_or_text: str, from_text: bool = False) -> list[SweepRow]:
    """Read a sweep CSV back into rows; inverse of emit_csv for clean rows."""
    stream = io.StringIO(path_or_text) if from_text else open(path_or_text,
                                                              encoding="utf-8", newline="")
    with stream:
        reader = csv.DictReader(stream)
        expected = CSV_HEADER.split(",")
        if reader.fieldnames != expected:
            raise ValueError(f"unexpected CSV header: {reader.fieldnames}")
        rows = []
        for rec in reader:
            rows.append(SweepRow(
                d=int(rec["d"]), T=float(rec["T"]), b=float(rec["b"]),
                iq1=float(rec["iq1"]), iq2=float(rec["iq2"]), iq3=float(rec["iq3"]),
                iq1_boxed=float(rec["iq1_boxed"]), iq2_boxed=float(rec["iq2_boxed"]),
                ratio_2_over_3=float(rec["ratio_2_over_3"]),
                cutoff_used=int(rec["cutoff_used"]),
                converged=rec["converged"] == "true",
                convention=rec["convention"]))
    return rows


@dataclass(frozen=True)
class CrossoverRecord:
    """Smallest even d at which the entangled strategy overtakes the coherent one."""

    T: float
    b: float
    d_star: int | None
    holds_beyond: bool    # iq2 > iq3 for every grid d >= d_star
    ratio_at_max_d: float


def crossover_report(rows: list[SweepRow]) -> list[CrossoverRecord]:
    """Per (T, b) pair, locate and validate the iq2 > iq3 crossover."""
    groups: dict[tuple[float, float], list[SweepRow]] = {}
    for row in rows:
        if row.error is None:
            groups.setdefault((row.T, row.b), []).append(row)
    records = []
    for (t, b), grp in groups.items():
        grp = sorted(grp, key=lambda r: r.d)
        above = [r.d for r in grp if r.iq2 > r.iq3]
        d_star = above[0] if above else None
        holds = d_star is not None and all(r.iq2 > r.iq3 for r in grp if r.d >= d_star)
        records.append(CrossoverRecord(T=t, b=b, d_star=d_star, holds_beyond=holds,
                                       ratio_at_max_d=grp[-1].ratio_2_over_3))
    return records
