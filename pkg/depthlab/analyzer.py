"""
Depth-gap profiles: for every scheduled prefix length and every weak level, how far the best weak
observer trails the strong side, read against the bound m(n)/n.
"""
from __future__ import annotations

import csv
import io
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Literal, Optional, Sequence, Tuple, Union, get_args

from depthlab.compressors import RegistryFamily, RegistrySpec, bennett_gap
from depthlab.core import (
    DEFAULT_CEILINGS,
    REPORT_DECIMALS,
    BoundSpec,
    Ceilings,
    GapRecord,
    ObserverFamily,
    PerformanceValue,
    make_gap_record,
)
from depthlab.errors import ConfigError, NotLosslessError
from depthlab.fst import FstFamily, TransducerSpec, check_il, enumerate_ilfsts, run
from depthlab.predictors import PERF_MODES, PredictorFamily
from depthlab.sequences import SequenceSpec, generate

logger = logging.getLogger(__name__)

FAMILY_NAMES = Literal["fst", "predictor", "registry"]
VALID_FAMILY_NAMES: Tuple[FAMILY_NAMES, ...] = get_args(FAMILY_NAMES)

STRONG_SIDES = Literal["same-family", "full-family"]
VALID_STRONG_SIDES: Tuple[STRONG_SIDES, ...] = get_args(STRONG_SIDES)

OBSERVER_FAMILIES: Dict[str, type] = {
    k.name: k for k in [FstFamily, PredictorFamily, RegistryFamily]
}

DEFAULT_REGISTRY = RegistrySpec.parse("identity,lz78,rle")
DEFAULT_SCHEDULE: Tuple[int, ...] = tuple(2**e for e in range(8, 13))

# scheduled lengths that must clear before a level counts as depth-indicated
INDICATION_COUNT = 3

Source = Union[SequenceSpec, str]


@dataclass(frozen=True)
class HierarchySpec:
    """
    Which observer family is compared against itself, and how

    Args:
        family (str): fst (levels = state budgets 1..K), predictor (markov orders 0..K) or
            registry (budgets 1..T)
        max_level (int): K; the registry family takes its top level from the registry instead
        strong_side (str): same-family compares level ℓ with the best of the levels above it,
            full-family compares every level with the top level
        l_max (int): Output bound of the fst family
        include_header (bool): Charge fst machines their serialized size
        registry (RegistrySpec): Codecs of the registry family
        perf_mode (str): capital or accuracy, for the predictor family
    """

    family: FAMILY_NAMES
    max_level: int = 1
    strong_side: STRONG_SIDES = "same-family"
    l_max: int = 1
    include_header: bool = False
    registry: RegistrySpec = field(default=DEFAULT_REGISTRY)
    perf_mode: PERF_MODES = "capital"

    def __post_init__(self):
        if self.family not in VALID_FAMILY_NAMES:
            raise ConfigError(
                f"The family must be one of {', '.join(VALID_FAMILY_NAMES)}, got {self.family!r}"
            )
        if self.strong_side not in VALID_STRONG_SIDES:
            raise ConfigError(
                f"The strong side must be one of {', '.join(VALID_STRONG_SIDES)}, got {self.strong_side!r}"
            )
        if self.family == "fst" and self.max_level < 1:
            raise ConfigError(f"The fst family needs a state budget of at least 1, got {self.max_level}")
        if self.family == "predictor" and self.max_level < 0:
            raise ConfigError(f"The largest markov order must be nonnegative, got {self.max_level}")

    @property
    def levels(self) -> Sequence[int]:
        if self.family == "fst":
            return range(1, self.max_level + 1)
        if self.family == "predictor":
            return range(0, self.max_level + 1)
        return range(1, len(self.registry) + 1)

    def __str__(self):
        if self.family == "fst":
            text = f"fst:{self.max_level}:{self.l_max}" + (":header" if self.include_header else "")
        elif self.family == "predictor":
            text = f"predictor:{self.max_level}:{self.perf_mode}"
        else:
            text = f"registry:{self.registry}"
        return f"{text}/{self.strong_side}"


def build_family(
    hierarchy: HierarchySpec,
    machines: Optional[Sequence[TransducerSpec]] = None,
    ceilings: Ceilings = DEFAULT_CEILINGS,
) -> ObserverFamily:
    """
    Instantiates the observer family a hierarchy names

    For the fst family an already enumerated machine list (from the cache) may be passed in.
    """
    cls = OBSERVER_FAMILIES[hierarchy.family]
    if cls is FstFamily:
        if machines is None:
            machines = list(enumerate_ilfsts(hierarchy.max_level, hierarchy.l_max, ceilings))
        return FstFamily(machines, hierarchy.l_max, hierarchy.include_header)
    if cls is PredictorFamily:
        return PredictorFamily(hierarchy.max_level, hierarchy.perf_mode)
    return RegistryFamily(hierarchy.registry)


def level_perf(
    x: str,
    hierarchy: HierarchySpec,
    level: int,
    family: Optional[ObserverFamily] = None,
    ceilings: Ceilings = DEFAULT_CEILINGS,
) -> PerformanceValue:
    if level not in hierarchy.levels:
        raise ConfigError(f"Level {level} is not part of {hierarchy} (levels {list(hierarchy.levels)})")
    if family is None:
        family = build_family(hierarchy, ceilings=ceilings)
    return family.perf(x, level)


def strong_perf(
    perfs: Dict[int, PerformanceValue], level: int, strong_side: STRONG_SIDES
) -> PerformanceValue:
    """The strong side's best performance against weak level `level`."""
    if strong_side == "full-family":
        return perfs[max(perfs)]
    above = [perf for lvl, perf in perfs.items() if lvl > level]
    # with nothing above, the weak level is its own strongest rival
    return max(above) if above else perfs[level]


@dataclass(frozen=True)
class ProfileRow:
    """
    One (scheduled n, weak level) cell of a profile

    `observed` is the length of the string actually scored; it differs from n only for transformed
    prefixes. The record's n is max(1, observed).
    """

    n: int
    observed: int
    weak_level: int
    record: GapRecord
    log2_capital: Optional[float] = None


@dataclass(frozen=True)
class LevelSummary:
    level: int
    cleared: int
    max_cleared_n: Optional[int]
    depth_indicated: bool
    strongly_indicated: bool


@dataclass(frozen=True)
class DepthProfile:
    source: str
    hierarchy: HierarchySpec
    bound: BoundSpec
    schedule: Tuple[int, ...]
    rows: Tuple[ProfileRow, ...]

    @property
    def cleared_rows(self) -> List[ProfileRow]:
        return [row for row in self.rows if row.record.cleared]

    def summary(self) -> Dict[int, LevelSummary]:
        """
        Per weak level: how many scheduled n clear, the largest that does, whether at least
        INDICATION_COUNT clear (infinitely often, finitely witnessed) and whether the last
        INDICATION_COUNT scheduled n all clear (almost every n, finitely witnessed).
        """
        result = {}
        for level in self.hierarchy.levels:
            rows = [row for row in self.rows if row.weak_level == level]
            cleared = [row.n for row in rows if row.record.cleared]
            tail = rows[-INDICATION_COUNT:]
            result[level] = LevelSummary(
                level=level,
                cleared=len(cleared),
                max_cleared_n=max(cleared) if cleared else None,
                depth_indicated=len(cleared) >= INDICATION_COUNT,
                strongly_indicated=len(tail) == INDICATION_COUNT
                and all(row.record.cleared for row in tail),
            )
        return result


def _schedule_validator(schedule: Sequence[int], ceilings: Ceilings):
    if not schedule:
        raise ConfigError("The prefix schedule is empty")
    if any(n < 1 for n in schedule):
        raise ConfigError(f"Scheduled prefix lengths must be positive, got {list(schedule)}")
    if any(a >= b for a, b in zip(schedule, schedule[1:])):
        raise ConfigError(f"The prefix schedule must be strictly ascending, got {list(schedule)}")
    if schedule[-1] > ceilings.sequence_length:
        raise ConfigError(
            f"Scheduled length {schedule[-1]} exceeds the sequence ceiling of {ceilings.sequence_length}"
        )


def _source_prefix(source: Source, n: int, ceilings: Ceilings) -> Tuple[str, str]:
    # (label, first n bits)
    if isinstance(source, SequenceSpec):
        return str(source), generate(source, n, ceilings)
    if len(source) < n:
        raise ConfigError(f"The input holds {len(source)} bits, the schedule needs {n}")
    return f"raw:{len(source)}", source[:n]


def _profile_rows(
    n: int,
    y: str,
    hierarchy: HierarchySpec,
    bound: BoundSpec,
    family: ObserverFamily,
) -> List[ProfileRow]:
    perfs = family.perfs(y)
    logs = family.raw_logs(y) if isinstance(family, PredictorFamily) and y else {}
    observed = max(1, len(y))
    return [
        ProfileRow(
            n=n,
            observed=len(y),
            weak_level=level,
            record=make_gap_record(
                observed, perfs[level], strong_perf(perfs, level, hierarchy.strong_side), bound
            ),
            log2_capital=logs.get(level),
        )
        for level in hierarchy.levels
    ]


def _profile(
    label: str,
    strings: Sequence[Tuple[int, str]],
    hierarchy: HierarchySpec,
    bound: BoundSpec,
    family: ObserverFamily,
    workers: int,
) -> DepthProfile:
    def work(item):
        return _profile_rows(*item, hierarchy, bound, family)

    if workers > 1:
        # map keeps schedule order whatever order the work finishes in
        with ThreadPoolExecutor(max_workers=workers) as executor:
            chunks = list(executor.map(work, strings))
    else:
        chunks = [work(item) for item in strings]
    rows = tuple(row for chunk in chunks for row in chunk)
    profile = DepthProfile(label, hierarchy, bound, tuple(n for n, _ in strings), rows)
    logger.info(
        "profile of %s under %s: %d rows, %d cleared",
        label,
        hierarchy,
        len(rows),
        len(profile.cleared_rows),
    )
    return profile


def _family_validator(family: ObserverFamily, hierarchy: HierarchySpec):
    if family.name != hierarchy.family or list(family.levels) != list(hierarchy.levels):
        raise ConfigError(f"The given {family.name} family does not match {hierarchy}")


def depth_profile(
    source: Source,
    hierarchy: HierarchySpec,
    bound: BoundSpec,
    schedule: Sequence[int] = DEFAULT_SCHEDULE,
    family: Optional[ObserverFamily] = None,
    ceilings: Ceilings = DEFAULT_CEILINGS,
    workers: int = 1,
) -> DepthProfile:
    """
    Profiles a sequence prefix at every scheduled length

    Args:
        source (SequenceSpec | str): A generator, or raw bits at least max(schedule) long
        family (ObserverFamily): A prebuilt family for the hierarchy, e.g. from cached machines
        workers (int): Threads scoring scheduled lengths in parallel

    Returns:
        DepthProfile: rows ordered by n, then weak level
    """
    schedule = tuple(schedule)
    _schedule_validator(schedule, ceilings)
    if family is None:
        family = build_family(hierarchy, ceilings=ceilings)
    _family_validator(family, hierarchy)
    label, x = _source_prefix(source, schedule[-1], ceilings)
    return _profile(label, [(n, x[:n]) for n in schedule], hierarchy, bound, family, workers)


def bound_sweep(profile: DepthProfile, bounds: Iterable[BoundSpec]) -> Dict[BoundSpec, DepthProfile]:
    """Re-reads a profile's gaps against other bounds; performances are not recomputed."""
    swept = {}
    for bound in bounds:
        rows = tuple(
            replace(
                row,
                record=make_gap_record(
                    row.record.n, row.record.perf_weak, row.record.perf_strong, bound
                ),
            )
            for row in profile.rows
        )
        swept[bound] = replace(profile, bound=bound, rows=rows)
    return swept


def slow_growth_experiment(
    source: Source,
    machine: TransducerSpec,
    hierarchy: HierarchySpec,
    bound: BoundSpec,
    schedule: Sequence[int] = DEFAULT_SCHEDULE,
    family: Optional[ObserverFamily] = None,
    ceilings: Ceilings = DEFAULT_CEILINGS,
    workers: int = 1,
) -> Tuple[DepthProfile, DepthProfile]:
    """
    Profiles a source and its image under an IL transducer side by side

    The image of the length-n prefix is profiled at its own length, so the transformed rows carry
    the output length as `observed`.

    Raises:
        NotLosslessError: the machine is not information lossless
    """
    verdict = check_il(machine, ceilings)
    if not verdict.lossless:
        x0, x1 = verdict.witness
        raise NotLosslessError(
            f"The transformation is not information lossless: {x0 or 'λ'} and {x1 or 'λ'} collide",
            verdict,
        )
    schedule = tuple(schedule)
    _schedule_validator(schedule, ceilings)
    if family is None:
        family = build_family(hierarchy, ceilings=ceilings)
    _family_validator(family, hierarchy)
    label, x = _source_prefix(source, schedule[-1], ceilings)
    original = _profile(label, [(n, x[:n]) for n in schedule], hierarchy, bound, family, workers)
    images = [(n, run(machine, x[:n]).output) for n in schedule]
    transformed = _profile(
        f"{label}|transformed", images, hierarchy, bound, family, workers
    )
    return original, transformed


@dataclass(frozen=True)
class BennettRow:
    n: int
    budget: int
    gap_bits: int


def bennett_toy_profile(
    source: Source,
    reg: RegistrySpec,
    schedule: Sequence[int] = DEFAULT_SCHEDULE,
    ceilings: Ceilings = DEFAULT_CEILINGS,
) -> List[BennettRow]:
    schedule = tuple(schedule)
    _schedule_validator(schedule, ceilings)
    _, x = _source_prefix(source, schedule[-1], ceilings)
    return [
        BennettRow(n, t, bennett_gap(reg, x[:n], t))
        for n in schedule
        for t in range(1, len(reg) + 1)
    ]


def bennett_summary(rows: Sequence[BennettRow]) -> Dict[int, int]:
    """Per budget, the smallest gap over the schedule."""
    summary: Dict[int, int] = {}
    for row in rows:
        summary[row.budget] = min(summary.get(row.budget, row.gap_bits), row.gap_bits)
    return summary


PROFILE_COLUMNS = [
    "n",
    "family",
    "weak_level",
    "strong_side",
    "perf_weak",
    "perf_strong",
    "gap",
    "threshold",
    "cleared",
]


def _real(value: float) -> str:
    return f"{value:.{REPORT_DECIMALS}f}"


def _write_csv(columns: List[str], rows: Iterable[Dict[str, str]], header_lines: Sequence[str]) -> str:
    out = io.StringIO()
    for line in header_lines:
        out.write(f"# {line}\n")
    writer = csv.DictWriter(out, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return out.getvalue()


def _profile_csv_rows(profile: DepthProfile, stream: Optional[str] = None) -> Iterable[Dict[str, str]]:
    for row in profile.rows:
        r = row.record
        values = {
            "n": str(row.n),
            "family": profile.hierarchy.family,
            "weak_level": str(row.weak_level),
            "strong_side": profile.hierarchy.strong_side,
            "perf_weak": _real(r.perf_weak.value),
            "perf_strong": _real(r.perf_strong.value),
            "gap": _real(r.gap),
            "threshold": _real(r.threshold),
            "cleared": "true" if r.cleared else "false",
        }
        if stream is not None:
            values["stream"] = stream
            values["observed"] = str(row.observed)
        if row.log2_capital is not None:
            values["log2_capital"] = _real(row.log2_capital)
        yield values


def _has_capital(profile: DepthProfile) -> bool:
    return profile.hierarchy.family == "predictor"


def render_profile_csv(profile: DepthProfile, header_lines: Sequence[str] = ()) -> str:
    columns = PROFILE_COLUMNS + (["log2_capital"] if _has_capital(profile) else [])
    return _write_csv(columns, _profile_csv_rows(profile), header_lines)


def render_slow_growth_csv(
    profiles: Tuple[DepthProfile, DepthProfile], header_lines: Sequence[str] = ()
) -> str:
    original, transformed = profiles
    columns = ["stream", "observed"] + PROFILE_COLUMNS
    columns += ["log2_capital"] if _has_capital(original) else []
    rows = itertools.chain(
        _profile_csv_rows(original, "source"), _profile_csv_rows(transformed, "transformed")
    )
    return _write_csv(columns, rows, header_lines)


def render_bennett_csv(rows: Sequence[BennettRow], header_lines: Sequence[str] = ()) -> str:
    return _write_csv(
        ["n", "budget", "gap_bits"],
        ({"n": str(r.n), "budget": str(r.budget), "gap_bits": str(r.gap_bits)} for r in rows),
        header_lines,
    )


def split_report(text: str) -> Tuple[List[str], List[Dict[str, str]]]:
    """Separates a report into its `# key: value` header lines and its CSV records."""
    header, body = [], []
    for line in text.splitlines():
        if line.startswith("#"):
            header.append(line[1:].strip())
        else:
            body.append(line)
    return header, list(csv.DictReader(body))


def read_profile_csv(text: str) -> List[ProfileRow]:
    """Reads profile rows back, with reals at the report's 9 decimals."""
    _, records = split_report(text)
    rows = []
    for rec in records:
        n = int(rec["n"])
        observed = int(rec.get("observed", n))
        rows.append(
            ProfileRow(
                n=n,
                observed=observed,
                weak_level=int(rec["weak_level"]),
                record=GapRecord(
                    n=max(1, observed),
                    perf_weak=PerformanceValue(float(rec["perf_weak"])),
                    perf_strong=PerformanceValue(float(rec["perf_strong"])),
                    gap=float(rec["gap"]),
                    threshold=float(rec["threshold"]),
                    cleared=rec["cleared"] == "true",
                ),
                log2_capital=float(rec["log2_capital"]) if rec.get("log2_capital") else None,
            )
        )
    return rows
