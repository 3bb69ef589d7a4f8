"""
Finite-state transducers T = (Q, δ, ν, q₀) over the binary alphabet: execution, the
information-lossless (IL) decision, canonical enumeration by state budget and the best compression a
state budget can reach.
"""
from __future__ import annotations

import itertools
import logging
from collections import deque
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from depthlab.core import (
    DEFAULT_CEILINGS,
    WORST,
    Ceilings,
    ObserverFamily,
    ObserverId,
    PerformanceValue,
)
from depthlab.errors import ConfigError, ParseError, ValidationError

logger = logging.getLogger(__name__)

Table = Tuple[Tuple[int, int], ...]
OutputTable = Tuple[Tuple[str, str], ...]


@dataclass(frozen=True)
class TransducerSpec:
    """
    A deterministic transducer with states 0..k-1

    Args:
        state_count (int): k
        start (int): q₀
        transition (tuple): transition[q][b] = δ(q, b)
        output (tuple): output[q][b] = ν(q, b), a string of 0s and 1s, "" for λ
    """

    state_count: int
    start: int
    transition: Table
    output: OutputTable

    def __post_init__(self):
        k = self.state_count
        if k < 1:
            raise ValidationError(f"A transducer needs at least one state, got {k}")
        if not 0 <= self.start < k:
            raise ValidationError(f"Start state {self.start} is not one of the {k} states")
        if len(self.transition) != k or len(self.output) != k:
            raise ValidationError("Transition and output tables must have one row per state")
        for q in range(k):
            if len(self.transition[q]) != 2 or len(self.output[q]) != 2:
                raise ValidationError(f"State {q} must have exactly one edge per input bit")
            for b in (0, 1):
                if not 0 <= self.transition[q][b] < k:
                    raise ValidationError(
                        f"Edge ({q}, {b}) targets state {self.transition[q][b]}, outside 0..{k - 1}"
                    )
                if set(self.output[q][b]) - {"0", "1"}:
                    raise ValidationError(f"Edge ({q}, {b}) output must be a bit string")

    @classmethod
    def from_tables(cls, start: int, transition, output) -> TransducerSpec:
        return cls(
            state_count=len(transition),
            start=start,
            transition=tuple(tuple(row) for row in transition),
            output=tuple(tuple(row) for row in output),
        )

    @property
    def max_output(self) -> int:
        return max(len(u) for row in self.output for u in row)

    def lengths(self) -> Tuple[int, ...]:
        return tuple(len(u) for row in self.output for u in row)


IDENTITY = TransducerSpec.from_tables(0, [(0, 0)], [("0", "1")])
NEGATION = TransducerSpec.from_tables(0, [(0, 0)], [("1", "0")])
DROP = TransducerSpec.from_tables(0, [(0, 0)], [("", "")])


@dataclass(frozen=True)
class RunResult:
    output: str
    final_state: int


@dataclass(frozen=True)
class IlVerdict:
    lossless: bool
    witness: Optional[Tuple[str, str]] = None


def run(machine: TransducerSpec, x: str) -> RunResult:
    q = machine.start
    out = []
    for c in x:
        b = 1 if c == "1" else 0
        out.append(machine.output[q][b])
        q = machine.transition[q][b]
    return RunResult("".join(out), q)


def _bfs_order(machine: TransducerSpec) -> List[int]:
    order = [machine.start]
    seen = {machine.start}
    i = 0
    while i < len(order):
        q = order[i]
        for b in (0, 1):
            t = machine.transition[q][b]
            if t not in seen:
                seen.add(t)
                order.append(t)
        i += 1
    return order


def _access_words(machine: TransducerSpec) -> Dict[int, str]:
    # shortest input reaching each state, 0-edges explored first; dict order is BFS order
    words = {machine.start: ""}
    queue = deque([machine.start])
    while queue:
        q = queue.popleft()
        for b in (0, 1):
            t = machine.transition[q][b]
            if t not in words:
                words[t] = words[q] + str(b)
                queue.append(t)
    return words


def canonical(machine: TransducerSpec) -> TransducerSpec:
    """Renumbers states breadth-first from q₀ (0-edge before 1-edge) and drops unreachable ones."""
    order = _bfs_order(machine)
    rename = {old: new for new, old in enumerate(order)}
    return TransducerSpec(
        state_count=len(order),
        start=0,
        transition=tuple(
            tuple(rename[machine.transition[q][b]] for b in (0, 1)) for q in order
        ),
        output=tuple(machine.output[q] for q in order),
    )


def is_canonical(machine: TransducerSpec) -> bool:
    return machine.start == 0 and _bfs_order(machine) == list(range(machine.state_count))


def _merge_overhang(lead: int, s: str, side: int, u: str) -> Optional[Tuple[int, str]]:
    # branch `side` (1 or 2) emits u while branch `lead` is ahead by s (lead 0 means level)
    if lead in (0, side):
        t = s + u
        return (side if t else 0), t
    if s.startswith(u):
        rest = s[len(u):]
        return (lead if rest else 0), rest
    if u.startswith(s):
        rest = u[len(s):]
        return (side if rest else 0), rest
    return None


def _diverging_witness(
    machine: TransducerSpec, access: Dict[int, str], bound: int
) -> Optional[Tuple[str, str]]:
    # breadth-first search over pairs of runs that split at a reachable state r (one reads 0, the other 1),
    # tracking which run's output is ahead and by how much
    parents = {}
    queue = deque()
    for r in access:
        step = _merge_overhang(0, "", 1, machine.output[r][0])
        step = _merge_overhang(*step, 2, machine.output[r][1])
        if step is None or len(step[1]) > bound:
            continue
        config = (machine.transition[r][0], machine.transition[r][1], *step)
        if config in parents:
            continue
        parents[config] = (None, r)
        if config[0] == config[1] and config[2] == 0:
            return _rebuild_witness(parents, config, access)
        queue.append(config)

    while queue:
        config = queue.popleft()
        p, q, lead, s = config
        for side in (1, 2):
            state = p if side == 1 else q
            for b in (0, 1):
                step = _merge_overhang(lead, s, side, machine.output[state][b])
                if step is None or len(step[1]) > bound:
                    continue
                t = machine.transition[state][b]
                nxt = (t, q, *step) if side == 1 else (p, t, *step)
                if nxt in parents:
                    continue
                parents[nxt] = (config, side, b)
                if nxt[0] == nxt[1] and nxt[2] == 0:
                    return _rebuild_witness(parents, nxt, access)
                queue.append(nxt)
    return None


def _rebuild_witness(parents, config, access) -> Tuple[str, str]:
    tails = {1: [], 2: []}
    entry = parents[config]
    while entry[0] is not None:
        config, side, b = entry
        tails[side].append(str(b))
        entry = parents[config]
    prefix = access[entry[1]]
    return (
        prefix + "0" + "".join(reversed(tails[1])),
        prefix + "1" + "".join(reversed(tails[2])),
    )


def _silent_cycle_witness(
    machine: TransducerSpec, access: Dict[int, str]
) -> Optional[Tuple[str, str]]:
    # a nonempty λ-output loop through a reachable state makes x and x·loop indistinguishable
    for r, word in access.items():
        paths = {r: ""}
        queue = deque([r])
        while queue:
            q = queue.popleft()
            for b in (0, 1):
                if machine.output[q][b]:
                    continue
                t = machine.transition[q][b]
                if t == r:
                    return word, word + paths[q] + str(b)
                if t not in paths:
                    paths[t] = paths[q] + str(b)
                    queue.append(t)
    return None


def check_il(machine: TransducerSpec, ceilings: Ceilings = DEFAULT_CEILINGS) -> IlVerdict:
    """
    Decides whether x ↦ (T(x), δ̂(x)) is one-to-one

    Two distinct inputs either split at some reachable state or one extends the other. Split pairs are
    searched breadth-first over (state, state, overhang) configurations with the overhang bounded by
    k²·ℓ_max; extensions reduce to λ-output loops. A returned witness always verifies by running both
    inputs.
    """
    bound = machine.state_count ** 2 * machine.max_output
    if bound > ceilings.il_search:
        raise ConfigError(
            f"k²·ℓ_max = {bound} exceeds the IL search ceiling of {ceilings.il_search}"
        )
    access = _access_words(machine)
    witness = _diverging_witness(machine, access, bound)
    if witness is None:
        witness = _silent_cycle_witness(machine, access)
    return IlVerdict(lossless=witness is None, witness=witness)


def brute_force_il(machine: TransducerSpec, max_length: int) -> IlVerdict:
    """Looks for two inputs of length <= max_length with equal output and final state."""
    seen = {("", machine.start): ""}
    frontier = [("", "", machine.start)]
    for _ in range(max_length):
        extended = []
        for x, out, q in frontier:
            for b in (0, 1):
                key = (out + machine.output[q][b], machine.transition[q][b])
                xb = x + str(b)
                if key in seen:
                    return IlVerdict(False, (seen[key], xb))
                seen[key] = xb
                extended.append((xb, *key))
        frontier = extended
    return IlVerdict(True)


def serialize_fst(machine: TransducerSpec) -> bytes:
    m = canonical(machine)
    lines = [f"states {m.state_count}", f"start {m.start}"]
    for q in range(m.state_count):
        for b in (0, 1):
            lines.append(f"edge {q} {b} {m.transition[q][b]} {m.output[q][b] or '-'}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def header_bits(machine: TransducerSpec) -> int:
    return 8 * len(serialize_fst(machine))


def _parse_int(token: str, line: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"{what} must be an integer, got {token!r}", line) from None


def parse_fst(text: Union[bytes, str]) -> TransducerSpec:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"Machine files must be UTF-8: {e}") from e
    k = start = None
    edges: Dict[Tuple[int, int], Tuple[int, str]] = {}
    last = 0
    for number, raw in enumerate(text.splitlines(), start=1):
        last = number
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if k is None:
            if len(fields) != 2 or fields[0] != "states":
                raise ParseError("expected `states <k>`", number)
            k = _parse_int(fields[1], number, "State count")
            if k < 1:
                raise ParseError(f"State count must be positive, got {k}", number)
        elif start is None:
            if len(fields) != 2 or fields[0] != "start":
                raise ParseError("expected `start <q0>`", number)
            start = _parse_int(fields[1], number, "Start state")
        else:
            if len(fields) != 5 or fields[0] != "edge":
                raise ParseError("expected `edge <q> <b> <q'> <out>`", number)
            q = _parse_int(fields[1], number, "Source state")
            b = _parse_int(fields[2], number, "Input bit")
            target = _parse_int(fields[3], number, "Target state")
            out = "" if fields[4] == "-" else fields[4]
            if not 0 <= q < k or b not in (0, 1):
                raise ParseError(f"no edge ({q}, {b}) in a {k}-state machine", number)
            if set(out) - {"0", "1"}:
                raise ParseError(f"output must be a bit string or -, got {fields[4]!r}", number)
            if (q, b) in edges:
                raise ParseError(f"duplicate edge ({q}, {b})", number)
            edges[(q, b)] = (target, out)
    if k is None or start is None:
        raise ParseError("missing `states` or `start` line", last + 1)
    missing = [e for e in itertools.product(range(k), (0, 1)) if e not in edges]
    if missing:
        raise ParseError(f"missing edges {missing}", last + 1)
    return TransducerSpec.from_tables(
        start,
        [[edges[(q, b)][0] for b in (0, 1)] for q in range(k)],
        [[edges[(q, b)][1] for b in (0, 1)] for q in range(k)],
    )


def output_alphabet(l_max: int) -> List[str]:
    """Every edge output of length <= l_max, shortest first, λ first."""
    return [
        "".join(bits)
        for length in range(l_max + 1)
        for bits in itertools.product("01", repeat=length)
    ]


def raw_space(k: int, l_max: int) -> int:
    outputs = 2 ** (l_max + 1) - 1
    return sum(j ** (2 * j) * outputs ** (2 * j) for j in range(1, k + 1))


def canonical_structures(j: int) -> Iterator[Table]:
    """Transition tables on exactly j states, all reachable from 0 and numbered breadth-first."""
    for flat in itertools.product(range(j), repeat=2 * j):
        transition = tuple(zip(flat[0::2], flat[1::2]))
        skeleton = TransducerSpec(j, 0, transition, (("", ""),) * j)
        if is_canonical(skeleton):
            yield transition


def enumeration_validator(k: int, l_max: int, ceilings: Ceilings):
    if k < 1:
        raise ConfigError(f"The state budget must be positive, got {k}")
    if l_max < 1:
        raise ConfigError(
            "l_max must be at least 1: with λ outputs only no transducer is information lossless"
        )
    if k > ceilings.max_states or l_max > ceilings.max_output:
        raise ConfigError(
            f"(k={k}, l_max={l_max}) exceeds the ceilings k <= {ceilings.max_states}, "
            f"l_max <= {ceilings.max_output}"
        )
    space = raw_space(k, l_max)
    if space > ceilings.enumeration_space:
        raise ConfigError(
            f"(k={k}, l_max={l_max}) spans {space} raw tables, over the enumeration ceiling of "
            f"{ceilings.enumeration_space}"
        )


def enumerate_ilfsts(
    k: int, l_max: int, ceilings: Ceilings = DEFAULT_CEILINGS
) -> Iterator[TransducerSpec]:
    """
    Yields every IL transducer with at most k states and outputs of length at most l_max, once per
    isomorphism class

    Order: state count, then transition table, then outputs, each lexicographic (outputs ordered as
    output_alphabet).
    """
    enumeration_validator(k, l_max, ceilings)
    alphabet = output_alphabet(l_max)
    for j in range(1, k + 1):
        for transition in canonical_structures(j):
            for flat in itertools.product(alphabet, repeat=2 * j):
                machine = TransducerSpec(j, 0, transition, tuple(zip(flat[0::2], flat[1::2])))
                if check_il(machine, ceilings).lossless:
                    yield machine


def sample_ilfsts(
    machines: Sequence[TransducerSpec], count: int, seed: int
) -> List[TransducerSpec]:
    """Draws count distinct machines, kept in enumeration order."""
    if count > len(machines):
        raise ConfigError(f"Cannot draw {count} machines from a family of {len(machines)}")
    rng = np.random.default_rng(seed)
    picks = sorted(rng.choice(len(machines), size=count, replace=False).tolist())
    return [machines[i] for i in picks]


class FstFamily(ObserverFamily):
    """
    The ILFSTs with at most k states, scored by compression

    Machines sharing a transition table differ only in their outputs, so the cost of a string is the
    edge-use counts of that table dotted with the output lengths. Only the first machine of every
    (table, output lengths) pair in enumeration order can ever win, so only those are kept.

    Args:
        machines (list): IL machines in enumeration order, as enumerate_ilfsts yields them
        l_max (int): The output bound the machines were enumerated with
        include_header (bool): Charge each machine the bit length of its serialization
    """

    name = "fst"

    def __init__(
        self, machines: Sequence[TransducerSpec], l_max: int, include_header: bool = False
    ):
        if not machines:
            raise ConfigError("An fst family needs at least one machine")
        self.l_max = l_max
        self.include_header = include_header
        self.max_states = max(m.state_count for m in machines)

        structures: Dict[Table, int] = {}
        kept: Dict[Tuple[Table, Tuple[int, ...]], int] = {}
        self.machines: List[TransducerSpec] = []
        rows, groups, headers = [], [], []
        for machine in machines:
            key = (machine.transition, machine.lengths())
            if key in kept:
                continue
            group = structures.setdefault(machine.transition, len(structures))
            kept[key] = len(self.machines)
            self.machines.append(machine)
            padded = np.zeros(2 * self.max_states, dtype=np.int64)
            padded[: 2 * machine.state_count] = machine.lengths()
            rows.append(padded)
            groups.append(group)
            headers.append(header_bits(machine) if include_header else 0)

        k = self.max_states
        self._transitions = np.zeros((len(structures), k, 2), dtype=np.int64)
        for transition, group in structures.items():
            self._transitions[group, : len(transition)] = transition
        self._lengths = np.array(rows)
        self._groups = np.array(groups)
        self._headers = np.array(headers, dtype=np.int64)
        # machines are kept in state-count order, so level j is a prefix of the rows
        counts = np.array([m.state_count for m in self.machines])
        self._level_end = {j: int(np.searchsorted(counts, j, side="right")) for j in self.levels}
        logger.info(
            "fst family k<=%d l_max<=%d: %d machines over %d transition tables",
            k,
            l_max,
            len(self.machines),
            len(structures),
        )

    @property
    def levels(self) -> Sequence[int]:
        return range(1, self.max_states + 1)

    def edge_counts(self, x: str) -> np.ndarray:
        """Per transition table, how often each (state, bit) edge is taken on x."""
        tables = len(self._transitions)
        idx = np.arange(tables)
        state = np.zeros(tables, dtype=np.int64)
        counts = np.zeros((tables, self.max_states, 2), dtype=np.int64)
        for c in x:
            b = 1 if c == "1" else 0
            counts[idx, state, b] += 1
            state = self._transitions[idx, state, b]
        return counts.reshape(tables, -1)

    def best_machines(self, x: str) -> Dict[int, Tuple[PerformanceValue, TransducerSpec, int]]:
        """For every level, (performance, machine, index in self.machines) of the best machine on x."""
        if not x:
            return {level: (WORST, self.machines[0], 0) for level in self.levels}
        counts = self.edge_counts(x)
        costs = (self._lengths * counts[self._groups]).sum(axis=1) + self._headers
        best = {}
        for level in self.levels:
            # argmin returns the first minimum, i.e. the earliest machine in enumeration order
            i = int(np.argmin(costs[: self._level_end[level]]))
            perf = PerformanceValue.clamped(1.0 - costs[i] / len(x))
            best[level] = (perf, self.machines[i], i)
        return best

    def best_observers(self, x: str) -> Dict[int, Tuple[PerformanceValue, ObserverId]]:
        return {
            level: (
                perf,
                ObserverId(
                    self.name,
                    level,
                    (("machine", str(i)), ("l_max", str(self.l_max))),
                ),
            )
            for level, (perf, _, i) in self.best_machines(x).items()
        }


def best_compression(
    x: str,
    k: int,
    l_max: int,
    include_header: bool = False,
    ceilings: Ceilings = DEFAULT_CEILINGS,
    family: Optional[FstFamily] = None,
) -> Tuple[PerformanceValue, TransducerSpec]:
    """
    The best Perf = 1 - cost/|x| over enumerate_ilfsts(k, l_max), first machine winning ties

    A prebuilt family for at least k states and the same l_max may be passed to skip enumeration.
    """
    if not x:
        raise ValueError("best_compression needs a nonempty string")
    if family is None:
        family = FstFamily(list(enumerate_ilfsts(k, l_max, ceilings)), l_max, include_header)
    elif family.l_max != l_max or family.include_header != include_header or k not in family.levels:
        raise ConfigError("The given fst family does not match (k, l_max, include_header)")
    perf, machine, _ = family.best_machines(x)[k]
    return perf, machine
