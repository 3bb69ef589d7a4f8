import argparse
import logging
import os
import sys
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Mapping, Optional, Sequence, Tuple

from depthlab import __version__
from depthlab.analyzer import (
    DEFAULT_SCHEDULE,
    VALID_STRONG_SIDES,
    HierarchySpec,
    bennett_toy_profile,
    build_family,
    depth_profile,
    render_bennett_csv,
    render_profile_csv,
    render_slow_growth_csv,
    slow_growth_experiment,
)
from depthlab.cache import File, cache_directory, ilfst_list
from depthlab.compressors import RegistrySpec
from depthlab.core import DEFAULT_CEILINGS, BoundSpec, Ceilings
from depthlab.errors import DOMAIN_ERRORS, ConfigError
from depthlab.fst import TransducerSpec, brute_force_il, check_il, parse_fst, run, serialize_fst
from depthlab.predictors import (
    VALID_PERF_MODES,
    PredictorSpec,
    betting_game_trace,
    predictor_accuracy,
    predictor_perf,
)
from depthlab.sequences import SequenceSpec, balance_flag, generate, read_bits

logger = logging.getLogger(__name__)

# options that locate inputs and outputs rather than shape results
LOCATION_OPTIONS = ("cache", "out", "verbose", "workers")


@dataclass(frozen=True)
class RunConfig:
    """
    A parsed command line

    Rendered into every report as `# key: value` header lines, which read back into an equal RunConfig.
    """

    command: str
    options: Tuple[Tuple[str, str], ...] = ()

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        options = []
        for name, value in sorted(vars(args).items()):
            if name in ("group", "action", "handler") or value is None or value is False:
                continue
            if isinstance(value, (list, tuple)):
                value = ",".join(str(v) for v in value)
            options.append((name, str(value)))
        return cls(" ".join(p for p in (args.group, args.action) if p), tuple(options))

    def get(self, name: str, default: Optional[str] = None) -> Optional[str]:
        return dict(self.options).get(name, default)

    def header_lines(self, locations: bool = False) -> List[str]:
        lines = [f"depthlab: {__version__}", f"command: {self.command}"]
        lines += [
            f"{name}: {value}"
            for name, value in self.options
            if locations or name not in LOCATION_OPTIONS
        ]
        return lines

    @classmethod
    def from_header_lines(cls, lines: Sequence[str]) -> "RunConfig":
        command = None
        options = []
        for line in lines:
            name, _, value = line.lstrip("# ").partition(":")
            name, value = name.strip(), value.strip()
            if name == "depthlab":
                continue
            if name == "command":
                command = value
            else:
                options.append((name, value))
        if command is None:
            raise ConfigError("The report header names no command")
        return cls(command, tuple(sorted(options)))

    def without_locations(self) -> "RunConfig":
        return replace(
            self, options=tuple(o for o in self.options if o[0] not in LOCATION_OPTIONS)
        )


def write_atomic(path: Path, text: str):
    """Writes through a temporary file in the target directory and a rename."""
    path = Path(path)
    directory = path.resolve().parent
    directory.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def emit(text: str, out: Optional[str]):
    if out:
        write_atomic(Path(out), text)
        print(f"output file: {out}")
    else:
        sys.stdout.write(text)


def parse_schedule(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ConfigError(f"Cannot read the schedule {text!r}") from e


def read_machine(path: str) -> TransducerSpec:
    return parse_fst(Path(path).read_bytes())


def read_source(src: str, length: Optional[int] = None, ceilings: Ceilings = DEFAULT_CEILINGS):
    """
    A sequence source: an existing file of ASCII bits, or a sequence grammar string

    Returns raw bits for a file, the SequenceSpec otherwise, or the generated prefix when a length is given.
    """
    path = Path(src)
    if path.is_file():
        bits = read_bits(path.read_text(encoding="utf-8"))
        return bits if length is None else bits[:length]
    spec = SequenceSpec.parse(src)
    if length is None:
        return spec
    return generate(spec, length, ceilings)


def resolve_schedule(args, source) -> List[int]:
    if args.schedule:
        return parse_schedule(args.schedule)
    if isinstance(source, str):
        schedule = [n for n in DEFAULT_SCHEDULE if n <= len(source)]
        if not schedule:
            raise ConfigError(
                f"The input holds {len(source)} bits, fewer than the shortest default length "
                f"{DEFAULT_SCHEDULE[0]}; pass --schedule"
            )
        return schedule
    return list(DEFAULT_SCHEDULE)


def make_ceilings(args) -> Ceilings:
    if args.enumeration_ceiling is None:
        return DEFAULT_CEILINGS
    return replace(DEFAULT_CEILINGS, enumeration_space=args.enumeration_ceiling)


def make_cache(args, environ: Mapping[str, str]) -> File:
    return File(cache_directory(environ, args.cache))


def do_generate(args, environ):
    ceilings = make_ceilings(args)
    bits = generate(SequenceSpec.parse(args.spec), args.length, ceilings)
    if args.spec.startswith("prng"):
        balance_flag(bits)
    emit(bits + "\n", args.out)


def do_fst_run(args, environ):
    machine = read_machine(args.machine)
    x = read_source(args.input, args.length, make_ceilings(args))
    if not isinstance(x, str):
        raise ConfigError("fst run needs --length with a sequence grammar input")
    result = run(machine, x)
    print(f"output: {result.output}")
    print(f"final state: {result.final_state}")


def _show(x: str) -> str:
    return x or "λ"


def do_fst_check_il(args, environ):
    machine = read_machine(args.machine)
    verdict = check_il(machine, make_ceilings(args))
    print(f"lossless: {'true' if verdict.lossless else 'false'}")
    if not verdict.lossless:
        x0, x1 = verdict.witness
        print(f"witness: {_show(x0)} / {_show(x1)}")
    if args.brute_force is not None:
        brute = brute_force_il(machine, args.brute_force)
        agrees = brute.lossless == verdict.lossless or (
            brute.lossless and max(len(w) for w in verdict.witness) > args.brute_force
        )
        print(f"brute force to length {args.brute_force}: {'agrees' if agrees else 'DISAGREES'}")


def do_fst_enumerate(args, environ):
    machines = ilfst_list(args.states, args.maxout, make_cache(args, environ), make_ceilings(args))
    print(f"machines: {len(machines)}")
    if args.out:
        config = RunConfig.from_args(args)
        header = "".join(f"# {line}\n" for line in config.header_lines())
        write_atomic(Path(args.out), header + "\n".join(serialize_fst(m).decode("utf-8") for m in machines))
        print(f"output file: {args.out}")


def _fst_family(args, environ, hierarchy: HierarchySpec, ceilings: Ceilings):
    machines = ilfst_list(hierarchy.max_level, hierarchy.l_max, make_cache(args, environ), ceilings)
    return build_family(hierarchy, machines, ceilings)


def _header(args) -> List[str]:
    return RunConfig.from_args(args).header_lines()


def do_analyze_fs(args, environ):
    ceilings = make_ceilings(args)
    source = read_source(args.input, ceilings=ceilings)
    hierarchy = HierarchySpec(
        "fst",
        max_level=args.max_states,
        strong_side=args.strong_side,
        l_max=args.maxout,
        include_header=args.header,
    )
    family = _fst_family(args, environ, hierarchy, ceilings)
    profile = depth_profile(
        source,
        hierarchy,
        BoundSpec("linear", alpha=args.alpha),
        resolve_schedule(args, source),
        family=family,
        ceilings=ceilings,
        workers=args.workers,
    )
    emit(render_profile_csv(profile, _header(args)), args.out)


def do_analyze_predictor(args, environ):
    ceilings = make_ceilings(args)
    source = read_source(args.input, ceilings=ceilings)
    hierarchy = HierarchySpec(
        "predictor",
        max_level=args.max_order,
        strong_side=args.strong_side,
        perf_mode=args.perf,
    )
    profile = depth_profile(
        source,
        hierarchy,
        BoundSpec.parse(args.bound),
        resolve_schedule(args, source),
        ceilings=ceilings,
        workers=args.workers,
    )
    emit(render_profile_csv(profile, _header(args)), args.out)


def do_analyze_bet(args, environ):
    pred = PredictorSpec.parse(args.predictor)
    w = read_source(args.input, args.length, make_ceilings(args))
    if not isinstance(w, str):
        raise ConfigError("analyze bet needs --length with a sequence grammar input")
    if not w:
        raise ConfigError("analyze bet needs a nonempty prefix")
    trace = betting_game_trace(pred, w)
    print(f"predictor: {pred}")
    print(f"rounds: {len(w)}")
    print(f"log2 capital: {trace[-1]:.9f}")
    print(f"perf: {predictor_perf(pred, w).value:.9f}")
    print(f"accuracy: {predictor_accuracy(pred, w).value:.9f}")


def do_analyze_bennett(args, environ):
    ceilings = make_ceilings(args)
    source = read_source(args.input, ceilings=ceilings)
    rows = bennett_toy_profile(
        source, RegistrySpec.parse(args.registry), resolve_schedule(args, source), ceilings
    )
    emit(render_bennett_csv(rows, _header(args)), args.out)


def do_slow_growth(args, environ):
    ceilings = make_ceilings(args)
    source = read_source(args.input, ceilings=ceilings)
    machine = read_machine(args.machine)
    hierarchy = HierarchySpec(
        "fst", max_level=args.max_states, strong_side=args.strong_side, l_max=args.maxout
    )
    # rejects a lossy machine before paying for the enumeration
    verdict = check_il(machine, ceilings)
    family = _fst_family(args, environ, hierarchy, ceilings) if verdict.lossless else None
    profiles = slow_growth_experiment(
        source,
        machine,
        hierarchy,
        BoundSpec("linear", alpha=args.alpha),
        resolve_schedule(args, source),
        family=family,
        ceilings=ceilings,
        workers=args.workers,
    )
    emit(render_slow_growth_csv(profiles, _header(args)), args.out)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="Log progress to stderr.")
    common.add_argument(
        "--enumeration-ceiling",
        type=int,
        help=f"Largest raw transition-table space to enumerate, defaults to {DEFAULT_CEILINGS.enumeration_space}.",
    )
    common.add_argument(
        "--cache",
        type=str,
        help="Enumeration cache directory, defaults to $DEPTHLAB_CACHE_DIR or ./.depthlab-cache.",
    )
    common.add_argument(
        "-o", "--out", type=str, help="Output file, written atomically; defaults to stdout."
    )

    analysis = argparse.ArgumentParser(add_help=False)
    analysis.add_argument(
        "--input",
        required=True,
        type=str,
        help="A file of ASCII 0/1 bits or a sequence such as periodic:01, champernowne, prng:7, charfn:evens, blockdeep.",
    )
    analysis.add_argument(
        "--schedule",
        type=str,
        help="Comma separated ascending prefix lengths, defaults to 256,512,1024,2048,4096.",
    )
    analysis.add_argument(
        "--strong-side", choices=VALID_STRONG_SIDES, default="same-family"
    )
    analysis.add_argument(
        "--workers", type=int, default=1, help="Threads scoring prefix lengths in parallel."
    )

    parser = argparse.ArgumentParser(
        prog="depthlab", description="Observer-relative depth profiles of binary sequences."
    )
    parser.add_argument("--version", action="version", version=f"depthlab {__version__}")
    groups = parser.add_subparsers(dest="group", required=True)

    gen = groups.add_parser("generate", parents=[common], help="Write a sequence prefix.")
    gen.add_argument("--spec", required=True, type=str)
    gen.add_argument("--length", required=True, type=int)
    gen.set_defaults(action=None, handler=do_generate)

    fst = groups.add_parser("fst", help="Run, check and enumerate transducers.")
    fst_actions = fst.add_subparsers(dest="action", required=True)

    fst_run = fst_actions.add_parser("run", parents=[common])
    fst_run.add_argument("--machine", required=True, type=str)
    fst_run.add_argument("--input", required=True, type=str)
    fst_run.add_argument("--length", type=int)
    fst_run.set_defaults(handler=do_fst_run)

    check = fst_actions.add_parser("check-il", parents=[common])
    check.add_argument("--machine", required=True, type=str)
    check.add_argument(
        "--brute-force",
        type=int,
        help="Also compare every input up to this length.",
    )
    check.set_defaults(handler=do_fst_check_il)

    enum = fst_actions.add_parser("enumerate", parents=[common])
    enum.add_argument("--states", required=True, type=int)
    enum.add_argument("--maxout", required=True, type=int)
    enum.set_defaults(handler=do_fst_enumerate)

    analyze = groups.add_parser("analyze", help="Depth-gap profiles.")
    analyze_actions = analyze.add_subparsers(dest="action", required=True)

    fs = analyze_actions.add_parser("fs", parents=[common, analysis])
    fs.add_argument("--max-states", required=True, type=int)
    fs.add_argument("--maxout", type=int, default=1)
    fs.add_argument("--alpha", type=float, default=0.1)
    fs.add_argument(
        "--header", action="store_true", help="Charge each machine its serialized size."
    )
    fs.set_defaults(handler=do_analyze_fs)

    pred = analyze_actions.add_parser("predictor", parents=[common, analysis])
    pred.add_argument("--max-order", required=True, type=int)
    pred.add_argument("--bound", type=str, default="loglog:0")
    pred.add_argument("--perf", choices=VALID_PERF_MODES, default="capital")
    pred.set_defaults(handler=do_analyze_predictor)

    bet = analyze_actions.add_parser("bet", parents=[common])
    bet.add_argument(
        "--predictor", required=True, type=str, help="predictor:uniform, predictor:frequency or predictor:markov:<order>."
    )
    bet.add_argument("--input", required=True, type=str)
    bet.add_argument("--length", type=int)
    bet.set_defaults(handler=do_analyze_bet)

    bennett = analyze_actions.add_parser("bennett", parents=[common, analysis])
    bennett.add_argument("--registry", type=str, default="identity,lz78,rle")
    bennett.set_defaults(handler=do_analyze_bennett)

    experiment = groups.add_parser("experiment", help="Slow-growth experiments.")
    experiment_actions = experiment.add_subparsers(dest="action", required=True)

    slow = experiment_actions.add_parser("slow-growth", parents=[common, analysis])
    slow.add_argument("--machine", required=True, type=str)
    slow.add_argument("--max-states", required=True, type=int)
    slow.add_argument("--maxout", type=int, default=1)
    slow.add_argument("--alpha", type=float, default=0.1)
    slow.set_defaults(handler=do_slow_growth)

    return parser


def _ceiling_validator(args, ceilings: Ceilings):
    states = getattr(args, "max_states", None) or getattr(args, "states", None)
    maxout = getattr(args, "maxout", None)
    if states is not None and states > ceilings.max_states:
        raise ConfigError(f"--max-states {states} exceeds the ceiling of {ceilings.max_states}")
    if maxout is not None and maxout > ceilings.max_output:
        raise ConfigError(f"--maxout {maxout} exceeds the ceiling of {ceilings.max_output}")


def run_command(argv: Sequence[str], environ: Mapping[str, str]) -> int:
    """
    Runs one depthlab command

    Returns:
        int: 0 on success, 1 on domain errors (lossy machine, bad codeword, I/O), 2 on usage and
            configuration errors
    """
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as e:
        return 0 if e.code in (0, None) else 2

    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        _ceiling_validator(args, make_ceilings(args))
        args.handler(args, environ)
    except DOMAIN_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


def main():
    return run_command(sys.argv[1:], os.environ)


if __name__ == "__main__":
    sys.exit(main())
