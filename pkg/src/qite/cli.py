"""Command-line entry point: ``qite {exact,trotter,compile,qubo} ...``.

Exit codes: 0 success, 1 usage or input error, 2 invariant violation,
3 solver failure. Every output file carries the full flag set and seed.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .combopt import BACKENDS, load_qubo, run_combinatorial
from .errors import CompilationError, QiteError
from .ite_exact import exact_evolve
from .ite_trotter import trotter_evolve
from .pauli import Hamiltonian, dense_cap, load_hamiltonian
from .spectral import eigendecompose
from .state import StateVector, basis_state, equal_superposition, random_state
from .varqite import POLICIES, compile_evolution

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT, EXIT_SOLVER = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_config(path: str) -> dict:
    """``key=value`` lines; ``#`` comments; keys use flag names without dashes."""
    cfg = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise QiteError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        cfg[key.replace("-", "_")] = value
    return cfg


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file supplying defaults; flags win")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".", help="output directory")


def _evolution_flags(p: argparse.ArgumentParser, need_delta: bool) -> None:
    p.add_argument("--hamiltonian", help="Hamiltonian text file")
    p.add_argument("--time", type=float)
    p.add_argument("--init", default="plus", help="plus | random | basis:<bits>")
    if need_delta:
        p.add_argument("--delta", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qite", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qite {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    parser.subcommands = sub.choices

    p = sub.add_parser("exact", help="closed-form imaginary time evolution")
    _evolution_flags(p, need_delta=False)
    p.add_argument("--samples", type=int, default=100)
    _common(p)

    p = sub.add_parser("trotter", help="first-order Trotterized evolution")
    _evolution_flags(p, need_delta=True)
    _common(p)

    p = sub.add_parser("compile", help="compile the evolution into Pauli-rotation circuits")
    _evolution_flags(p, need_delta=True)
    p.add_argument("--policy", choices=POLICIES, default="full")
    _common(p)

    p = sub.add_parser("qubo", help="run ITE on a QUBO and check success-probability bounds")
    p.add_argument("--qubo", help="QUBO text file")
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--shots", type=int, default=1)
    p.add_argument("--backend", choices=BACKENDS, default="exact")
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--repeats", type=int, default=200)
    p.add_argument("--samples", type=int, default=100)
    _common(p)
    return parser


REQUIRED = {
    "exact": ("hamiltonian", "time"),
    "trotter": ("hamiltonian", "time", "delta"),
    "compile": ("hamiltonian", "time", "delta"),
    "qubo": ("qubo",),
}


def parse_args(argv=None) -> argparse.Namespace:
    """Parse flags, fill gaps from ``--config``, then enforce required flags."""
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = parser.subcommands[args.command]
    if args.config:
        actions = {a.dest: a for a in sub._actions}
        for key, raw in read_config(args.config).items():
            action = actions.get(key)
            if action is None or key in ("config", "help"):
                sub.error(f"unknown config key {key!r}")
            flag = action.option_strings[0]
            if any(tok == flag or tok.startswith(flag + "=") for tok in argv):
                continue
            try:
                value = action.type(raw) if action.type is not None else raw
            except ValueError:
                sub.error(f"bad value {raw!r} for config key {key!r}")
            if action.choices is not None and value not in action.choices:
                sub.error(f"config key {key!r} must be one of {list(action.choices)}")
            setattr(args, key, value)
    missing = [k for k in REQUIRED[args.command] if getattr(args, k) is None]
    if missing:
        sub.error("the following arguments are required: " + ", ".join("--" + m for m in missing))
    return args


def initial_state(kind: str, qubits: int, seed: int) -> StateVector:
    if kind == "plus":
        return equal_superposition(qubits)
    if kind == "random":
        return random_state(qubits, np.random.default_rng(seed))
    if kind.startswith("basis:"):
        return basis_state(qubits, kind.split(":", 1)[1])
    raise QiteError(f"unknown --init {kind!r}; use plus, random or basis:<bits>")


def _flags(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items())}


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text, encoding="utf-8")
    return path


def _report(args, h: Hamiltonian, trace, **extra) -> dict:
    return {"command": args.command, "flags": _flags(args), "seed": args.seed, "Q": h.qubits, **trace.summary(), **extra}


def cmd_exact(args) -> int:
    h = load_hamiltonian(args.hamiltonian)
    psi0 = initial_state(args.init, h.qubits, args.seed)
    trace, _ = exact_evolve(psi0, h, args.time, samples=args.samples)
    out = Path(args.out)
    _write(out, "trace.csv", trace.to_csv(header=_flags(args)))
    report = _report(args, h, trace)
    _write(out, "report.json", json.dumps(report, indent=1, sort_keys=True) + "\n")
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK if report["fidelity_bound_ok"] else EXIT_INVARIANT


def cmd_trotter(args) -> int:
    h = load_hamiltonian(args.hamiltonian)
    psi0 = initial_state(args.init, h.qubits, args.seed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        spec = eigendecompose(h) if h.qubits <= dense_cap() else None
        trace, final = trotter_evolve(psi0, h, args.time, args.delta, spectrum=spec)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    extra = {}
    if spec is not None:
        _, exact_final = exact_evolve(psi0, h, trace.times[-1], samples=1, spectrum=spec)
        extra["error_vs_exact"] = float(np.linalg.norm(final.amps - exact_final.amps))
    out = Path(args.out)
    _write(out, "trace.csv", trace.to_csv(header=_flags(args)))
    report = _report(args, h, trace, **extra)
    _write(out, "report.json", json.dumps(report, indent=1, sort_keys=True) + "\n")
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def cmd_compile(args) -> int:
    h = load_hamiltonian(args.hamiltonian)
    psi0 = initial_state(args.init, h.qubits, args.seed)
    out = Path(args.out)
    spec = eigendecompose(h) if h.qubits <= dense_cap() else None
    try:
        compiled, final, trace = compile_evolution(psi0, h, args.time, args.delta, policy=args.policy, spectrum=spec)
    except CompilationError as err:
        if err.partial is not None:
            _write(out, "steps.json", err.partial.to_json(flags=_flags(args), failed=str(err)) + "\n")
            _write(out, "circuit.txt", err.partial.gate_list())
        print(f"error: {err}", file=sys.stderr)
        return EXIT_SOLVER
    extra = {"gate_bound": 4**h.order_bound * len(h.terms) * compiled.layers}
    if spec is not None:
        _, exact_final = exact_evolve(psi0, h, trace.times[-1], samples=1, spectrum=spec)
        extra["fidelity_vs_exact"] = abs(np.vdot(exact_final.amps, final.amps)) ** 2
    _write(out, "circuit.txt", compiled.gate_list())
    _write(out, "steps.json", compiled.to_json(flags=_flags(args)) + "\n")
    _write(out, "trace.csv", trace.to_csv(header=_flags(args)))
    report = _report(args, h, trace, **extra)
    report.pop("fidelity_bound_ok")
    _write(out, "report.json", json.dumps(report, indent=1, sort_keys=True) + "\n")
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK if compiled.total_gates <= extra["gate_bound"] else EXIT_INVARIANT


def cmd_qubo(args) -> int:
    q = load_qubo(args.qubo)
    rep = run_combinatorial(
        q, args.epsilon, args.shots, args.seed, backend=args.backend,
        repeats=args.repeats, delta=args.delta, samples=args.samples,
    )
    text = rep.to_json(command=args.command, flags=_flags(args))
    if args.out:
        _write(Path(args.out), "report.json", text + "\n")
    print(text)
    ok = rep.bound_ok and rep.trace_bound_ok if args.backend == "exact" else True
    return EXIT_OK if ok else EXIT_INVARIANT


COMMANDS = {"exact": cmd_exact, "trotter": cmd_trotter, "compile": cmd_compile, "qubo": cmd_qubo}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except QiteError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (QiteError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
