"""Command-line front end.

Exit codes: 0 ok, 1 usage or schema error, 2 numerical failure (including
the dense-size cap, see MSPT_DENSE_CAP), 3 invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import fixtures as fx
from .algebra import DenseCapExceeded, NumericalFailure
from .channels import TPViolation, apply_gate_to_mpdo, apply_ti_circuit, parse_channel, to_cell
from .cohomology import CapExceeded, InvalidAction, classify_mspt, cohomology_group
from .diagnostics import InvalidTensor, ssb_classify
from .io import SchemaError, circuit_from_json, dump_json, load_json, tensor_from_json, tensor_to_json, write_csv
from .lindblad import FAMILIES, gap_ssb_experiment
from .mpdo import random_valid_tensor, spectrum_E1, spectrum_E2
from .positivity import validity
from .symmetry import InvalidGroup, parse_group

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_INVARIANT = 0, 1, 2, 3


class UsageError(ValueError):
    pass


class InvariantViolation(RuntimeError):
    pass


@dataclass
class RunConfig:
    command: str
    inputs: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    seed: int = 0
    output: str | None = None
    format: str | None = None


# ---------------------------------------------------------------- helpers


SPECS = {
    "z2": fx.z2_spec,
    "cluster": fx.cluster_spec,
    "even-z2": fx.even_z2_spec,
    "odd-dephased": fx.odd_dephased_spec,
}

DEFAULT_SPEC = {
    "cluster": "cluster",
    "dephased-cluster": "cluster",
    "dephased-site": "cluster",
    "ghz": "z2",
    "plus": "z2",
    "maximally-mixed": "z2",
    "ghz-mix": "ghz-mix",
    "odd-dephased-cluster": "odd-dephased",
}


def get_spec(name: str):
    base, _, arg = name.partition(":")
    if base == "ghz-mix":
        return fx.ghz_mix_spec(arg or "Z2")
    if base not in SPECS:
        raise UsageError(f"unknown symmetry spec {name!r}; known: {', '.join(sorted(SPECS) + ['ghz-mix:K'])}")
    return SPECS[base]()


def load_tensor(cfg: RunConfig):
    if cfg.inputs.get("tensor"):
        return tensor_from_json(load_json(cfg.inputs["tensor"]))
    name = cfg.inputs.get("fixture")
    if not name:
        raise UsageError("give --tensor FILE or --fixture NAME")
    return make_fixture(name, cfg.seed)


def make_fixture(name: str, seed: int = 0):
    base, _, arg = name.partition(":")
    if base == "random":
        opts = dict(kv.split("=") for kv in arg.split(",") if kv) if arg else {}
        rng = np.random.default_rng(seed)
        return random_valid_tensor(int(opts.get("d", 2)), int(opts.get("D", 2)), int(opts.get("kappa", 2)), rng)
    try:
        return fx.get_fixture(name)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from exc


def parse_range(text: str) -> list[int]:
    """``2..5`` or ``2,3,4``."""
    try:
        if ".." in text:
            a, b = text.split("..")
            return list(range(int(a), int(b) + 1))
        return [int(x) for x in text.split(",") if x]
    except ValueError as exc:
        raise UsageError(f"cannot parse range {text!r}") from exc


def p_grid(start: float, stop: float, step: float) -> list[float]:
    if step <= 0:
        raise UsageError("--p-step must be positive")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(max(n, 0))]


def _out(cfg: RunConfig):
    return open(cfg.output, "w") if cfg.output else sys.stdout


def _emit(cfg: RunConfig, text: str) -> None:
    fh = _out(cfg)
    try:
        fh.write(text if text.endswith("\n") else text + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()


# ---------------------------------------------------------------- commands


def cmd_fixtures(cfg: RunConfig) -> int:
    name = cfg.params.get("name")
    if not name or cfg.params.get("list"):
        _emit(cfg, "\n".join(sorted(fx.FIXTURES) + ["random:d=..,D=..,kappa=.."]))
        return EXIT_OK
    _emit(cfg, dump_json(tensor_to_json(make_fixture(name, cfg.seed))))
    return EXIT_OK


def _sweep_point(A, channel: str, p: float, k: int, which: str):
    g = parse_channel(f"{channel}:p={p}")
    B = apply_gate_to_mpdo(A, g)
    spec = spectrum_E2(B) if which == "E2" else spectrum_E1(B)
    vals = spec.eigenvalues[:k]
    return [(p, i, v.real, v.imag, abs(v)) for i, v in enumerate(vals)]


def cmd_sweep(cfg: RunConfig) -> int:
    A = load_tensor(cfg)
    P = cfg.params
    grid = p_grid(P["p_start"], P["p_stop"], P["p_step"])
    with ThreadPoolExecutor(max_workers=max(1, P.get("jobs", 1))) as ex:
        results = list(ex.map(lambda p: _sweep_point(A, P["channel"], p, P["k"], P["which"]), grid))
    rows = [r for block in results for r in block]
    _emit(cfg, write_csv(["p", "k", "re", "im", "|λ|"], rows))
    return EXIT_OK


def cmd_evolve(cfg: RunConfig) -> int:
    A = load_tensor(cfg)
    layers = []
    if cfg.params.get("channel"):
        layers.append((parse_channel(cfg.params["channel"]), cfg.params.get("offset", 0)))
    if cfg.inputs.get("circuit"):
        c = circuit_from_json(load_json(cfg.inputs["circuit"]))
        for layer in c.layers:
            for pos, g in layer:
                layers.append((g, pos))
    if not layers:
        raise UsageError("give --channel SPEC and/or --circuit FILE")
    d_site = cfg.params.get("d_site") or layers[0][0].site_dim
    state = apply_ti_circuit(to_cell(A, d_site), layers)
    out = tensor_to_json(state.tensor)
    out["cell"] = state.cell
    out["origin"] = state.origin
    _emit(cfg, dump_json(out))
    return EXIT_OK


def cmd_diagnose(cfg: RunConfig) -> int:
    A = load_tensor(cfg)
    spec_name = cfg.params.get("spec")
    if not spec_name:
        base = (cfg.inputs.get("fixture") or "").partition(":")[0]
        spec_name = DEFAULT_SPEC.get(base)
        if base == "ghz-mix":
            spec_name = "ghz-mix:" + ((cfg.inputs["fixture"].partition(":")[2]) or "Z2")
    if not spec_name:
        raise UsageError("give --spec NAME for this tensor")
    report = ssb_classify(A, get_spec(spec_name), d_site=cfg.params.get("d_site"))
    if (cfg.format or "json") == "csv":
        rows = []
        for key, series in report.correlators.items():
            factor, kind, label = key.rsplit(":", 2)
            for sep, v in series.items():
                rows.append((kind, f"{factor}:{label}", 0, sep, v.real, v.imag))
        for key, scans in report.disorder.items():
            factor, kind = key.rsplit(":", 1)
            for n, s in scans.items():
                rows.append((kind, f"{factor}:{s.left}|{s.right}", "region", n, s.value.real, s.value.imag))
        _emit(cfg, write_csv(["kind", "O-label", "x", "y", "real", "imag"], rows))
    else:
        _emit(cfg, dump_json(report.to_json()))
    return EXIT_OK


def _action_table(text: str | None, K, G):
    if text in (None, "", "id"):
        return None
    if text == "inv":
        if G.cyclic_factors is None or G.cyclic_factors[0] % 2:
            raise UsageError("'inv' needs G whose first cyclic factor has even order")
        inv = [int(np.argmax(K.mul[a] == K.identity)) for a in range(K.order)]
        return [inv if G.exponents(g)[0] % 2 else list(range(K.order)) for g in range(G.order)]
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError("--action must be 'id', 'inv' or a JSON |G|×|K| table") from exc


def cmd_classify(cfg: RunConfig) -> int:
    P = cfg.params
    K, G = parse_group(P["K"]), parse_group(P["G"])
    res = classify_mspt(K, G, P["d"], with_T=P.get("with_T", False), action_of_G_on_K=_action_table(P.get("action"), K, G))
    _emit(cfg, dump_json(res.to_json()))
    return EXIT_OK


def cmd_validate(cfg: RunConfig) -> int:
    A = load_tensor(cfg)
    rep = validity(A, cfg.params["L"])
    _emit(cfg, dump_json(rep.to_json()))
    return EXIT_OK if rep.valid else EXIT_INVARIANT


def cmd_cohomology(cfg: RunConfig) -> int:
    G = parse_group(cfg.params["G"])
    H = cohomology_group(G, cfg.params["n"])
    _emit(cfg, dump_json(H.to_json()))
    return EXIT_OK


def cmd_lindblad(cfg: RunConfig) -> int:
    P = cfg.params
    rep = gap_ssb_experiment(P["family"], parse_range(P["L"]), P["gamma"])
    _emit(cfg, write_csv(["L", "gap", "steady_dim", "C2", "D1", "D3"], rep.to_csv_rows()))
    if not rep.predicate:
        print(f"gap/SSB predicate violated for family {P['family']}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


COMMANDS = {
    "fixtures": cmd_fixtures,
    "sweep": cmd_sweep,
    "evolve": cmd_evolve,
    "diagnose": cmd_diagnose,
    "classify": cmd_classify,
    "validate": cmd_validate,
    "cohomology": cmd_cohomology,
    "lindblad": cmd_lindblad,
}


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="RNG seed for randomized fixtures")
    common.add_argument("--out", default=argparse.SUPPRESS, help="write output to this file instead of stdout")
    common.add_argument("--format", choices=["json", "csv"], default=argparse.SUPPRESS, help="output format")

    p = _Parser(prog="mspt", description="Mixed-state SPT numerics on MPDOs.", parents=[common])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add = sub.add_parser
    sub.add_parser = lambda *a, **k: _add(*a, parents=[common], **k)

    def tensor_args(s):
        s.add_argument("--tensor", help="tensor JSON file")
        s.add_argument("--fixture", help="named fixture, e.g. cluster, dephased-cluster:p=0.5")

    s = sub.add_parser("fixtures", help="emit a named tensor as JSON")
    s.add_argument("name", nargs="?")
    s.add_argument("--list", action="store_true")

    s = sub.add_parser("sweep", help="transfer spectrum along a channel-strength grid")
    tensor_args(s)
    s.add_argument("--channel", default="dephasing", help="channel family; p is filled in from the grid")
    s.add_argument("--p-start", type=float, default=0.0)
    s.add_argument("--p-stop", type=float, default=0.5)
    s.add_argument("--p-step", type=float, default=0.05)
    s.add_argument("--k", type=int, default=4, help="eigenvalues per grid point")
    s.add_argument("--which", choices=["E1", "E2"], default="E2")
    s.add_argument("--jobs", type=int, default=1)

    s = sub.add_parser("evolve", help="apply a translation-invariant channel or circuit")
    tensor_args(s)
    s.add_argument("--channel", help="e.g. dephasing:p=0.5, zz, identity")
    s.add_argument("--offset", type=int, default=0)
    s.add_argument("--circuit", help="circuit JSON; each gate's pos is its layer offset")
    s.add_argument("--d-site", type=int)

    s = sub.add_parser("diagnose", help="SSB diagnostics and SSB-pattern classification")
    tensor_args(s)
    s.add_argument("--spec", help="symmetry spec: z2, cluster, even-z2, odd-dephased, ghz-mix:K")
    s.add_argument("--d-site", type=int)

    s = sub.add_parser("classify", help="cohomology classification of mixed-state SPT phases")
    s.add_argument("--K", required=True)
    s.add_argument("--G", required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--with-T", action="store_true")
    s.add_argument("--action", default="id", help="id, inv, or a JSON |G|×|K| permutation table")

    s = sub.add_parser("validate", help="dense density-matrix validity at ring length L")
    tensor_args(s)
    s.add_argument("--L", type=int, required=True)

    s = sub.add_parser("cohomology", help="H^n(G, U(1))")
    s.add_argument("--G", required=True)
    s.add_argument("--n", type=int, required=True)

    s = sub.add_parser("lindblad", help="dissipative gap and steady-state SSB per chain length")
    s.add_argument("--family", choices=FAMILIES, required=True)
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--L", default="2..5")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    d = vars(ns).copy()
    cmd = d.pop("command")
    seed = d.pop("seed", 0)
    out = d.pop("out", None)
    fmt = d.pop("format", None)
    inputs = {k: d.pop(k) for k in ("tensor", "fixture", "circuit") if k in d}
    return RunConfig(cmd, inputs, d, seed, out, fmt)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    cfg = config_from_args(ns)
    try:
        return COMMANDS[cfg.command](cfg)
    except (UsageError, SchemaError, InvalidGroup, InvalidAction, TPViolation, FileNotFoundError, KeyError) as exc:
        print(f"mspt {cfg.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalFailure, DenseCapExceeded, CapExceeded, InvalidTensor, np.linalg.LinAlgError) as exc:
        print(f"mspt {cfg.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InvariantViolation as exc:
        print(f"mspt {cfg.command}: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        print(f"mspt {cfg.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
