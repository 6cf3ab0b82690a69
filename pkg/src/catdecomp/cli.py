"""``catdecomp`` command line.

Every command writes one JSON report (sorted keys, no timestamps) to
stdout or ``--out``. Exit codes: 0 computed, 2 malformed input or usage,
3 numerical failure. Verdicts never change the exit code.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .catalysis import CatalysisInstance, check_catalytic, ensemble_reduction, mutual_information
from .fixed_points import classify_channel_output, structure_decompose
from .generators import (
    PlantSpec,
    example_states,
    planted_fixed_point_channel,
    planted_pcq_state,
    random_channel,
)
from .io import (
    WireFormatError,
    channel_to_wire,
    matrix_to_wire,
    state_to_wire,
    wire_to_channel,
    wire_to_state,
)
from .koashi_imoto import classify_bipartite, ki_decompose, steered_family

log = logging.getLogger("catdecomp")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class InputError(Exception):
    pass


def _parse_dims(text: str) -> list:
    try:
        dims = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"bad dimension list {text!r}") from None
    if not dims or min(dims) < 1:
        raise InputError(f"bad dimension list {text!r}")
    return dims


def _load(args):
    if args.inp is None:
        raise InputError("--in is required")
    try:
        with open(args.inp, "rb") as f:
            raw = f.read()
    except OSError as exc:
        raise InputError(str(exc)) from None
    try:
        obj = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise InputError(f"invalid JSON: {exc}") from None
    return obj, hashlib.sha256(raw).hexdigest()


def _bipartition(dims, args) -> tuple:
    if args.cut is not None:
        cut = _parse_dims(args.cut)
        if int(np.prod(cut)) != int(np.prod(dims)):
            raise InputError(f"--cut {cut} does not match state dims {dims}")
        dims = cut
    k = args.cut_at if args.cut_at is not None else 1
    if len(dims) == 1 or not 1 <= k < len(dims):
        raise InputError(f"cannot split dims {dims} at {k}")
    return int(np.prod(dims[:k])), int(np.prod(dims[k:]))


def _ki_blocks(dec) -> list:
    return [{"dim_L": b.dim_L, "dim_R": b.dim_R, "probability": b.probability,
             "omega": matrix_to_wire(b.omega), "irreducible": b.irreducible}
            for b in dec.blocks]


def cmd_channel_fixed_points(args, rng):
    obj, digest = _load(args)
    ch = wire_to_channel(obj)
    st = structure_decompose(ch, tol=args.tol, rng=rng)
    return digest, {
        "dim_fixed_space": st.dimension(),
        "blocks": [{"dim_H": b.dim_H, "dim_L": b.dim_L, "state": matrix_to_wire(b.state),
                    "full_rank": b.full_rank, "residual": b.residual} for b in st.blocks],
        "residual": st.residual,
        "reconstruction_residual": st.wedderburn.reconstruction_residual,
        "notes": st.notes,
    }


def cmd_channel_classify(args, rng):
    obj, digest = _load(args)
    ch = wire_to_channel(obj)
    v = classify_channel_output(ch, tol=args.tol, rng=rng)
    out = {"verdict": v.verdict, "residual": v.residual, "warning": v.warning,
           "blocks": _ki_blocks(v.decomposition)}
    if v.witness is not None:
        out["witness"] = channel_to_wire(v.witness)
    return digest, out


def cmd_state_classify(args, rng):
    obj, digest = _load(args)
    rho, dims = wire_to_state(obj)
    cut = _bipartition(dims, args)
    v = classify_bipartite(rho, cut, tol=args.tol, rng=rng)
    out = {"verdict": v.verdict, "reason": v.reason, "residual": v.residual,
           "cut": list(cut), "probabilities": v.probabilities,
           "blocks": _ki_blocks(v.decomposition)}
    if v.witness_projectors is not None:
        out["witness_projectors"] = [matrix_to_wire(p) for p in v.witness_projectors]
    return digest, out


def cmd_state_ki(args, rng):
    obj, digest = _load(args)
    rho, dims = wire_to_state(obj)
    cut = _bipartition(dims, args)
    fam = steered_family(rho, cut)
    dec = ki_decompose(fam.states, rng=rng, weights=fam.weights, support_tol=args.tol)
    return digest, {"cut": list(cut), "family_size": len(fam.states), "trivial": dec.trivial,
                    "support_rank": dec.support_rank, "algebra_dim": dec.algebra_dim,
                    "residual": dec.residual, "blocks": _ki_blocks(dec)}


def _load_instance(args):
    obj, digest = _load(args)
    if not isinstance(obj, dict) or not {"rho_s", "lambda", "tau"} <= obj.keys():
        raise InputError("catalysis instance needs 'rho_s', 'lambda' and 'tau'")
    rho_s, _ = wire_to_state(obj["rho_s"])
    lam = wire_to_channel(obj["lambda"])
    tau, tdims = wire_to_state(obj["tau"])
    if len(tdims) == 1:
        d_c, d_e = tdims[0], 1
    elif len(tdims) == 2:
        d_c, d_e = tdims
    else:
        raise InputError("tau dims must be [d_C] or [d_C, d_E]")
    inst = CatalysisInstance(rho_s, lam, tau, d_c, d_e, tol=args.tol)
    return inst, digest


def cmd_catalysis_check(args, rng):
    inst, digest = _load_instance(args)
    r = check_catalytic(inst)
    return digest, {"catalytic": r.catalytic, "residual": r.residual, "trivial": r.trivial,
                    "gamma_distance": r.gamma_distance,
                    "factorization_residual": r.factorization_residual}


def cmd_catalysis_ensemble(args, rng):
    inst, digest = _load_instance(args)
    red = ensemble_reduction(inst, rng=rng)
    return digest, {
        "components": [{"probability": c.probability, "dims": list(c.dims),
                        "catalyst": matrix_to_wire(c.catalyst),
                        "channel": channel_to_wire(c.channel),
                        "factorization_residual": c.factorization_residual}
                       for c in red.components],
        "residual": red.residual,
        "probability_sum_error": red.probability_sum_error,
    }


def cmd_entropy_mi(args, rng):
    obj, digest = _load(args)
    rho, dims = wire_to_state(obj)
    cut = _bipartition(dims, args)
    return digest, {"cut": list(cut), "mi_bits": mutual_information(rho, cut)}


def _parse_blocks(text: str) -> list:
    try:
        return [tuple(int(x) for x in b.split("x")) for b in text.split(",")]
    except ValueError:
        raise InputError(f"bad block list {text!r}; expected e.g. 2x2,1x3") from None


def cmd_gen(args, rng):
    kind = args.kind
    if kind in ("extq", "bb84", "bell"):
        lam = None
        if args.lam is not None:
            try:
                lam = [float(x) for x in args.lam.split(",")]
            except ValueError:
                raise InputError("--lam must be comma-separated numbers") from None
        d = args.d if kind == "extq" else 2
        return None, state_to_wire(example_states(kind, d=d, lam=lam), [d, 2])
    if kind == "random-channel":
        ch = random_channel(args.d, args.d_out or args.d, args.rank, seed=args.seed)
        return None, channel_to_wire(ch)
    if kind == "planted-channel":
        ch, plant = planted_fixed_point_channel(PlantSpec(_parse_blocks(args.blocks), args.seed))
        return None, {**channel_to_wire(ch),
                      "plant": [{"dim_H": b.dim_a, "dim_L": b.dim_b, "state": matrix_to_wire(b.state)}
                                for b in plant]}
    if kind == "planted-pcq":
        st, dims, plant = planted_pcq_state(PlantSpec(_parse_blocks(args.blocks), args.seed))
        return None, {**state_to_wire(st, list(dims)),
                      "plant": [{"dim_L": b.dim_a, "dim_R": b.dim_b, "probability": b.probability}
                                for b in plant]}
    raise InputError(f"unknown generator {kind!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--in", dest="inp", metavar="FILE")
    common.add_argument("--out", metavar="FILE")
    common.add_argument("--cut", help="comma-separated factor dims, e.g. 2,2")
    common.add_argument("--cut-at", type=int, help="number of leading factors forming A (default 1)")
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--seed", type=int, default=0)

    p = argparse.ArgumentParser(prog="catdecomp", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    groups = p.add_subparsers(dest="group", required=True)

    def group(name, cmds):
        g = groups.add_parser(name).add_subparsers(dest="cmd", required=True)
        for cname, fn in cmds:
            g.add_parser(cname, parents=[common]).set_defaults(fn=fn, command=f"{name} {cname}")

    group("channel", [("fixed-points", cmd_channel_fixed_points), ("classify", cmd_channel_classify)])
    group("state", [("classify", cmd_state_classify), ("ki", cmd_state_ki)])
    group("catalysis", [("check", cmd_catalysis_check), ("ensemble", cmd_catalysis_ensemble)])
    group("entropy", [("mi", cmd_entropy_mi)])

    gen = groups.add_parser("gen", parents=[common])
    gen.add_argument("kind", choices=["extq", "bb84", "bell", "random-channel",
                                      "planted-channel", "planted-pcq"])
    gen.add_argument("--d", type=int, default=2)
    gen.add_argument("--d-out", type=int)
    gen.add_argument("--rank", type=int, default=2)
    gen.add_argument("--lam")
    gen.add_argument("--blocks", default="2x2,1x3")
    gen.set_defaults(fn=cmd_gen, command="gen")
    return p


def _configure_logging():
    level = os.environ.get("CATDECOMP_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, sort_keys=True) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def run(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    rng = np.random.default_rng(args.seed)
    report = {"command": args.command, "version": __version__, "seed": args.seed, "tol": args.tol}
    try:
        digest, body = args.fn(args, rng)
    except (RuntimeError, np.linalg.LinAlgError) as exc:
        # LinAlgError subclasses ValueError, so it is caught first
        log.error("numerical failure: %s", exc)
        report.update(status="numerical-failure", error=f"{type(exc).__name__}: {exc}")
        _emit(report, args.out)
        return EXIT_NUMERIC
    except (InputError, WireFormatError, ValueError) as exc:
        log.error("input error: %s", exc)
        report.update(status="input-error", error=str(exc))
        _emit(report, args.out)
        return EXIT_INPUT
    if digest is not None:
        report["inputs_digest"] = digest
    report["status"] = "ok"
    report.update(body)
    _emit(report, args.out)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
