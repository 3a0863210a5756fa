"""Command-line frontend: evolve, complexity, simulate, reconstruct, protocol.

Exit codes: 0 success, 2 malformed input, 3 reconstruction or diagnostic
failure.  All stochastic commands require --seed and are byte-reproducible.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import complexity as cx
from . import io as pio
from .core import PureState
from .errors import DegeneracyError, IncompleteDesignError, InconsistencyError
from .jc import JCParams, evolve
from .measurement import (
    PreparationSequence,
    StateEnsemble,
    eavesdrop_report,
    pauli_bank,
    prepare_sequence,
    register,
    sequence_multiplicity,
)
from .tomography import (
    BornPairSampler,
    RecordingSampler,
    ReplaySampler,
    canonical_state,
    full_reconstruct,
)

INPUT_ERROR = 2
DIAGNOSTIC_ERROR = 3


def _budget_from_args(args) -> cx.SeriesPlan:
    if args.events_per_series is not None:
        n = cx.QUQUART_SERIES
        return cx.SeriesPlan(n, args.events_per_series, n * args.events_per_series)
    err = cx.ErrorSpec(args.error_target)
    return cx.ququart_series_plan(err)[1]


# -- evolve -------------------------------------------------------------------


def cmd_evolve(args) -> int:
    state = pio.state_from_dict(pio.read_json(args.state))
    params = JCParams(omega=args.omega, xi=args.xi, n_max=state.n_max)
    evolved = evolve(state, params, args.time)
    pio.write_json(pio.state_to_dict(evolved), args.out)
    if args.populations:
        pops = np.abs(evolved.amplitudes) ** 2
        with open(args.populations, "w") as fh:
            fh.write("atom_level,fock_index,population\n")
            for k in range(2):
                for n in range(state.n_max + 1):
                    fh.write(f"{k},{n},{format(pops[k, n], '.17g')}\n")
    return 0


# -- complexity ---------------------------------------------------------------


def _plan_dict(bits: float, plan: cx.SeriesPlan) -> dict:
    return {
        "bits": bits,
        "total_events": plan.total_events,
        "series": [
            {"id": i + 1, "events": plan.events_per_series}
            for i in range(plan.num_series)
        ],
    }


def _print_plan(label: str, bits, plan: cx.SeriesPlan | None) -> None:
    if plan is None:
        print(f"{label:<22} bits={'-inf':>10}  events=0")
        return
    bits_txt = f"{bits:10.4f}"
    print(
        f"{label:<22} bits={bits_txt}  events={plan.total_events}"
        f"  series={plan.num_series} x {plan.events_per_series}"
    )


def cmd_complexity(args) -> int:
    err = cx.ErrorSpec(args.error_target)
    out: dict = {"target": args.target, "error_target": args.error_target}
    if args.target == "ququart":
        lo, hi = cx.ququart_series_plan(err)
        bounds = cx.ququart_complexity_bounds(err)
        _print_plan("ququart infimum", bounds.inf.bits, lo)
        _print_plan("ququart supremum", bounds.sup.bits, hi)
        out["budgets"] = [
            {"bound": "infimum", **_plan_dict(bounds.inf.bits, lo)},
            {"bound": "supremum", **_plan_dict(bounds.sup.bits, hi)},
        ]
    elif args.target == "prior":
        c, plan = cx.prior_knowledge_complexity(err)
        _print_plan("prior knowledge", c.bits, plan)
        out.update(_plan_dict(c.bits, plan))
    elif args.target == "qubit":
        dp, d1, d2 = args.bloch
        c = cx.qubit_state_complexity(dp, d1, d2, err)
        plan = cx.SeriesPlan.from_complexity(c, 3)
        _print_plan("qubit (3 series)", c.bits, plan)
        out.update(_plan_dict(c.bits, plan))
    else:  # bernoulli
        try:
            c = cx.bernoulli_complexity(args.p, err)
        except DegeneracyError:
            _print_plan("bernoulli", None, None)
            out.update({"bits": None, "total_events": 0, "series": []})
            if args.json:
                pio.write_json(out, args.json)
            return 0
        plan = cx.SeriesPlan.from_complexity(c, 1)
        _print_plan("bernoulli", c.bits, plan)
        out.update(_plan_dict(c.bits, plan))
    if args.json:
        pio.write_json(out, args.json)
    return 0


# -- simulate / reconstruct -----------------------------------------------------


def cmd_simulate(args) -> int:
    params = pio.params_from_dict(pio.read_json(args.params))
    budget = _budget_from_args(args)
    rho = canonical_state(params)
    sampler = RecordingSampler(BornPairSampler(rho, seed=args.seed))
    full_reconstruct(sampler, budget=budget, mode=args.mode)
    detector_ids = np.concatenate(
        [np.full(entry["outcomes"].size, entry["series"]) for entry in sampler.log]
    )
    outcomes = np.concatenate([entry["outcomes"] for entry in sampler.log])
    pio.write_event_csv(args.out, detector_ids, outcomes)
    if args.manifest:
        manifest = {
            "seed": args.seed,
            "mode": args.mode,
            "events_per_series": budget.events_per_series,
            "series": [
                {
                    "series": entry["series"],
                    "atom_obs": pio.matrix_to_dict(entry["atom_obs"]),
                    "field_obs": pio.matrix_to_dict(entry["field_obs"]),
                }
                for entry in sampler.log
            ],
        }
        pio.write_json(manifest, args.manifest)
    return 0


def _diagnostics_out(args, payload: dict) -> None:
    if args.out:
        pio.write_json(payload, args.out)
    print(json.dumps(payload, default=str), file=sys.stderr)


def cmd_reconstruct(args) -> int:
    if args.exact:
        if not args.params:
            raise ValueError("--exact needs --params")
        params = pio.params_from_dict(pio.read_json(args.params))
        sampler = BornPairSampler(canonical_state(params))
        try:
            result = full_reconstruct(sampler, mode=args.mode, exact=True)
        except (InconsistencyError, IncompleteDesignError) as exc:
            _diagnostics_out(args, {"error": str(exc)})
            return DIAGNOSTIC_ERROR
        pio.write_json(pio.result_to_dict(result), args.out)
        return 0

    if not args.events:
        raise ValueError("need --events CSV or --exact with --params")
    detector_ids, outcomes = pio.read_event_csv(args.events)
    by_series: dict[int, np.ndarray] = {}
    for series in np.unique(detector_ids):
        by_series[int(series)] = outcomes[detector_ids == series]
    sizes = {v.size for v in by_series.values()}
    if len(sizes) != 1:
        raise ValueError(f"series have unequal event counts {sorted(sizes)}")
    events_per_series = sizes.pop()
    n_series = 5 if args.mode == "minimal5" else 9
    expected = set(range(n_series + (2 if args.mode == "minimal5" else 0)))
    if set(by_series) != expected:
        raise ValueError(
            f"event log has series {sorted(by_series)}, expected {sorted(expected)}"
        )
    budget = cx.SeriesPlan(n_series, events_per_series, n_series * events_per_series)
    sampler = ReplaySampler(by_series)
    try:
        result = full_reconstruct(sampler, budget=budget, mode=args.mode)
    except (InconsistencyError, IncompleteDesignError) as exc:
        _diagnostics_out(args, {"error": str(exc)})
        return DIAGNOSTIC_ERROR

    if args.manifest:
        manifest = pio.read_json(args.manifest)
        recorded = {int(s["series"]): s for s in manifest["series"]}
        for request in sampler.requests:
            entry = recorded.get(int(request["series"]))
            if entry is None:
                _diagnostics_out(
                    args, {"error": f"manifest misses series {request['series']}"}
                )
                return DIAGNOSTIC_ERROR
            for key in ("atom_obs", "field_obs"):
                stored = pio.matrix_from_dict(entry[key])
                if np.max(np.abs(stored - request[key])) > 1e-9:
                    _diagnostics_out(
                        args,
                        {
                            "error": "recomputed detectors disagree with manifest",
                            "series": int(request["series"]),
                            "observable": key,
                        },
                    )
                    return DIAGNOSTIC_ERROR
    pio.write_json(pio.result_to_dict(result), args.out)
    return 0


# -- protocol -------------------------------------------------------------------


def _qubit_ensemble() -> StateEnsemble:
    return StateEnsemble(
        (PureState(np.array([1, 0], dtype=complex)), PureState(np.array([0, 1], dtype=complex)))
    )


def cmd_protocol(args) -> int:
    ensemble = _qubit_ensemble()
    weights = np.asarray(args.weights, dtype=float)
    bank = pauli_bank()
    k = args.events

    if args.scenario == "transfer":
        seq = prepare_sequence(ensemble, weights, k, "iid", args.seed)
        record = register(seq, ensemble, bank, 3, args.seed)
        sub_bank = bank
    elif args.scenario in ("analysis", "eavesdrop"):
        policy = "balanced"
        parts = [
            prepare_sequence(ensemble, weights, k, policy, args.seed, stream=10 + i)
            for i in range(3)
        ]
        labels = np.concatenate([p.labels for p in parts])
        seq = PreparationSequence(labels, policy, args.seed)
        record = register(seq, ensemble, bank, [1, 2, 3], args.seed)
        sub_bank = bank
    else:
        raise ValueError(f"unknown scenario {args.scenario!r}")

    report = eavesdrop_report(seq, record, ensemble, sub_bank)
    payload = {
        "scenario": args.scenario,
        "seed": args.seed,
        "events": len(seq),
        **report.to_json_dict(),
        "sequence_multiplicity": sequence_multiplicity(seq.counts(ensemble.size)),
    }
    pio.write_json(payload, args.out)
    print(
        f"{args.scenario}: nondemolition_candidate={report.nondemolition_candidate} "
        f"basis_verdict={report.basis_verdict}"
    )
    return 0


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pairtomo",
        description="Qubit-pair measurement simulation and state reconstruction",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="propagate an atom-field state")
    p.add_argument("--state", required=True, help="input state JSON")
    p.add_argument("--xi", type=float, required=True, help="coupling (rad/time)")
    p.add_argument("--omega", type=float, default=1.0, help="mode frequency (rad/time)")
    p.add_argument("--time", type=float, required=True)
    p.add_argument("--out", required=True, help="evolved state JSON")
    p.add_argument("--populations", help="optional CSV of |phi|^2")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("complexity", help="event budgets for measurement tasks")
    p.add_argument("--target", choices=["qubit", "ququart", "prior", "bernoulli"], required=True)
    p.add_argument("--error-target", type=float, default=0.1, dest="error_target")
    p.add_argument("--p", type=float, default=0.5, help="bernoulli probability")
    p.add_argument(
        "--bloch", type=float, nargs=3, default=[0.0, 0.0, 0.0], metavar=("DP", "D1", "D2")
    )
    p.add_argument("--json", help="write the budget as JSON")
    p.set_defaults(func=cmd_complexity)

    p = sub.add_parser("simulate", help="sample a pair-tomography event log")
    p.add_argument("--params", required=True, help="canonical parameters JSON")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--mode", choices=["minimal5", "full9"], default="minimal5")
    p.add_argument("--error-target", type=float, default=0.1, dest="error_target")
    p.add_argument("--events-per-series", type=int, dest="events_per_series")
    p.add_argument("--out", required=True, help="event CSV path")
    p.add_argument("--manifest", help="detector manifest JSON")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="reconstruct a state from events or exactly")
    p.add_argument("--events", help="event CSV from simulate")
    p.add_argument("--manifest", help="manifest JSON to verify against")
    p.add_argument("--exact", action="store_true", help="use Born probabilities directly")
    p.add_argument("--params", help="canonical parameters JSON (with --exact)")
    p.add_argument("--mode", choices=["minimal5", "full9"], default="minimal5")
    p.add_argument("--out", required=True, help="result JSON path")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("protocol", help="run a preparator/registrator scenario")
    p.add_argument("--scenario", choices=["transfer", "analysis", "eavesdrop"], required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--events", type=int, default=10000, help="events per series")
    p.add_argument("--weights", type=float, nargs=2, default=[0.5, 0.5])
    p.add_argument("--out", required=True, help="report JSON path")
    p.set_defaults(func=cmd_protocol)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InconsistencyError, IncompleteDesignError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DIAGNOSTIC_ERROR
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
