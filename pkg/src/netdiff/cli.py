"""Command-line front end.

Subcommands: ``simulate`` (scenario datasets), ``fit-test`` (fit the
mixture model and run the global/local tests plus baselines), ``study``
(replicated error-rate panels), ``predict`` (group probabilities from a
fitted chain), ``diagnose`` (recompute convergence diagnostics).

Every command writes a ``run_manifest.json`` capturing the resolved
configuration, seeds, input hashes and output paths. Exit codes: 0 on
success, 1 on runtime failure, 2 on usage or validation problems.
"""

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .baselines import fisher_edge_scan, manova_summary_test
from .chains import load_chain, pool_chains, save_chain
from .datasets import load_dataset, save_dataset
from .diagnostics import ess, split_psrf
from .errors import FormatError, SamplerError
from .figures import (
    difference_heatmap,
    edge_matrix_heatmap,
    predictive_violins,
    probability_histograms,
)
from .gibbs import GibbsConfig, Hyperparameters, run_chain
from .graphs import SUMMARY_NAMES
from .simulate import run_study, scenario_by_name, two_component_separation
from .testing import build_report, matrix_form, predict_group

STUDY_PRESETS = {
    "table1-desk": {"scenarios": ["scenario1-dependent", "scenario1-independent"], "replicates": 25},
    "table1-full": {"scenarios": ["scenario1-dependent", "scenario1-independent"], "replicates": 100},
    "samplesize-sweep": {
        "scenarios": ["scenario1-dependent", "scenario1-independent"],
        "replicates": 25,
        "sizes": [20, 40, 100],
    },
    "scenario2-signature": {
        "scenarios": ["scenario2"],
        "replicates": 10,
        "methods": ["mixture"],
        "gibbs_extra": {"store_predictive": True},
    },
}

DESK_STUDY_ITERS = 1500
DESK_STUDY_BURN = 500


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _resolve_seed(args):
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("NETDIFF_SEED")
    return int(env) if env else 0


def _guard_outputs(out_dir, names, force):
    existing = [n for n in names if os.path.exists(os.path.join(out_dir, n))]
    if existing and not force:
        raise FormatError(
            f"refusing to overwrite {existing} in {out_dir}; pass --force to allow"
        )


def _write_manifest(out_dir, command, resolved, seeds, inputs, outputs, started):
    manifest = {
        "command": command,
        "argv": sys.argv[1:],
        "resolved_config": resolved,
        "seeds": seeds,
        "input_hashes": {p: _sha256(p) for p in inputs if p and os.path.isfile(p)},
        "outputs": sorted(outputs),
        "wall_clock_sec": round(time.time() - started, 3),
        "version": __version__,
    }
    path = os.path.join(out_dir, "run_manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
    return path


def _load_config_file(path):
    if not path:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _layered(defaults, config_file, flags):
    """Flags beat the config file, which beats built-in defaults."""
    resolved = dict(defaults)
    resolved.update({k: v for k, v in config_file.items() if k in resolved})
    resolved.update({k: v for k, v in flags.items() if v is not None})
    return resolved


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(args):
    started = time.time()
    seed = _resolve_seed(args)
    spec, dataset, delta = scenario_by_name(args.scenario, seed, args.n)
    os.makedirs(args.out_dir, exist_ok=True)
    names = ["networks.csv", "groups.csv", "blocks.csv", "truth.csv", "scenario.json"]
    _guard_outputs(args.out_dir, names, args.force)
    paths = {n: os.path.join(args.out_dir, n) for n in names}
    save_dataset(dataset, paths["networks.csv"], paths["groups.csv"], paths["blocks.csv"])
    np.savetxt(paths["truth.csv"], delta, fmt="%d")
    spec.to_json(paths["scenario.json"])
    outputs = list(paths.values())

    from .simulate import scenario_state
    from .model import group_edge_probs

    state = scenario_state(spec)
    true_diff = group_edge_probs(state, 2) - group_edge_probs(state, 1)
    fig = difference_heatmap(
        true_diff, spec.v, os.path.join(args.out_dir, "true_difference.png"),
        "true difference in group edge probabilities",
    )
    outputs.append(fig)
    outputs.append(
        _write_manifest(
            args.out_dir, "simulate",
            {"scenario": args.scenario, "n": spec.n, "v": spec.v},
            {"seed": seed}, [], outputs, started,
        )
    )
    return 0


# ---------------------------------------------------------------------------
# fit-test
# ---------------------------------------------------------------------------

_HYPER_DEFAULTS = {k: getattr(Hyperparameters(), k) for k in (
    "h_max", "r_max", "beta_a", "beta_b", "z_mean", "z_var", "mig_a1", "mig_a2", "prior_h1")}
_GIBBS_DEFAULTS = {"n_iter": 5000, "burn_in": 1000, "thin": 1, "n_chains": 1, "pg_exact": True}
_TEST_DEFAULTS = {"epsilon": 0.1, "threshold": 0.9, "manova_alpha": 0.1, "fdr_q": 0.1}


def cmd_fit_test(args):
    started = time.time()
    seed = _resolve_seed(args)
    config_file = _load_config_file(args.config)
    hyper_kwargs = _layered(
        _HYPER_DEFAULTS, config_file,
        {k: getattr(args, k) for k in _HYPER_DEFAULTS},
    )
    gibbs_kwargs = _layered(
        _GIBBS_DEFAULTS, config_file,
        {
            "n_iter": args.iters, "burn_in": args.burn_in, "thin": args.thin,
            "n_chains": args.chains, "pg_exact": (False if args.pg_series else None),
        },
    )
    tests_kwargs = _layered(
        _TEST_DEFAULTS, config_file,
        {"epsilon": args.epsilon, "threshold": args.threshold,
         "manova_alpha": args.manova_alpha, "fdr_q": args.fdr_q},
    )

    dataset = load_dataset(args.networks, args.groups, args.blocks)
    hyper = Hyperparameters(**hyper_kwargs)
    config = GibbsConfig(seed=seed, **gibbs_kwargs)

    os.makedirs(args.out_dir, exist_ok=True)
    _guard_outputs(args.out_dir, ["test_report.json"], args.force)
    outputs = []

    chains = []
    for c in range(config.n_chains):
        chain = run_chain(dataset, hyper, config, chain_index=c)
        cdir = os.path.join(args.out_dir, f"chain-{c:02d}")
        save_chain(chain, cdir)
        outputs.extend(os.path.join(cdir, f) for f in sorted(os.listdir(cdir)))
        chains.append(chain)
    pooled = pool_chains(chains)

    pvals, bh_reject, calibrated = fisher_edge_scan(dataset, q=tests_kwargs["fdr_q"])
    baselines = {
        "fisher": {
            "p_values": pvals.tolist(),
            "bh_rejected": bh_reject.astype(int).tolist(),
            "calibrated": calibrated.tolist(),
            "fdr_q": tests_kwargs["fdr_q"],
        }
    }
    try:
        stat, pval, reject, dropped = manova_summary_test(dataset, tests_kwargs["manova_alpha"])
        baselines["manova"] = {
            "statistic": stat, "p_value": pval, "reject": bool(reject),
            "dropped_statistics": dropped, "alpha": tests_kwargs["manova_alpha"],
        }
    except ValueError as exc:
        baselines["manova"] = {"failed": str(exc)}

    report = build_report(
        pooled,
        epsilon=tests_kwargs["epsilon"],
        global_threshold=tests_kwargs["threshold"],
        local_threshold=tests_kwargs["threshold"],
        target_fdr=args.target_fdr,
        baselines=baselines,
    )
    report_path = os.path.join(args.out_dir, "test_report.json")
    report.to_json(report_path)
    outputs.append(report_path)

    # Matrix-form CSVs for the per-edge quantities.
    v = dataset.v
    mean_diff = pooled.edge_prob_g2.mean(axis=0) - pooled.edge_prob_g1.mean(axis=0)
    for name, values in (
        ("local_probability_matrix.csv", report.local_pr),
        ("edge_prob_difference_matrix.csv", mean_diff),
        ("calibrated_fisher_matrix.csv", calibrated),
    ):
        path = os.path.join(args.out_dir, name)
        np.savetxt(path, matrix_form(values, v), delimiter=",")
        outputs.append(path)

    diag = _diagnostics_payload(pooled)
    diag_path = os.path.join(args.out_dir, "diagnostics.json")
    with open(diag_path, "w") as fh:
        json.dump(diag, fh, indent=2)
    outputs.append(diag_path)

    if not args.no_figures:
        outputs.append(edge_matrix_heatmap(
            report.local_pr, v, os.path.join(args.out_dir, "local_probability.png"),
            "posterior probability of a local difference",
        ))
        outputs.append(difference_heatmap(
            mean_diff, v, os.path.join(args.out_dir, "edge_prob_difference.png"),
            "posterior mean difference in group edge probabilities",
        ))
        outputs.append(edge_matrix_heatmap(
            calibrated, v, os.path.join(args.out_dir, "calibrated_fisher.png"),
            "calibrated per-edge exact-test scores",
        ))
        if pooled.pred_summaries is not None:
            outputs.append(predictive_violins(
                pooled.pred_summaries, os.path.join(args.out_dir, "predictive_summaries.png"),
            ))

    resolved = {"hyper": hyper_kwargs, "gibbs": {**gibbs_kwargs, "seed": seed},
                "tests": tests_kwargs, "target_fdr": args.target_fdr}
    inputs = [args.networks, args.groups, args.blocks, args.config]
    outputs.append(_write_manifest(args.out_dir, "fit-test", resolved,
                                   {"seed": seed}, inputs, outputs, started))
    return 0


def _diagnostics_payload(chain, n_splits=4):
    psrfs, esses = {}, {}
    for name, draws in chain.monitored().items():
        psrfs[name] = split_psrf(draws, n_splits)
        esses[name] = ess(draws)
    pvals = np.array(list(psrfs.values()))
    evals = np.array(list(esses.values()))
    return {
        "n_stored": chain.n_stored,
        "n_splits": n_splits,
        "max_psrf": float(pvals.max()),
        "median_psrf": float(np.median(pvals)),
        "median_ess": float(np.median(evals)),
        "min_ess": float(evals.min()),
        "psrf": {k: round(float(v), 5) for k, v in psrfs.items()},
        "ess": {k: round(float(v), 2) for k, v in esses.items()},
    }


# ---------------------------------------------------------------------------
# study
# ---------------------------------------------------------------------------

def cmd_study(args):
    started = time.time()
    if args.preset not in STUDY_PRESETS:
        raise FormatError(f"unknown preset {args.preset!r}; choose from {sorted(STUDY_PRESETS)}")
    preset = STUDY_PRESETS[args.preset]
    seed = _resolve_seed(args)
    replicates = args.replicates or preset["replicates"]
    methods = preset.get("methods", ["mixture", "fisher", "manova"])
    gibbs_kwargs = {
        "n_iter": args.iters or DESK_STUDY_ITERS,
        "burn_in": args.burn_in or DESK_STUDY_BURN,
        **preset.get("gibbs_extra", {}),
    }

    os.makedirs(args.out_dir, exist_ok=True)
    _guard_outputs(args.out_dir, ["score_panels.json"], args.force)
    outputs = []

    sizes = preset.get("sizes", [None])
    all_panels = {}
    prob_sets = {}
    replicate_rows = []
    for size in sizes:
        panels, records = run_study(
            preset["scenarios"], replicates, methods=methods,
            gibbs_kwargs=gibbs_kwargs, n=size, base_seed=seed, threads=args.threads,
        )
        label = f"n={size}" if size else "default-n"
        all_panels[label] = {m: p.to_dict() for m, p in panels.items()}
        for rec in records:
            row = {"panel": label, "scenario": rec["scenario"], "replicate": rec["replicate"]}
            mix = rec.get("mixture", {})
            if "global_pr" in mix:
                row["global_pr"] = mix["global_pr"]
                key = f"{rec['scenario']} {label}" if size else rec["scenario"]
                prob_sets.setdefault(key, []).append(mix["global_pr"])
                row["n_local_rejections"] = int(np.sum(mix["local_reject"]))
            if "separation_g1" in mix:
                row["separation_g1"] = mix["separation_g1"]
                row["separation_g2"] = mix["separation_g2"]
            if "manova" in rec and "p_value" in rec["manova"]:
                row["manova_p"] = rec["manova"]["p_value"]
            if "fisher" in rec:
                row["fisher_rejections"] = int(np.sum(rec["fisher"]["local_reject"]))
            replicate_rows.append(row)

    panel_path = os.path.join(args.out_dir, "score_panels.json")
    with open(panel_path, "w") as fh:
        json.dump(all_panels, fh, indent=2)
    outputs.append(panel_path)

    ledger_path = os.path.join(args.out_dir, "replicates.csv")
    cols = sorted({k for row in replicate_rows for k in row})
    with open(ledger_path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in replicate_rows:
            fh.write(",".join(str(row.get(c, "")) for c in cols) + "\n")
    outputs.append(ledger_path)

    if prob_sets:
        outputs.append(probability_histograms(
            prob_sets, os.path.join(args.out_dir, "global_probabilities.png"),
        ))

    resolved = {"preset": args.preset, "replicates": replicates,
                "methods": methods, "gibbs": gibbs_kwargs, "threads": args.threads}
    outputs.append(_write_manifest(args.out_dir, "study", resolved,
                                   {"seed": seed}, [], outputs, started))
    return 0


# ---------------------------------------------------------------------------
# predict / diagnose
# ---------------------------------------------------------------------------

def cmd_predict(args):
    started = time.time()
    chain = _load_fit(args.chain_dir)
    from .datasets import load_networks

    networks, _ = load_networks(args.networks)
    probs = predict_group(chain, networks)
    np.savetxt(args.out, probs, fmt="%.6f", header="prob_group2", comments="")
    out_dir = os.path.dirname(os.path.abspath(args.out)) or "."
    _write_manifest(out_dir, "predict", {"chain_dir": args.chain_dir},
                    {}, [args.networks], [args.out], started)
    return 0


def cmd_diagnose(args):
    started = time.time()
    chain = _load_fit(args.chain_dir)
    payload = _diagnostics_payload(chain, n_splits=args.splits)
    with open(args.out, "w") as fh:
        json.dump(payload, fh, indent=2)
    out_dir = os.path.dirname(os.path.abspath(args.out)) or "."
    _write_manifest(out_dir, "diagnose", {"chain_dir": args.chain_dir, "splits": args.splits},
                    {}, [], [args.out], started)
    return 0


def _load_fit(chain_dir):
    """A chain directory, or a fit-test output directory of chain-* subdirs."""
    if os.path.exists(os.path.join(chain_dir, "meta.json")):
        return load_chain(chain_dir)
    subdirs = sorted(
        os.path.join(chain_dir, d) for d in os.listdir(chain_dir) if d.startswith("chain-")
    )
    if not subdirs:
        raise FormatError(f"{chain_dir} holds no chain output")
    return pool_chains([load_chain(d) for d in subdirs])


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="netdiff",
        description="Bayesian testing of group differences in populations of binary networks",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a scenario dataset")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit-test", help="fit the model and run all tests")
    p.add_argument("--networks", required=True)
    p.add_argument("--groups", required=True)
    p.add_argument("--blocks")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--config", help="JSON file of defaults (flags win)")
    for name in _HYPER_DEFAULTS:
        kind = int if name in ("h_max", "r_max") else float
        p.add_argument(f"--{name.replace('_', '-')}", type=kind, dest=name)
    p.add_argument("--iters", type=int)
    p.add_argument("--burn-in", type=int, dest="burn_in")
    p.add_argument("--thin", type=int)
    p.add_argument("--chains", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--pg-series", action="store_true",
                   help="use the truncated-series auxiliary sampler (cross-checking)")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--threshold", type=float)
    p.add_argument("--target-fdr", type=float, dest="target_fdr")
    p.add_argument("--fdr-q", type=float, dest="fdr_q")
    p.add_argument("--manova-alpha", type=float, dest="manova_alpha")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_fit_test)

    p = sub.add_parser("study", help="replicated error-rate study")
    p.add_argument("--preset", required=True)
    p.add_argument("--replicates", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--burn-in", type=int, dest="burn_in")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("predict", help="group probabilities for new networks")
    p.add_argument("--chain-dir", required=True)
    p.add_argument("--networks", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("diagnose", help="recompute convergence diagnostics")
    p.add_argument("--chain-dir", required=True)
    p.add_argument("--splits", type=int, default=4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SamplerError as exc:
        print(f"sampler failure: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # keep scripts' exit codes honest
        print(f"failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
