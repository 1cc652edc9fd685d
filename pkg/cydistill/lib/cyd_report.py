# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
"""Render stage records as the text tables of report.txt."""
import cydistill.lib.cyd_common as cyd_common
import cydistill.lib.cyd_formula as cyd_formula
import cydistill.lib.cyd_moduli as cyd_moduli
import cydistill.lib.cyd_physics as cyd_physics
import cydistill.lib.cyd_stats as cyd_stats


def _num(value, digits=6):
    if value is None:
        return "-"

    return f"{value:.{digits}g}"


def _table(header, rows):
    return cyd_common.draw_table(header, rows, dtype=["t"] * len(header))


def _section(title, *blocks):
    return "\n".join([title, "=" * len(title)] + [b for b in blocks if b])


def curvature(records, meta):
    ours = _table(["k", "basis size", "sigma start %", "sigma final %"],
                  [[r["k"], r["basis_size"], _num(100 * r["sigma_initial"], 4),
                    _num(100 * r["sigma_final"], 4)] for r in records])
    ref = _table(["k", "basis size", "sigma % (reference)"],
                 [[r["k"], r["basis_size"], r["sigma"]]
                  for r in cyd_moduli.REFERENCE_CURVATURE])

    return _section("Curvature convergence", ours, "Reference:", ref)


def fit(records, meta):
    models = [r for r in records if r["kind"] in ("model", "quoted")]
    table = _table(["model", "params", "R^2", "RMSE"],
                   [[r["model_id"], r["n_params"], _num(r["r2"]),
                     _num(r["rmse"])] for r in models])
    blocks = [table]

    for r in records:
        if r["kind"] != "coefficients":
            continue

        ci = r.get("ci") or [[None, None]] * 5
        blocks.append(_table(
            ["term", "coefficient", "95% CI low", "95% CI high"],
            [[name, _num(c), _num(lo), _num(hi)] for name, c, (lo, hi) in
             zip(cyd_formula.FIVE_TERM_NAMES, r["c"], ci)]))

    blocks.append("Reference coefficients at psi=0: " + ", ".join(
        f"c{i}={c:+g}" for i, c in
        enumerate(cyd_formula.TABLE_COEFFICIENTS.c)))

    return _section("Accuracy vs model complexity", *blocks)


def ensemble(records, meta):
    summary = meta.get("summary", {})
    seeds = _table(["seed", "C", "test R^2", "RMSE", "expression"],
                   [[r["seed"], r["complexity"], _num(r["r2"]),
                     _num(r["rmse"]), r.get("infix", r["tree"])]
                    for r in records])
    n = len(records)
    motifs = _table(["motif", "seeds", "share %"],
                    [[m, c, _num(100 * c / n, 3) if n else "-"]
                     for m, c in summary.get("frequencies", {}).items()])
    stats = (f"test R^2 best {_num(summary.get('best_r2'))}, median"
             f" {_num(summary.get('median_r2'))}, worst"
             f" {_num(summary.get('worst_r2'))}; mean"
             f" {_num(summary.get('mean_r2'))} +/-"
             f" {_num(summary.get('std_r2'))}; R^2 > 0.999 in"
             f" {summary.get('n_above_999', 0)}/{n}")

    return _section("Symbolic regression ensemble", seeds, motifs, stats)


def trajectory(records, meta):
    traj = cyd_moduli.CoefficientTrajectory.from_records(records)
    failures = meta.get("failures") or {}
    note = "Failed psi: " + ", ".join(f"{k} ({v})" for k, v in
                                     failures.items()) if failures else ""

    return _section("Coefficient trajectories",
                    cyd_moduli.trajectory_table(traj), note, "Reference:",
                    cyd_moduli.trajectory_table(
                        cyd_moduli.reference_trajectory()))


def linear_fit(records, meta):
    return _section("Linear trajectory fit", _table(
        ["coefficient", "A", "B", "R^2"],
        [[r["coefficient"], _num(r["intercept"]), _num(r["slope"]),
          _num(r["r2"]) if r["r2"] is not None else "undefined"]
         for r in records]))


def modulation(records, meta):
    return _section("Modulation", _table(
        ["coefficient", "pattern"],
        [[r["coefficient"], r["label"]] for r in records]))


def error_budget(records, meta):
    ours = _table(["scan", "psi", "k", "teacher %", "student %",
                   "distillation %", "extrapolation %", "total %"],
                  [[r.get("scan", "psi"), r["psi"], r["k"],
                    _num(100 * r["teacher_sigma"], 4),
                    _num(100 * r["student_sigma"], 4),
                    _num(100 * r["distillation"], 4),
                    _num(100 * r["extrapolation"], 4),
                    _num(100 * r["total"], 4)] for r in records])
    decomposition = _table(
        ["psi", "teacher %", "symbolic %", "extrapolation %", "total %"],
        [[r["psi"], r["teacher"], r["distillation"], r["extrapolation"],
          r["total"]] for r in cyd_moduli.REFERENCE_ERROR_DECOMPOSITION])
    by_k = _table(["k", "teacher %", "student %", "distillation %"],
                  [[r["k"], r["teacher"], r["student"], r["distillation"]]
                   for r in cyd_moduli.REFERENCE_ERROR_BUDGET])

    return _section("Error budget", ours, "Reference:", decomposition,
                    by_k, f"Zero-shot transfer to psi=0.8 (reference):"
                          f" sigma ~{cyd_moduli.ZERO_SHOT_SIGMA_PCT:g}%")


def volume(records, meta):
    ours = _table(["source", "psi", "raw", "mc error", "normalized",
                   "agreement %", "vs teacher %"],
                  [[r["source"], r["psi"], _num(r["raw"]),
                    _num(r["mc_error"], 3), _num(r["normalized"]),
                    _num(r["agreement_pct"], 4),
                    _num(100 * r["relative_to_teacher"], 3)
                    if r.get("relative_to_teacher") is not None else "-"]
                   for r in records])
    raw, err = cyd_physics.VOLUME_REFERENCE_RAW

    return _section("Normalized volume", ours,
                    f"Reference: raw {raw} +/- {err}, normalized"
                    f" {cyd_physics.VOLUME_REFERENCE_NORMALIZED},"
                    f" literature {cyd_physics.VOLUME_REFERENCE:.4f}")


def yukawa(records, meta):
    return _section("Yukawa coupling", _table(
        ["psi", "kappa", "reference", "error %", "status"],
        [[r["psi"], _num(r["kappa"], 7), _num(r["reference"], 7),
          _num(r["error_pct"], 3), r["status"]] for r in records]))


def stats(records, meta):
    ref = cyd_stats.REFERENCE_STATS
    blocks = [_table(
        ["feature", "baseline R^2", "null mean R^2", "p-value", "B"],
        [[r["feature"], _num(r["baseline_r2"]), _num(r["null_mean_r2"]),
          _num(r["p_value"], 3), r["permutations"]]
         for r in records if r["kind"] == "permutation"])]
    loso = [r for r in records if r["kind"] == "loso"]

    if loso:
        nrmse = [100 * r["nrmse"] for r in loso]
        blocks.append(_table(
            ["left-out seed", "NRMSE %", "R^2"],
            [[r["left_out_seed"], _num(100 * r["nrmse"], 4), _num(r["r2"])]
             for r in loso]))
        blocks.append(f"LOSO NRMSE mean {sum(nrmse) / len(nrmse):.3f}%,"
                      f" worst {max(nrmse):.3f}%")

    for r in records:
        if r["kind"] == "residuals":
            blocks.append(_table(
                ["n", "mean", "std", "skewness", "excess kurtosis",
                 "2.5%", "97.5%"],
                [[r["n"], _num(r["mean"]), _num(r["std"]),
                  _num(r["skewness"]), _num(r["excess_kurtosis"]),
                  _num(r["q025"]), _num(r["q975"])]]))

    blocks.append(
        f"Reference: LOSO NRMSE {ref['loso_nrmse_pct'][0]} +/-"
        f" {ref['loso_nrmse_pct'][1]}% (worst"
        f" {ref['loso_worst_nrmse_pct']}%), null mean R^2"
        f" {ref['null_mean_r2']['p2']} (p2) /"
        f" {ref['null_mean_r2']['sigma3']} (sigma3), W ="
        f" {ref['shapiro_wilk_w']}, A^2 = {ref['anderson_darling_a2']}")

    return _section("Statistical validation", *blocks)


RENDERERS = (
    ("curvature.jsonl", curvature),
    ("fit.jsonl", fit),
    ("ensemble.jsonl", ensemble),
    ("trajectory.jsonl", trajectory),
    ("linear_fit.jsonl", linear_fit),
    ("modulation.jsonl", modulation),
    ("error_budget.jsonl", error_budget),
    ("volume.jsonl", volume),
    ("yukawa.jsonl", yukawa),
    ("stats.jsonl", stats),
)


def render(outputs, meta):
    """``outputs`` maps a record file name to its (records, meta) pair."""
    sections = [func(*outputs[name]) for name, func in RENDERERS
                if name in outputs]
    footer = [f"config_hash: {meta['config_hash']}", f"seed: {meta['seed']}"]
    footer += [f"{name}: {sha}" for name, sha in
               sorted(meta["upstream"].items())]

    return "\n\n".join(sections + [_section("Provenance",
                                            "\n".join(footer))]) + "\n"
