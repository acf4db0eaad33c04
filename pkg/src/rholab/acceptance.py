"""Desk-scale acceptance suite.

Each experiment runs once, writes its trial records and a summary under
``<run_dir>/<experiment>/``, and exposes scalar metrics.  Criteria read the
metrics back from the summaries and compare them with named thresholds, so an
evaluation can be repeated (or re-thresholded) without re-simulating.
"""

from __future__ import annotations

import filecmp
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from rholab import mapgraph, oracle, poisson_experiment, seqsim, stats, theory
from rholab.core import Params
from rholab.records import InputFileError, read_summary, write_jsonl, write_summary

DEFAULT_SEED = 20260101

THRESHOLDS: dict[str, float] = {
    "c1.ks_D": 0.006,
    "c1.runtime_s": 10.0,
    "c2.mean_ratio_lo": 0.97,
    "c2.mean_ratio_hi": 1.03,
    "c2.runtime_s": 30.0,
    "c3.var_ratio_lo": 0.85,
    "c3.var_ratio_hi": 1.15,
    "c4.tail_gap": 0.02,
    "c5.ks_D": 0.03,
    "c5.mean_rel": 0.03,
    "c5.runtime_s": 60.0,
    "c6.mean_lo": 0.48,
    "c6.mean_hi": 0.52,
    "c6.ks_D": 0.03,
    "c6.abs_corr": 0.05,
    "c7.tv_oracles": 1e-12,
    "c7.tv_mc": 0.01,
    "c7.runtime_s": 60.0,
    "c8.tv": 0.01,
    "c9.tv_m300": 0.05,
    "c9.runtime_s": 120.0,
    "c10.gap": 0.01,
    "c11.slope": -1.0,
    "c11.slope_tol": 0.3,
    "c12.frac": 0.1,
    "c12.runtime_s": 60.0,
    "c13.mean_rel": 0.03,
    "c13.var_rel": 0.10,
}


@dataclass
class RunContext:
    run_dir: Path
    master_seed: int = DEFAULT_SEED
    workers: int | None = None

    def config(self, **extra) -> dict:
        return {"master_seed": self.master_seed, "workers": self.workers, **extra}


@dataclass(frozen=True)
class Check:
    criterion: int
    label: str
    observed: float
    threshold: str
    passed: bool
    tag: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] C{self.criterion:<2} {self.label}: observed={self.observed:.6g} required {self.threshold} ({self.tag})"


# ------------------------------------------------------------- experiments

RHO_KEYS = ["trial", "mu", "tau", "period"]


def _rho_run(ctx: RunContext, name: str, m: int, k: int, n: int, hazard: bool = False,
             seed_offset: int = 0) -> tuple[seqsim.BatchResult, float]:
    t0 = time.perf_counter()
    res = seqsim.batch_sample(Params(m, k), n, ctx.master_seed + seed_offset, hazard=hazard, workers=ctx.workers)
    elapsed = time.perf_counter() - t0
    keys = RHO_KEYS + (["h_total", "H_final"] if hazard else [])
    write_jsonl(ctx.run_dir / name / f"rho_m{m}_k{k}.jsonl", res.records, keys)
    return res, elapsed


def exp_hazard(ctx: RunContext) -> dict:
    res, elapsed = _rho_run(ctx, "hazard", 10, 2, 100_000, hazard=True)
    ks = stats.ks_test(res.records["h_total"], theory.exponential_cdf)
    return {"n": 100_000, "m": 10, "k": 2, "ks_D": ks.D, "ks_p": ks.p_value,
            "h_total_mean": float(np.mean(res.records["h_total"])), "runtime_s": elapsed}


def exp_k2(ctx: RunContext) -> dict:
    params = Params(1000, 2)
    res, elapsed = _rho_run(ctx, "k2", params.m, params.k, 10_000)
    tau = res.records["tau"].astype(float)
    ratio = res.records["mu"] / tau
    mom = theory.asymptotic_tau_moments(params)
    return {
        "n": len(tau),
        "mean_tau": float(np.mean(tau)),
        "var_tau": float(np.var(tau, ddof=1)),
        "mean_ratio": float(np.mean(tau)) / mom.mean,
        "var_ratio": float(np.var(tau, ddof=1)) / mom.variance,
        "p_tail_x1": float(np.mean(tau * tau / (2.0 * params.M) >= 1.0)),
        "tail_gap": abs(float(np.mean(tau * tau / (2.0 * params.M) >= 1.0)) - math.exp(-1.0)),
        "mean_mu_over_tau": float(np.mean(ratio)),
        "ks_mu_over_tau": stats.ks_test(ratio, theory.uniform_cdf).D,
        "corr_mu_over_tau_tau": float(np.corrcoef(ratio, tau)[0, 1]),
        "runtime_s": elapsed,
    }


def exp_k3(ctx: RunContext) -> dict:
    params = Params(100, 3)
    res, elapsed = _rho_run(ctx, "k3", 100, 3, 10_000)
    tau = res.records["tau"].astype(float)
    mom = theory.asymptotic_tau_moments(params)
    return {
        "n": len(tau),
        "ks_D": stats.ks_test(tau * tau / (2.0 * params.M), theory.exponential_cdf).D,
        "mean_tau": float(np.mean(tau)),
        "mean_rel": abs(float(np.mean(tau)) / mom.mean - 1.0),
        "runtime_s": elapsed,
    }


def _joint_pmf(mu: np.ndarray, tau: np.ndarray) -> dict:
    pairs, counts = np.unique(np.stack([mu, tau], axis=1), axis=0, return_counts=True)
    n = counts.sum()
    return {(int(a), int(b)): c / n for (a, b), c in zip(pairs, counts)}


def exp_oracle(ctx: RunContext) -> dict:
    params = Params(2, 2)
    t0 = time.perf_counter()
    exact = oracle.enumerate_maps_exact(params)
    seq = oracle.enumerate_sequences_exact(params)
    elapsed = time.perf_counter() - t0
    # exact law is part of the compared data, so leave the worker count out
    write_summary(ctx.run_dir / "oracle" / "exact_m2_k2.json",
                  {"master_seed": ctx.master_seed, "m": 2, "k": 2}, exact.to_dict())
    res, mc_elapsed = _rho_run(ctx, "oracle", 2, 2, 100_000)
    mc = _joint_pmf(res.records["mu"], res.records["tau"])
    exact_f = exact.as_float()
    support = set(exact.joint) | set(seq)
    tv_oracles = float(sum(abs(exact.joint.get(a, 0) - seq.get(a, 0)) for a in support) / 2)
    write_jsonl(ctx.run_dir / "oracle" / "sequence_pmf_m2_k2.jsonl",
                {"mu": np.array([a for a, _ in seq]), "tau": np.array([b for _, b in seq]),
                 "p": np.array([float(v) for v in seq.values()])}, ["mu", "tau", "p"])
    return {
        "p_tau_min": float(exact.marginal_tau[params.k + 1]),
        "p_tau_min_exact": str(exact.marginal_tau[params.k + 1]),
        "p_no_seed_period1": float(exact.P_no_seed_period1),
        "p_no_seed_period1_exact": str(exact.P_no_seed_period1),
        "tv_oracles": tv_oracles,
        "tv_mc": stats.tv_distance(exact_f, mc),
        "E_tau": float(exact.E_tau),
        "P_period1": float(exact.P_period1),
        "E_tau_star": float(exact.E_tau_star),
        "E_num_cycles": float(exact.E_num_cycles),
        "runtime_s": elapsed + mc_elapsed,
    }


def exp_equivalence(ctx: RunContext) -> dict:
    params = Params(3, 2)
    t0 = time.perf_counter()
    maps = mapgraph.batch_map_trajectories(params, 100_000, ctx.master_seed, workers=ctx.workers)
    write_jsonl(ctx.run_dir / "equivalence" / "map_m3_k2.jsonl", maps, RHO_KEYS)
    res, _ = _rho_run(ctx, "equivalence", 3, 2, 100_000, seed_offset=1)
    exact = oracle.enumerate_maps_exact(params)
    p_map, p_seq = stats.empirical_pmf(maps["tau"]), stats.empirical_pmf(res.records["tau"])
    return {
        "tv_map_vs_seq": stats.tv_distance(p_map, p_seq),
        "tv_map_vs_oracle": stats.tv_distance(p_map, exact.as_float("marginal_tau")),
        "tv_seq_vs_oracle": stats.tv_distance(p_seq, exact.as_float("marginal_tau")),
        "runtime_s": time.perf_counter() - t0,
    }


def exp_poisson(ctx: RunContext) -> dict:
    t0 = time.perf_counter()
    out = {}
    for m in (30, 100, 300):
        params = Params(m, 2)
        z = poisson_experiment.batch_Z(params, 0.5, 100_000, ctx.master_seed, ctx.workers)
        write_jsonl(ctx.run_dir / "poisson" / f"z_m{m}_k2.jsonl", z, ["trial", "z"])
        out[f"m{m}"] = poisson_experiment.gap_from_samples(params, 0.5, z["z"]).to_dict()
    out["runtime_s"] = time.perf_counter() - t0
    return out


def exp_diag(ctx: RunContext) -> dict:
    t0 = time.perf_counter()
    hits = mapgraph.batch_diag_hits(1000, 10_000, ctx.master_seed, ctx.workers)
    write_jsonl(ctx.run_dir / "diag" / "diag_m1000.jsonl", hits, ["trial", "hit"])
    est = mapgraph.diag_estimate(hits["hit"], 1000)
    return {"estimate": est.value, "stderr": est.stderr, "exact": est.exact,
            "gap": abs(est.value - est.exact), "runtime_s": time.perf_counter() - t0}


def exp_period1(ctx: RunContext) -> dict:
    ms = (100, 200, 400)
    probs = []
    t0 = time.perf_counter()
    for m in ms:
        res, _ = _rho_run(ctx, "period1", m, 2, 100_000)
        probs.append(float(np.mean(res.records["period"] == 1)))
    slope = float(np.polyfit(np.log(ms), np.log(probs), 1)[0]) if min(probs) > 0 else float("nan")
    return {"m": list(ms), "p_period1": probs, "slope": slope, "runtime_s": time.perf_counter() - t0}


def exp_tau_star(ctx: RunContext) -> dict:
    params = Params(100, 2)
    t0 = time.perf_counter()
    census = mapgraph.batch_analyze(params, 200, ctx.master_seed, ctx.workers)
    elapsed = time.perf_counter() - t0
    write_jsonl(ctx.run_dir / "tau_star" / "maps_m100_k2.jsonl", census,
                ["map", "tau_star", "mean_tau", "n_cycles", "frac_seeds_period1", "has_diag_fixed_point"])
    cut = theory.tau_star_threshold(params, b=3.0)
    return {"threshold": cut, "frac_above": float(np.mean(census["tau_star"] > cut)),
            "mean_tau_star": float(np.mean(census["tau_star"])), "runtime_s": elapsed}


def exp_H(ctx: RunContext) -> dict:
    m, steps, n = 50, 60, 100_000
    t0 = time.perf_counter()
    H = seqsim.batch_linearized_hazard(m, steps, n, ctx.master_seed, ctx.workers)
    write_jsonl(ctx.run_dir / "H_moments" / "H_m50_steps60.jsonl",
                {"trial": np.arange(n), "H": H}, ["trial", "H"])
    mean, var = theory.hazard_H_moments(steps, m)
    return {"mean": float(np.mean(H)), "var": float(np.var(H, ddof=1)), "mean_exact": mean, "var_exact": var,
            "mean_rel": abs(float(np.mean(H)) / mean - 1), "var_rel": abs(float(np.var(H, ddof=1)) / var - 1),
            "runtime_s": time.perf_counter() - t0}


EXPERIMENTS: dict[str, Callable[[RunContext], dict]] = {
    "hazard": exp_hazard,
    "k2": exp_k2,
    "k3": exp_k3,
    "oracle": exp_oracle,
    "equivalence": exp_equivalence,
    "poisson": exp_poisson,
    "diag": exp_diag,
    "period1": exp_period1,
    "tau_star": exp_tau_star,
    "H_moments": exp_H,
}


def run_experiment(name: str, ctx: RunContext) -> dict:
    metrics = EXPERIMENTS[name](ctx)
    write_summary(ctx.run_dir / name / "summary.json", ctx.config(experiment=name), {"metrics": metrics})
    return metrics


def run_all(ctx: RunContext, names=None) -> dict[str, dict]:
    return {name: run_experiment(name, ctx) for name in (names or EXPERIMENTS)}


def data_files(run_dir: Path, name: str) -> list[Path]:
    """Trial-record files of one experiment (summaries carry timings, so excluded)."""
    d = Path(run_dir) / name
    return sorted(p for p in d.rglob("*") if p.is_file() and p.name != "summary.json")


def compare_runs(dir_a: Path, dir_b: Path, names=None) -> dict[str, bool]:
    out = {}
    for name in names or EXPERIMENTS:
        fa, fb = data_files(dir_a, name), data_files(dir_b, name)
        same = [p.relative_to(dir_a) for p in fa] == [p.relative_to(dir_b) for p in fb] and bool(fa)
        out[name] = same and all(filecmp.cmp(a, b, shallow=False) for a, b in zip(fa, fb))
    return out


def check_determinism(ctx: RunContext, workers_b: int, names=None) -> dict[str, bool]:
    """Re-run experiments with another worker count and compare data bytes."""
    rerun = RunContext(ctx.run_dir / "_rerun", ctx.master_seed, workers_b)
    run_all(rerun, names)
    result = compare_runs(ctx.run_dir, rerun.run_dir, names)
    write_summary(ctx.run_dir / "determinism.json",
                  ctx.config(workers_b=workers_b), {"identical": result})
    return result


# ---------------------------------------------------------------- criteria


def _le(c, label, obs, limit, tag):
    return Check(c, label, obs, f"< {limit:g}", bool(obs < limit), tag)


def _within(c, label, obs, lo, hi, tag):
    return Check(c, label, obs, f"in [{lo:g}, {hi:g}]", bool(lo <= obs <= hi), tag)


def _eq(c, label, obs, want, tag):
    return Check(c, label, obs, f"== {want:g}", bool(obs == want), tag)


def evaluate(metrics: dict[str, dict], determinism: dict[str, bool] | None,
             thresholds: dict[str, float] | None = None) -> list[Check]:
    t = dict(THRESHOLDS)
    t.update(thresholds or {})
    h, k2, k3, o = metrics["hazard"], metrics["k2"], metrics["k3"], metrics["oracle"]
    eq, po, dg, p1 = metrics["equivalence"], metrics["poisson"], metrics["diag"], metrics["period1"]
    ts, H = metrics["tau_star"], metrics["H_moments"]
    checks = [
        _le(1, "hazard total KS D vs Exp(1), m=10", h["ks_D"], t["c1.ks_D"], "exact-law"),
        _le(1, "hazard run time (s)", h["runtime_s"], t["c1.runtime_s"], "budget"),
        _within(2, "mean(tau)/1253.314, m=1000", k2["mean_ratio"], t["c2.mean_ratio_lo"], t["c2.mean_ratio_hi"], "limit-law"),
        _le(2, "k=2 run time (s)", k2["runtime_s"], t["c2.runtime_s"], "budget"),
        _within(3, "Var(tau)/429203.67, m=1000", k2["var_ratio"], t["c3.var_ratio_lo"], t["c3.var_ratio_hi"], "limit-law"),
        _le(4, "|P(tau^2/2m^2 >= 1) - e^-1|", k2["tail_gap"], t["c4.tail_gap"], "limit-law"),
        _le(5, "KS D of tau^2/2m^3 vs Exp(1), m=100 k=3", k3["ks_D"], t["c5.ks_D"], "limit-law"),
        _le(5, "|mean(tau)/1253.314 - 1|, m=100 k=3", k3["mean_rel"], t["c5.mean_rel"], "limit-law"),
        _le(5, "k=3 run time (s)", k3["runtime_s"], t["c5.runtime_s"], "budget"),
        _within(6, "mean(mu/tau)", k2["mean_mu_over_tau"], t["c6.mean_lo"], t["c6.mean_hi"], "limit-law"),
        _le(6, "KS D of mu/tau vs U(0,1)", k2["ks_mu_over_tau"], t["c6.ks_D"], "limit-law"),
        _le(6, "|corr(mu/tau, tau)|", abs(k2["corr_mu_over_tau_tau"]), t["c6.abs_corr"], "limit-law"),
        _eq(7, "oracle P(tau=3), m=2 k=2", o["p_tau_min"], 0.25, "exact-enumeration"),
        _eq(7, "oracle P(no seed has period 1)", o["p_no_seed_period1"], 0.25, "exact-enumeration"),
        _le(7, "TV map oracle vs sequence oracle", o["tv_oracles"], t["c7.tv_oracles"], "exact-enumeration"),
        _le(7, "TV Monte Carlo vs oracle", o["tv_mc"], t["c7.tv_mc"], "monte-carlo"),
        _le(7, "oracle run time (s)", o["runtime_s"], t["c7.runtime_s"], "budget"),
        _le(8, "TV tau pmf, random maps vs IID driver, m=3", eq["tv_map_vs_seq"], t["c8.tv"], "monte-carlo"),
        Check(9, "|P(Z=0) - e^-lambda|, m=30", po["m30"]["p0_gap"], f"<= b1+b2 = {po['m30']['bound']:.6g}",
              bool(po["m30"]["p0_gap"] <= po["m30"]["bound"]), "poisson-bound"),
        _le(9, "TV(Z, Poisson), m=300", po["m300"]["tv_empirical"], t["c9.tv_m300"], "monte-carlo"),
    ]
    tvs = [po[f"m{m}"]["tv_empirical"] for m in (30, 100, 300)]
    bars = [po[f"m{m}"]["tv_error_bar"] for m in (30, 100, 300)]
    worst = max(tvs[i + 1] - tvs[i] - bars[i + 1] for i in range(2))
    checks += [
        Check(9, "TV(Z, Poisson) decrease over m=30,100,300 (max rise beyond error bar)", worst, "<= 0",
              bool(worst <= 0), "monte-carlo"),
        _le(9, "Poisson run time (s)", po["runtime_s"], t["c9.runtime_s"], "budget"),
        _le(10, "|diag fixed point estimate - 0.63230|", dg["gap"], t["c10.gap"], "analytic"),
        _within(11, "log-log slope of P(period=1)", p1["slope"], t["c11.slope"] - t["c11.slope_tol"],
                t["c11.slope"] + t["c11.slope_tol"], "scaling"),
        _le(12, "fraction of maps with tau* > sqrt(6 m^2 ln m)", ts["frac_above"], t["c12.frac"], "tail-bound"),
        _le(12, "tau* census run time (s)", ts["runtime_s"], t["c12.runtime_s"], "budget"),
        _le(13, "|mean H(60)/0.708 - 1|, m=50", H["mean_rel"], t["c13.mean_rel"], "exact-moment"),
        _le(13, "|var H(60)/exact - 1|, m=50", H["var_rel"], t["c13.var_rel"], "exact-moment"),
    ]
    if determinism is None:
        checks.append(Check(14, "byte-identical data across worker counts", 0.0, "all identical", False, "determinism"))
    else:
        n_same = sum(determinism.values())
        checks.append(Check(14, "experiments with byte-identical data across worker counts", float(n_same),
                            f"== {len(determinism)}", n_same == len(determinism) == len(EXPERIMENTS), "determinism"))
    return checks


def load_metrics(run_dir: Path) -> tuple[dict[str, dict], dict[str, bool]]:
    """Read every experiment summary and the determinism record from disk."""
    run_dir = Path(run_dir)
    metrics = {}
    for name in EXPERIMENTS:
        path = run_dir / name / "summary.json"
        doc = read_summary(path)
        if not isinstance(doc.get("metrics"), dict):
            raise InputFileError(f"corrupted summary file: {path}: no metrics")
        metrics[name] = doc["metrics"]
    det = read_summary(run_dir / "determinism.json")
    if not isinstance(det.get("identical"), dict):
        raise InputFileError(f"corrupted summary file: {run_dir / 'determinism.json'}")
    return metrics, det["identical"]
