"""Batch command-line interface: simulate, reconstruct, unscramble, certify.

Subcommands map to the stages of a scattering-channel experiment:

  simulate           draw a channel, write scan bundles and raw tables
  tomo               turn a scan bundle into a transmission matrix
  unscramble         turn a transmission matrix into corrective operators
  certify            turn coincidence tables into a certification report
  run                execute a named end-to-end scenario

All randomness flows from one root seed through named sub-streams (channel
draws, each sampling stage, Monte-Carlo resampling), so any artifact can be
reproduced in isolation. Reports are canonical JSON: same config and seed
give byte-identical output.

Exposure policy: the exposure setting is the Poisson mean of the brightest
cell in each acquisition ("integrate until the peak cell has collected that
many counts"). Within one four-step phase scan a single factor is shared by
all steps so the interference ratios stay meaningful; each coincidence
table is its own acquisition. Cell means are exposure-scaled probabilities
throughout, so noiseless mode (exposure = inf) is exact.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import bases, certify, channel, measure, numerics, states, tomo, unscramble
from .errors import (
    CertificationFailure,
    ConditioningError,
    ConfigError,
    ToolkitError,
)

_STREAM_CHANNEL = 1

_SCENARIOS = ("baseline", "scramble", "tomography", "unscramble-certify",
              "two-channel", "fixture-a1")

REPORT_SCHEMA = "report_v1"


@dataclass(frozen=True)
class ScenarioConfig:
    """Resolved settings for one scenario run."""

    scenario: str
    d: int = 7
    n_modes: int = 60
    seed: int = 0
    exposure: float = 1e4
    dark_rate: float = 0.0
    reference_amplitude: float = 1.0
    n_mc: int = 1000
    scan_family: str = "mub:0"

    def __post_init__(self) -> None:
        if self.scenario not in _SCENARIOS:
            raise ConfigError(
                f"unknown scenario {self.scenario!r}; choose from {_SCENARIOS}")
        if not numerics.is_prime(self.d):
            raise ConfigError(f"d must be prime, got {self.d}")
        if self.d + 1 > self.n_modes:
            raise ConfigError(
                f"need d + 1 <= n_modes, got d={self.d}, n_modes={self.n_modes}")
        if not (self.exposure > 0):
            raise ConfigError(f"exposure must be positive, got {self.exposure}")
        if self.dark_rate < 0:
            raise ConfigError("dark_rate must be nonnegative")
        if self.reference_amplitude <= 0:
            raise ConfigError("reference_amplitude must be positive")
        if self.n_mc < 0:
            raise ConfigError("n_mc must be nonnegative")
        if not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer")
        try:
            bases.parse_basis_spec(self.scan_family, self.d)
        except ToolkitError as exc:
            raise ConfigError(f"bad scan_family: {exc}") from exc
        if self.scan_family.startswith("tilted"):
            raise ConfigError("scan_family must be unitary (standard or mub:r)")


def config_to_dict(cfg: ScenarioConfig) -> Dict[str, object]:
    out = asdict(cfg)
    if math.isinf(cfg.exposure):
        out["exposure"] = "inf"
    return out


def config_from_dict(data: Dict[str, object]) -> ScenarioConfig:
    known = {f for f in ScenarioConfig.__dataclass_fields__}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown config keys: {sorted(extra)}")
    if "scenario" not in data:
        raise ConfigError("config needs a 'scenario' key")
    kwargs = dict(data)
    if isinstance(kwargs.get("exposure"), str):
        if kwargs["exposure"] != "inf":
            raise ConfigError(f"bad exposure {kwargs['exposure']!r}")
        kwargs["exposure"] = math.inf
    try:
        return ScenarioConfig(**kwargs)  # type: ignore[arg-type]
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _canonical_json(obj) -> str:
    return json.dumps(_sanitize(obj), sort_keys=True, indent=2,
                      allow_nan=False) + "\n"


def _sanitize(obj):
    """Make reports JSON-safe: numpy scalars/arrays to plain Python."""
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        if math.isinf(f):
            return "inf"
        return f
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(text)


def _table_payload(table: measure.CountTable) -> Dict[str, object]:
    payload: Dict[str, object] = {
        "basis_a": table.basis_label_a,
        "basis_b": table.basis_label_b,
        "exposure": "inf" if table.noiseless else table.exposure,
        "seed": table.seed,
        "counts": table.counts,
    }
    if table.row_scale is not None:
        payload["row_scale"] = table.row_scale
    return payload


def emit_report(report: Dict[str, object], out_dir: str) -> str:
    path = os.path.join(out_dir, "report.json")
    _write(path, _canonical_json(report))
    return path


def _report_skeleton(cfg: ScenarioConfig) -> Dict[str, object]:
    return {
        "schema": REPORT_SCHEMA,
        "scenario": cfg.scenario,
        "config": config_to_dict(cfg),
        "results": {},
        "tables": {},
    }


def _certification_results(rep: certify.CertificationReport) -> Dict[str, object]:
    return {
        "fidelity": rep.fidelity,
        "fidelity_sigma": rep.fidelity_sigma,
        "n_mc": rep.n_mc,
        "method": rep.method,
        "bounds": list(rep.bounds),
        "d_ent": rep.d_ent,
        "robust_3sigma": rep.robust_3sigma,
        "entangled": rep.entangled,
        "target_lambda": rep.target.lambdas,
    }


# ---------------------------------------------------------------------------
# Peak-cell exposure scaling
# ---------------------------------------------------------------------------


def _peak_scale(exposure: float, probs: Sequence[np.ndarray]) -> float:
    """Exposure factor that puts the brightest cell at `exposure` counts."""
    if math.isinf(exposure):
        return exposure
    peak = max(float(np.max(p)) for p in probs)
    if peak <= 0:
        raise ConditioningError("all-dark acquisition; cannot set exposure scale")
    return exposure / peak


def _scan_probe(state: states.BipartiteState, family: bases.BasisFamily,
                which: str) -> List[np.ndarray]:
    """Noiseless per-step probability tables of a scan (for peak scaling)."""
    if which == "s":
        records = measure.phase_step_scan_s(state, family, measure.NOISELESS)
    else:
        records = measure.phase_step_scan_e(state, family, measure.NOISELESS)
    return [rec.table.counts for rec in records]


def _run_scans(state: states.BipartiteState, family: bases.BasisFamily,
               cfg: ScenarioConfig) -> Tuple[List[measure.PhaseStepRecord],
                                             List[measure.PhaseStepRecord]]:
    exp_s = _peak_scale(cfg.exposure, _scan_probe(state, family, "s"))
    exp_e = _peak_scale(cfg.exposure, _scan_probe(state, family, "e"))
    s_rec = measure.phase_step_scan_s(state, family, exp_s, cfg.seed, cfg.dark_rate)
    e_rec = measure.phase_step_scan_e(state, family, exp_e, cfg.seed, cfg.dark_rate)
    return s_rec, e_rec


def _measure_family_peak(state: states.BipartiteState, family: bases.BasisFamily,
                         cfg: ScenarioConfig) -> measure.CountTable:
    probs = measure.probability_table(state, family.matrix,
                                      np.conjugate(family.matrix))
    exp = _peak_scale(cfg.exposure, [probs])
    return measure.measure_correlations(state, family, exp, cfg.seed, cfg.dark_rate)


def _measure_recovered_peak(state: states.BipartiteState,
                            ops: unscramble.UnscrambleOperators, which,
                            cfg: ScenarioConfig,
                            lambdas=None) -> measure.CountTable:
    probs = unscramble.recovered_probs(state, ops, which, lambdas, corrected=False)
    exp = _peak_scale(cfg.exposure, [probs])
    return unscramble.measure_recovered(state, ops, which, exp, cfg.seed,
                                        lambdas, cfg.dark_rate)


# ---------------------------------------------------------------------------
# Scenario implementations
# ---------------------------------------------------------------------------


def _save_scan_bundle(out_dir: str, s_rec, e_rec, family: bases.BasisFamily,
                      cfg: ScenarioConfig) -> None:
    scan_dir = os.path.join(out_dir, "scans")
    os.makedirs(scan_dir, exist_ok=True)
    for rec in s_rec:
        measure.save_count_table(os.path.join(scan_dir, f"s_step{rec.step}.csv"),
                                 rec.table)
    for rec in e_rec:
        measure.save_count_table(os.path.join(scan_dir, f"e_step{rec.step}.csv"),
                                 rec.table)
    meta = {
        "family": family.kind,
        "d": family.dim,
        "theta_grid": list(measure.THETA_GRID),
        "exposure": "inf" if math.isinf(cfg.exposure) else cfg.exposure,
        "seed": cfg.seed,
    }
    _write(os.path.join(scan_dir, "meta.json"), _canonical_json(meta))


def _load_scan_bundle(scan_dir: str):
    meta_path = os.path.join(scan_dir, "meta.json")
    try:
        with open(meta_path, "r", encoding="ascii") as fh:
            meta = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read scan bundle metadata: {exc}") from exc
    d = int(meta["d"])
    family = bases.parse_basis_spec(str(meta["family"]), d)
    s_rec, e_rec = [], []
    for step, theta in enumerate(measure.THETA_GRID):
        s_tab = measure.load_count_table(os.path.join(scan_dir, f"s_step{step}.csv"))
        e_tab = measure.load_count_table(os.path.join(scan_dir, f"e_step{step}.csv"))
        s_rec.append(measure.PhaseStepRecord(step=step, theta=theta, table=s_tab))
        e_rec.append(measure.PhaseStepRecord(step=step, theta=theta, table=e_tab))
    return s_rec, e_rec, family


def _save_t_hat(out_dir: str, t: channel.EffectiveT,
                extra: Dict[str, object]) -> None:
    numerics.save_matrix_csv(os.path.join(out_dir, "t_hat.csv"), t.matrix)
    meta = {
        "dim": t.dim,
        "includes_reference": t.includes_reference,
        "basis_tag": None if t.basis_tag is None else t.basis_tag.kind,
    }
    meta.update(extra)
    _write(os.path.join(out_dir, "t_hat.json"), _canonical_json(meta))


def _load_t_hat(path: str) -> channel.EffectiveT:
    matrix = numerics.load_matrix_csv(path)
    meta_path = os.path.splitext(path)[0] + ".json"
    tag = None
    includes_reference = False
    if os.path.exists(meta_path):
        with open(meta_path, "r", encoding="ascii") as fh:
            meta = json.load(fh)
        includes_reference = bool(meta.get("includes_reference", False))
        tag_kind = meta.get("basis_tag")
        if tag_kind is not None:
            tag = bases.parse_basis_spec(str(tag_kind), matrix.shape[0])
    t = channel.EffectiveT(dim=matrix.shape[0], matrix=matrix,
                           includes_reference=includes_reference)
    if tag is not None:
        t = tomo.tag_basis(t, tag)
    return t


def _scenario_baseline(cfg: ScenarioConfig, out_dir: str) -> Dict[str, object]:
    report = _report_skeleton(cfg)
    state = states.max_entangled(cfg.d)
    std = _measure_family_peak(state, bases.standard_family(cfg.d), cfg)
    fams = [_measure_family_peak(state, bases.mub(cfg.d, r), cfg)
            for r in range(cfg.d)]
    rep = certify.certify(std, fams, target=certify.TargetState.uniform(cfg.d),
                          n_mc=cfg.n_mc, seed=cfg.seed)
    report["results"] = _certification_results(rep)
    for table in [std, *fams]:
        report["tables"][table.basis_label_a] = _table_payload(table)
        measure.save_count_table(
            os.path.join(out_dir, "tables",
                         table.basis_label_a.replace(":", "_") + ".csv"), table)
    return report


def _scenario_scramble(cfg: ScenarioConfig, out_dir: str) -> Dict[str, object]:
    report = _report_skeleton(cfg)
    ch = channel.haar_channel(cfg.d, cfg.n_modes,
                              numerics.substream(cfg.seed, _STREAM_CHANNEL))
    channel.save_channel(os.path.join(out_dir, "channel"), ch)
    state = channel.transmitted_state(ch)
    std = _measure_family_peak(state, bases.standard_family(cfg.d), cfg)
    fams = [_measure_family_peak(state, bases.mub(cfg.d, r), cfg)
            for r in range(cfg.d)]
    rep = certify.certify(std, fams, target=certify.TargetState.uniform(cfg.d),
                          n_mc=cfg.n_mc, seed=cfg.seed)
    report["results"] = _certification_results(rep)
    report["results"]["certified"] = rep.d_ent >= 2
    for table in [std, *fams]:
        report["tables"][table.basis_label_a] = _table_payload(table)
        measure.save_count_table(
            os.path.join(out_dir, "tables",
                         table.basis_label_a.replace(":", "_") + ".csv"), table)
    return report


def _scenario_tomography(cfg: ScenarioConfig, out_dir: str) -> Dict[str, object]:
    report = _report_skeleton(cfg)
    ch = channel.haar_channel(cfg.d, cfg.n_modes,
                              numerics.substream(cfg.seed, _STREAM_CHANNEL))
    channel.save_channel(os.path.join(out_dir, "channel"), ch)
    family = bases.parse_basis_spec(cfg.scan_family, cfg.d)
    full = channel.transmitted_state(ch, cfg.reference_amplitude)
    s_rec, e_rec = _run_scans(full, family, cfg)
    _save_scan_bundle(out_dir, s_rec, e_rec, family, cfg)
    recon = tomo.reconstruct(s_rec, e_rec, family=family)
    oracle = bases.rotate_matrix(channel.effective_t(ch).matrix, family)
    err = numerics.dist_up_to_scalar(recon.t.matrix, oracle)
    _save_t_hat(out_dir, recon.t,
                {"e_ratio": recon.e_ratio,
                 "condition_number": recon.condition_number})
    report["results"] = {
        "reconstruction_error": err,
        "e_ratio": recon.e_ratio,
        "condition_number": recon.condition_number,
        "basis_tag": family.kind,
    }
    return report


def _scenario_unscramble_certify(cfg: ScenarioConfig,
                                 out_dir: str) -> Dict[str, object]:
    report = _report_skeleton(cfg)
    ch = channel.haar_channel(cfg.d, cfg.n_modes,
                              numerics.substream(cfg.seed, _STREAM_CHANNEL))
    channel.save_channel(os.path.join(out_dir, "channel"), ch)
    family = bases.parse_basis_spec(cfg.scan_family, cfg.d)
    full = channel.transmitted_state(ch, cfg.reference_amplitude)
    s_rec, e_rec = _run_scans(full, family, cfg)
    _save_scan_bundle(out_dir, s_rec, e_rec, family, cfg)
    recon = tomo.reconstruct(s_rec, e_rec, family=family)
    _save_t_hat(out_dir, recon.t,
                {"e_ratio": recon.e_ratio,
                 "condition_number": recon.condition_number})

    ops = unscramble.build_w(recon.t)
    _save_unscramble_ops(out_dir, ops)
    pix = channel.drop_reference(full)
    std = _measure_recovered_peak(pix, ops, "standard", cfg)
    target = certify.estimate_lambda(std)
    fams = [_measure_recovered_peak(pix, ops, r, cfg, target.lambdas)
            for r in range(cfg.d)]
    rep = certify.certify(std, fams, target=target, n_mc=cfg.n_mc, seed=cfg.seed)
    report["results"] = _certification_results(rep)
    report["results"]["reconstruction"] = {
        "e_ratio": recon.e_ratio,
        "condition_number": recon.condition_number,
    }
    report["results"]["eta"] = ops.eta
    for table in [std, *fams]:
        report["tables"][table.basis_label_a] = _table_payload(table)
        measure.save_count_table(
            os.path.join(out_dir, "tables",
                         table.basis_label_a.replace(":", "_") + ".csv"), table)
    return report


def _scenario_two_channel(cfg: ScenarioConfig, out_dir: str) -> Dict[str, object]:
    report = _report_skeleton(cfg)
    u_a = numerics.haar_unitary(cfg.d, numerics.substream(cfg.seed, _STREAM_CHANNEL, 0))
    u_b = numerics.haar_unitary(cfg.d, numerics.substream(cfg.seed, _STREAM_CHANNEL, 1))
    numerics.save_matrix_csv(os.path.join(out_dir, "u_alice.csv"), u_a)
    numerics.save_matrix_csv(os.path.join(out_dir, "u_bob.csv"), u_b)
    phi = states.max_entangled(cfg.d)
    two_sided = states.apply_one_sided(phi, u_a, u_b)
    combined = channel.compose_two_channels(u_a, u_b)
    one_sided = states.apply_one_sided(phi, None, combined.matrix)
    residual = float(np.max(np.abs(two_sided.coeffs - one_sided.coeffs)))

    ops = unscramble.build_w(combined)
    _save_unscramble_ops(out_dir, ops)
    std = _measure_recovered_peak(two_sided, ops, "standard", cfg)
    target = certify.estimate_lambda(std)
    fams = [_measure_recovered_peak(two_sided, ops, r, cfg, target.lambdas)
            for r in range(cfg.d)]
    rep = certify.certify(std, fams, target=target, n_mc=cfg.n_mc, seed=cfg.seed)
    report["results"] = _certification_results(rep)
    report["results"]["equivalence_residual"] = residual
    for table in [std, *fams]:
        report["tables"][table.basis_label_a] = _table_payload(table)
        measure.save_count_table(
            os.path.join(out_dir, "tables",
                         table.basis_label_a.replace(":", "_") + ".csv"), table)
    return report


def _scenario_fixture_a1(cfg: ScenarioConfig, out_dir: str) -> Dict[str, object]:
    if cfg.d != 7:
        raise ConfigError("the shipped fixture is 7-dimensional; use d=7")
    report = _report_skeleton(cfg)
    t_meas = channel.load_fixture_tm0()
    lam_fix = channel.load_fixture_lambda()
    target = certify.TargetState(dim=7, lambdas=lam_fix)

    ops = unscramble.build_w(t_meas)
    _save_unscramble_ops(out_dir, ops)
    t_std = bases.rotate_matrix(t_meas.matrix, t_meas.basis_tag, inverse=True)
    state = channel.choi_state(channel.EffectiveT(dim=7, matrix=t_std))

    std = unscramble.measure_recovered(state, ops, "standard", measure.NOISELESS)
    fams = [unscramble.measure_recovered(state, ops, r, measure.NOISELESS,
                                         lambdas=lam_fix)
            for r in range(7)]
    rep = certify.certify(std, fams, target=target, n_mc=0)
    dominant = []
    for table in fams:
        probs = table.normalized()
        dominant.append(bool(np.all(
            np.diag(probs) >= np.max(probs - np.diag(np.diag(probs)), axis=1))))
    report["results"] = _certification_results(rep)
    report["results"]["b5"] = rep.bounds[4]
    report["results"]["lambda_fixture"] = lam_fix
    report["results"]["lambda_recovered"] = certify.estimate_lambda(std).lambdas
    report["results"]["tilted_diagonal_dominant"] = dominant
    for table in [std, *fams]:
        report["tables"][table.basis_label_a] = _table_payload(table)
        measure.save_count_table(
            os.path.join(out_dir, "tables",
                         table.basis_label_a.replace(":", "_") + ".csv"), table)
    return report


def _save_unscramble_ops(out_dir: str, ops: unscramble.UnscrambleOperators) -> None:
    u_dir = os.path.join(out_dir, "unscramble")
    os.makedirs(u_dir, exist_ok=True)
    numerics.save_matrix_csv(os.path.join(u_dir, "w_alice.csv"), ops.normalized_w)
    numerics.save_matrix_csv(os.path.join(u_dir, "m_bob.csv"), ops.m_bob)
    meta = {
        "dim": ops.dim,
        "basis_kind": ops.basis_kind,
        "eta": ops.eta,
        "condition_number": ops.condition_number,
    }
    _write(os.path.join(u_dir, "meta.json"), _canonical_json(meta))


_SCENARIO_RUNNERS = {
    "baseline": _scenario_baseline,
    "scramble": _scenario_scramble,
    "tomography": _scenario_tomography,
    "unscramble-certify": _scenario_unscramble_certify,
    "two-channel": _scenario_two_channel,
    "fixture-a1": _scenario_fixture_a1,
}


def run_scenario(cfg: ScenarioConfig, out_dir: str) -> Dict[str, object]:
    """Execute a scenario, writing artifacts and the final report."""
    os.makedirs(out_dir, exist_ok=True)
    _write(os.path.join(out_dir, "config.json"),
           _canonical_json(config_to_dict(cfg)))
    report = _SCENARIO_RUNNERS[cfg.scenario](cfg, out_dir)
    emit_report(report, out_dir)
    return report


# ---------------------------------------------------------------------------
# Argument parsing and subcommand handlers
# ---------------------------------------------------------------------------


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file (flags override it)")
    p.add_argument("--d", type=int, help="local dimension (prime)")
    p.add_argument("--n-modes", type=int, help="total fibre modes")
    p.add_argument("--seed", type=int, help="root seed")
    p.add_argument("--exposure", help="peak-cell Poisson mean, or 'inf'")
    p.add_argument("--dark-rate", type=float, help="uniform dark-count rate")
    p.add_argument("--reference-amplitude", type=float,
                   help="source weight of the reference mode")
    p.add_argument("--n-mc", type=int, help="Monte-Carlo resamples for error bars")
    p.add_argument("--scan-family", help="scan basis: standard or mub:r")
    p.add_argument("--out", default="out", help="output directory")


def _resolve_config(args: argparse.Namespace, scenario: str) -> ScenarioConfig:
    data: Dict[str, object] = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="ascii") as fh:
                data = json.load(fh)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    data["scenario"] = data.get("scenario", scenario)
    if scenario:
        data["scenario"] = scenario
    overrides = {
        "d": args.d,
        "n_modes": args.n_modes,
        "seed": args.seed,
        "dark_rate": args.dark_rate,
        "reference_amplitude": args.reference_amplitude,
        "n_mc": args.n_mc,
        "scan_family": args.scan_family,
    }
    if args.exposure is not None:
        overrides["exposure"] = (math.inf if args.exposure == "inf"
                                 else _parse_float(args.exposure, "exposure"))
    for key, value in overrides.items():
        if value is not None:
            data[key] = value
    return config_from_dict(data)


def _parse_float(text: str, name: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"bad {name}: {text!r}") from exc


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args, "tomography")
    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)
    ch = channel.haar_channel(cfg.d, cfg.n_modes,
                              numerics.substream(cfg.seed, _STREAM_CHANNEL))
    channel.save_channel(os.path.join(out_dir, "channel"), ch)
    family = bases.parse_basis_spec(cfg.scan_family, cfg.d)
    full = channel.transmitted_state(ch, cfg.reference_amplitude)
    s_rec, e_rec = _run_scans(full, family, cfg)
    _save_scan_bundle(out_dir, s_rec, e_rec, family, cfg)
    logical = channel.transmitted_state(ch)
    table_specs = args.basis or ["standard"] + [f"mub:{r}" for r in range(cfg.d)]
    for spec in table_specs:
        fam = bases.parse_basis_spec(spec, cfg.d)
        table = _measure_family_peak(logical, fam, cfg)
        measure.save_count_table(
            os.path.join(out_dir, "tables", spec.replace(":", "_") + ".csv"),
            table)
    print(f"wrote channel, scan bundle and {len(table_specs)} tables to {out_dir}")
    return 0


def _cmd_tomo(args: argparse.Namespace) -> int:
    s_rec, e_rec, family = _load_scan_bundle(args.scans)
    recon = tomo.reconstruct(s_rec, e_rec, family=family,
                             ref_floor=args.ref_floor)
    os.makedirs(args.out, exist_ok=True)
    _save_t_hat(args.out, recon.t,
                {"e_ratio": recon.e_ratio,
                 "condition_number": recon.condition_number})
    print(f"reconstructed {recon.t.dim}x{recon.t.dim} matrix "
          f"(family {family.kind}, e_ratio {recon.e_ratio:.3e}, "
          f"condition number {recon.condition_number:.2f})")
    return 0


def _cmd_unscramble(args: argparse.Namespace) -> int:
    t = _load_t_hat(args.t_hat)
    ops = unscramble.build_w(t)
    os.makedirs(args.out, exist_ok=True)
    _save_unscramble_ops(args.out, ops)
    lambdas = None
    if args.lambdas:
        lambdas = _load_lambda_file(args.lambdas, t.dim)
    if t.basis_tag is not None:
        t_std = bases.rotate_matrix(t.matrix, t.basis_tag, inverse=True)
    else:
        t_std = t.matrix
    state = channel.choi_state(channel.EffectiveT(dim=t.dim, matrix=t_std))
    u_dir = os.path.join(args.out, "unscramble")
    pred = unscramble.predict_table(state, ops, "standard")
    measure.save_count_table(
        os.path.join(u_dir, "predicted_standard.csv"),
        measure.CountTable(counts=pred, basis_label_a="recovered:standard",
                           basis_label_b="recovered:standard*",
                           exposure=measure.NOISELESS))
    zeta_meta = {}
    for r in range(t.dim):
        v = unscramble.build_v(ops, r, lambdas)
        numerics.save_matrix_csv(
            os.path.join(u_dir, f"v_alice_{r}.csv"), v.normalized_v)
        pred_r = unscramble.predict_table(state, ops, r, lambdas)
        measure.save_count_table(
            os.path.join(u_dir, f"predicted_{v.kind.replace(':', '_')}.csv"),
            measure.CountTable(counts=pred_r,
                               basis_label_a=f"recovered:{v.kind}",
                               basis_label_b=f"recovered:{v.kind}*",
                               exposure=measure.NOISELESS))
        zeta_meta[v.kind] = v.zeta
    _write(os.path.join(u_dir, "zeta.json"), _canonical_json(zeta_meta))
    print(f"wrote unscrambling operators and predictions to {u_dir} "
          f"(condition number {ops.condition_number:.2f})")
    return 0


def _load_lambda_file(path: str, dim: int) -> np.ndarray:
    try:
        with open(path, "r", encoding="ascii") as fh:
            meta = json.load(fh)
        lam = np.asarray(meta["lambda"], dtype=np.float64)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read lambda file {path}: {exc}") from exc
    if lam.shape != (dim,):
        raise ConfigError(
            f"lambda file holds {lam.shape[0]} weights, expected {dim}")
    return lam


def _cmd_certify(args: argparse.Namespace) -> int:
    std = measure.load_count_table(args.standard)
    fams = [measure.load_count_table(p) for p in args.table]
    target = None
    if args.target:
        lam = _load_lambda_file(args.target, std.counts.shape[0])
        target = certify.TargetState(dim=std.counts.shape[0], lambdas=lam)
    rep = certify.certify(std, fams, target=target,
                          n_mc=args.n_mc, seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    report = {
        "schema": REPORT_SCHEMA,
        "scenario": "certify",
        "results": _certification_results(rep),
        "tables": {t.basis_label_a: _table_payload(t) for t in [std, *fams]},
    }
    emit_report(report, args.out)
    print(rep.summary())
    if args.require_dent and rep.d_ent < args.require_dent:
        raise CertificationFailure(
            f"certified d_ent = {rep.d_ent} below required {args.require_dent}")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args, args.scenario)
    report = run_scenario(cfg, args.out)
    results = report.get("results", {})
    if "fidelity" in results:
        print(f"scenario {cfg.scenario}: F = {results['fidelity']:.4f}, "
              f"d_ent = {results['d_ent']}")
        if args.require_dent and results["d_ent"] < args.require_dent:
            raise CertificationFailure(
                f"certified d_ent = {results['d_ent']} "
                f"below required {args.require_dent}")
    else:
        print(f"scenario {cfg.scenario}: report written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qscatter",
        description="Simulate, reconstruct, unscramble and certify "
                    "entanglement through scattering channels.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="draw a channel and write raw data")
    _add_config_flags(p_sim)
    p_sim.add_argument("--basis", action="append",
                       help="correlation table basis (repeatable)")
    p_sim.set_defaults(handler=_cmd_simulate)

    p_tomo = sub.add_parser("tomo", help="reconstruct T from a scan bundle")
    p_tomo.add_argument("--scans", required=True, help="scan bundle directory")
    p_tomo.add_argument("--out", default="out", help="output directory")
    p_tomo.add_argument("--ref-floor", type=float, default=1e-6,
                        help="relative reference-interference floor")
    p_tomo.set_defaults(handler=_cmd_tomo)

    p_un = sub.add_parser("unscramble", help="build corrective operators")
    p_un.add_argument("--t-hat", required=True, help="t_hat.csv path")
    p_un.add_argument("--out", default="out", help="output directory")
    p_un.add_argument("--lambdas", help="target spectrum JSON for tilted probes")
    p_un.set_defaults(handler=_cmd_unscramble)

    p_cert = sub.add_parser("certify", help="certify dimensionality from tables")
    p_cert.add_argument("--standard", required=True,
                        help="standard-basis table CSV")
    p_cert.add_argument("--table", action="append", required=True,
                        help="rotated-family table CSV (repeatable)")
    p_cert.add_argument("--target", help="target spectrum JSON")
    p_cert.add_argument("--n-mc", type=int, default=1000)
    p_cert.add_argument("--seed", type=int, default=0)
    p_cert.add_argument("--out", default="out", help="output directory")
    p_cert.add_argument("--require-dent", type=int,
                        help="exit 4 unless d_ent reaches this")
    p_cert.set_defaults(handler=_cmd_certify)

    p_run = sub.add_parser("run", help="execute a named scenario end to end")
    p_run.add_argument("--scenario", required=True, choices=_SCENARIOS)
    _add_config_flags(p_run)
    p_run.add_argument("--require-dent", type=int,
                       help="exit 4 unless d_ent reaches this")
    p_run.set_defaults(handler=_cmd_run)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except CertificationFailure as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        return 4
    except ConditioningError as exc:
        print(f"conditioning error: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
