"""Command line front end: codebook reports, channel dumps, bound curves,
Monte Carlo sweeps and canned experiment presets.

Exit codes: 0 success, 1 configuration problem, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from .analysis import (
    SimConfig,
    ber_union_bound,
    monte_carlo_ber,
    write_ber_csv,
    write_bound_csv,
)
from .channel import FIXTURES, n0_for_bits
from .codebook import combine_codebooks, enumerate_weight_w
from .detectors import (
    Calibration,
    RcConfig,
    SmConfig,
    bb_detect,
    bf_sd_detect,
    iterative_sd_detect,
    ml_detect,
)
from .scenarios import (
    ConfigError,
    Scenario,
    _resolve_channel,
    load_scenario,
    parse_scenario,
)
from .txcodec import pam_intensity

PRESETS = {
    "fig2": ("fig2-h02.ini", "fig2-h06.ini"),
    "fig3": ("fig3.ini",),
    "fig4-cb1-cb2": ("fig4-cb1.ini", "fig4-cb2.ini"),
    "fig5-mobility": ("fig5-x00.ini", "fig5-x02.ini", "fig5-x04.ini"),
    "fig6-blockage": ("fig6-blockage.ini",),
}


def codebook_report(L: int, weights, M: int = 1) -> str:
    """Per-weight counts, combined size and rate figures, plus the entries."""
    if L > 6:
        raise ConfigError("codebook report supports L <= 6")
    weights = tuple(sorted(set(int(w) for w in weights)))
    if not weights:
        raise ConfigError("no weights given")
    parts = []
    lines = []
    for w in weights:
        if not 1 <= w < L:
            raise ConfigError(f"weight {w} out of range for L={L}")
        cb = enumerate_weight_w(L, w)
        parts.append(cb)
        lines.append(f"weight {w}: {cb.size} codewords")
    combined = parts[0] if len(parts) == 1 else combine_codebooks(parts)
    q = combined.size
    bits_block = combined.bits_per_block(M)
    lines.append(f"combined Q = {q}")
    lines.append(f"bits per block (M={M}): {bits_block}")
    lines.append(f"bits per symbol: {np.log2(q * M) / L:.4g}")
    lines.append("entries:")
    for idx, entry in enumerate(combined.entries, 1):
        comps = " + ".join(str(c) for c in entry.components)
        lines.append(f"  {idx:4d}  w={entry.weight}  {comps}")
    return "\n".join(lines)


def _scheme_for(scenario: Scenario, detector: str) -> str:
    if detector == "rc":
        return f"RC({scenario.channel.H.shape[1]},{scenario.rc_m})"
    if detector == "sm":
        return f"SM({scenario.channel.H.shape[1]},{scenario.sm_m})"
    return scenario.scheme


def _sim_config(scenario: Scenario, detector: str, overrides) -> SimConfig:
    cal = None
    if scenario.calibration == "csi":
        cal = Calibration(channel=scenario.channel)
    return SimConfig(
        scheme=_scheme_for(scenario, detector),
        detector=detector,
        ebn0_grid=scenario.ebn0_grid,
        channel=scenario.channel,
        codebook=scenario.codebook,
        pam=scenario.pam,
        rc=RcConfig(L=scenario.channel.H.shape[1], M=scenario.rc_m, I=scenario.pam.I)
        if detector == "rc" else None,
        sm=SmConfig(L=scenario.channel.H.shape[1], M=scenario.sm_m, I=scenario.pam.I)
        if detector == "sm" else None,
        errors_target=overrides.get("errors_target") or scenario.errors_target,
        block_cap=overrides.get("block_cap") or scenario.block_cap,
        seed=overrides["seed"] if overrides.get("seed") is not None else scenario.seed,
        weight_mode=scenario.weight_mode,
        calibration=cal,
        e_max=scenario.e_max,
    )


def _op_probe(scenario: Scenario, detector: str, samples: int = 32):
    """Mean op_count of the scalar detector on noisy mid-grid blocks."""
    if detector in ("rc", "sm", "guess") or scenario.codebook is None:
        return None
    cb, pam = scenario.codebook, scenario.pam
    H = scenario.channel.H
    mid = scenario.ebn0_grid[len(scenario.ebn0_grid) // 2]
    n0 = n0_for_bits(mid, cb.bits_per_block(pam.M), pam.I)
    rng = np.random.default_rng(0)
    cal = Calibration(channel=scenario.channel) if scenario.calibration == "csi" else None
    ops = []
    for _ in range(samples):
        q = int(rng.integers(1, cb.size + 1))
        m = int(rng.integers(1, pam.M + 1))
        w = cb.entries[q - 1].weight
        S = pam_intensity(m, pam.M, w, pam.I) * cb.matrix_stack[q - 1]
        Y = H @ S + rng.normal(0.0, np.sqrt(n0 / 2.0), size=H.shape)
        if detector == "ml":
            r = ml_detect(Y, scenario.channel, cb, pam)
        elif detector == "bf":
            r = bf_sd_detect(Y, cb, pam, true_weight=w,
                             weight_mode=scenario.weight_mode, calibration=cal)
        elif detector == "bb":
            r = bb_detect(Y, cb, pam=pam, calibration=cal)
        elif detector == "iterative":
            r = iterative_sd_detect(Y, cb, pam, scenario.e_max, true_weight=w,
                                    weight_mode=scenario.weight_mode, calibration=cal)
        else:
            return None
        ops.append(r.op_count)
    return float(np.mean(ops))


def run_scenario(scenario: Scenario, out_dir: Path, threads: int, overrides,
                 with_bound: bool = True) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    records = []
    print(f"scenario {scenario.name}: channel={scenario.channel_desc} "
          f"grid={scenario.ebn0_grid[0]:g}..{scenario.ebn0_grid[-1]:g} dB "
          f"({len(scenario.ebn0_grid)} points)")
    header = f"{'scheme':<20} {'detector':<10} {'points':>6} {'blocks':>12} " \
             f"{'bit_errors':>10} {'elapsed_s':>9} {'mean_ops':>9}"
    print(header)
    for detector in scenario.detectors:
        cfg = _sim_config(scenario, detector, overrides)
        t0 = time.perf_counter()
        recs = monte_carlo_ber(cfg, threads=threads)
        elapsed = time.perf_counter() - t0
        records.extend(recs)
        ops = _op_probe(scenario, detector)
        ops_s = "-" if ops is None else f"{ops:.1f}"
        print(f"{cfg.scheme:<20} {detector:<10} {len(recs):>6} "
              f"{sum(r.blocks for r in recs):>12} "
              f"{sum(r.bit_errors for r in recs):>10} {elapsed:>9.2f} "
              f"{ops_s:>9}")
    ber_path = out_dir / f"{scenario.name}_ber.csv"
    write_ber_csv(records, ber_path)
    written.append(ber_path)
    if with_bound and scenario.codebook is not None:
        curve = ber_union_bound(scenario.codebook, scenario.pam, scenario.channel,
                                scenario.ebn0_grid, scheme=scenario.scheme)
        bound_path = out_dir / f"{scenario.name}_bound.csv"
        write_bound_csv(curve, bound_path)
        written.append(bound_path)
    for p in written:
        print(f"wrote {p}")
    return written


def _overrides(args) -> dict:
    return {"seed": args.seed, "errors_target": args.errors_target,
            "block_cap": args.block_cap}


def cmd_codebook(args) -> int:
    weights = [int(w) for w in args.weights.split(",") if w.strip()]
    print(codebook_report(args.length, weights, args.m))
    return 0


def cmd_channel(args) -> int:
    if args.fixture:
        if args.fixture not in FIXTURES:
            raise ConfigError(f"unknown fixture {args.fixture!r}; "
                              f"available: {', '.join(sorted(FIXTURES))}")
        channel = FIXTURES[args.fixture]()
    else:
        kv = {"channel": "geometry"}
        for k in ("tx_spacing", "rx_spacing", "height", "phi_half", "psi_fov",
                  "a_pd", "rx_offset_x", "rx_offset_y"):
            kv[k] = str(getattr(args, k))
        if args.blockage:
            kv["blockage"] = args.blockage
        channel, _ = _resolve_channel(kv, "<channel args>")
    for row in channel.H:
        print(" ".join(f"{v:.6e}" for v in row))
    return 0


def cmd_bound(args) -> int:
    scenario = load_scenario(args.scenario)
    if scenario.codebook is None:
        raise ConfigError("bound requires a scenario with a codebook")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    curve = ber_union_bound(scenario.codebook, scenario.pam, scenario.channel,
                            scenario.ebn0_grid, scheme=scenario.scheme)
    path = out_dir / f"{scenario.name}_bound.csv"
    write_bound_csv(curve, path)
    print(f"wrote {path}")
    return 0


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    run_scenario(scenario, Path(args.out_dir), args.threads, _overrides(args))
    return 0


def preset_scenarios(name: str) -> list[Scenario]:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: "
                          f"{', '.join(sorted(PRESETS))}")
    out = []
    for fname in PRESETS[name]:
        text = resources.files("pmvlc.presets").joinpath(fname).read_text(encoding="utf-8")
        out.append(parse_scenario(text, source=fname))
    return out


def cmd_preset(args) -> int:
    for scenario in preset_scenarios(args.name):
        run_scenario(scenario, Path(args.out_dir), args.threads, _overrides(args))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pmvlc",
        description="Permutation-modulation space-time codes for optical MIMO: "
                    "codebook tools, channel models and BER experiments.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="master seed override")
    common.add_argument("--out-dir", default=".", help="output directory")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads for the Monte Carlo pool")
    common.add_argument("--errors-target", type=int, default=None,
                        help="stop a point after this many bit errors")
    common.add_argument("--block-cap", type=int, default=None,
                        help="hard per-point block limit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("codebook", parents=[common],
                       help="print per-weight counts and entry listing")
    p.add_argument("--length", type=int, default=4)
    p.add_argument("--weights", default="1")
    p.add_argument("--m", type=int, default=1, help="PAM levels per entry")
    p.set_defaults(func=cmd_codebook)

    p = sub.add_parser("channel", parents=[common],
                       help="print a channel gain matrix")
    p.add_argument("--fixture", default=None)
    p.add_argument("--tx-spacing", type=float, default=0.2, dest="tx_spacing")
    p.add_argument("--rx-spacing", type=float, default=0.1, dest="rx_spacing")
    p.add_argument("--height", type=float, default=1.75)
    p.add_argument("--phi-half", type=float, default=15.0, dest="phi_half")
    p.add_argument("--psi-fov", type=float, default=15.0, dest="psi_fov")
    p.add_argument("--a-pd", type=float, default=1e-4, dest="a_pd")
    p.add_argument("--rx-offset-x", type=float, default=0.0, dest="rx_offset_x")
    p.add_argument("--rx-offset-y", type=float, default=0.0, dest="rx_offset_y")
    p.add_argument("--blockage", default="")
    p.set_defaults(func=cmd_channel)

    p = sub.add_parser("bound", parents=[common],
                       help="union bound curve for a scenario file")
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("simulate", parents=[common],
                       help="Monte Carlo BER for a scenario file")
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("preset", parents=[common],
                       help="run a canned experiment")
    p.add_argument("name")
    p.set_defaults(func=cmd_preset)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - boundary: report and signal failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
