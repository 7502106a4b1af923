"""High-level runs: single simulations, geometry scans, verification.

All outputs are deterministic: fixed float formatting, sorted JSON keys,
no randomness anywhere in the pipeline; scan cells are independent and
merged in index order regardless of worker scheduling.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .config import RunConfig
from .errors import ConfigError, NoPeak
from .linear import linear_transmission
from .matrixcore import (
    TransferChain,
    build_emission,
    feed_in_map,
    input_output_map,
    outward_maps,
)
from .observables import (
    antidiagonal_profile,
    branch_amplitudes,
    joint_density,
    marginals_and_counts,
    temporal_profiles,
    two_photon_amplitude,
    width_fwhm,
)
from .oracle import compare_with_emission, reference_pair_amplitude
from .structure import StructureSpec

M2_PER_MM2 = 1e-6  # counts per quantization area (1 m^2) -> per mm^2


def _fmt(x) -> str:
    if isinstance(x, complex):
        return f"{x.real:.17g}{x.imag:+.17g}j"
    return f"{x:.17g}"


def write_csv(path, header, columns):
    rows = len(columns[0])
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(rows):
            fh.write(",".join(_fmt(col[i]) for col in columns) + "\n")


def write_json(path, obj):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1, allow_nan=False)
        fh.write("\n")


def _safe_fwhm(x, y):
    try:
        return width_fwhm(x, y)
    except NoPeak:
        return None


def _json_ratio(x):
    """Ratios must serialize without NaN/Inf; flag degenerate ones."""
    return float(x) if np.isfinite(x) else None


def simulate(cfg: RunConfig, out_dir, bins=None, window=None):
    """Full single-structure run; writes CSV arrays plus a JSON summary."""
    os.makedirs(out_dir, exist_ok=True)
    basis = cfg.basis(bins, window)
    emission = build_emission(cfg.structure, cfg.pump, basis, basis,
                              convention=cfg.attribution)
    channel = cfg.channel
    jd = joint_density(emission, channel)
    decomp = np.max(
        np.abs(jd.n_total - (jd.n_volume + jd.n_surface + jd.n_interf))
    )
    assert decomp == 0.0  # identity by construction
    stats = marginals_and_counts(jd)

    k = basis.bins
    ws = np.repeat(jd.omega_s, k)
    wi = np.tile(jd.omega_i, k)
    write_csv(
        os.path.join(out_dir, "joint_density.csv"),
        ["omega_s_rad_s", "omega_i_rad_s", "n_V_s2", "n_S_s2", "n_I_s2",
         "n_SV_s2"],
        [ws, wi] + [jd.continuous(w).ravel() for w in ("V", "S", "I", "SV")],
    )
    write_csv(
        os.path.join(out_dir, "marginals.csv"),
        ["omega_s_rad_s", "n_s_V", "n_s_S", "n_s_I", "n_s_SV", "eta_s",
         "eta_valid"],
        [jd.omega_s]
        + [stats["marginals"][w] for w in ("V", "S", "I", "SV")]
        + [stats["eta_s"], stats["eta_valid"].astype(float)],
    )

    amps = two_photon_amplitude(emission, channel)
    profiles = {}
    for w in ("V", "S", "SV"):
        if np.max(np.abs(amps[w].matrix)) == 0.0:
            profiles[w] = None
            continue
        profiles[w] = temporal_profiles(amps[w], n_time=cfg.time_points)
    flux_cols, flux_names = [], ["t_s"]
    t_ref = None
    for w in ("V", "S", "SV"):
        if profiles[w] is None:
            continue
        if t_ref is None:
            t_ref = profiles[w].t
            flux_cols.append(t_ref)
        flux_names.append(f"p_s_{w}_per_s")
        flux_cols.append(profiles[w].p_signal)
    if t_ref is not None:
        write_csv(os.path.join(out_dir, "temporal_flux.csv"),
                  flux_names, flux_cols)

    summary = {
        "version": __version__,
        "config_hash": cfg.config_hash(),
        "bins": basis.bins,
        "window_rad_s": [basis.omega_min, basis.omega_max],
        "channel": {
            "signal_dir": channel[0], "idler_dir": channel[1],
            "signal_pol": channel[2], "idler_pol": channel[3],
        },
        "surface_attribution": cfg.attribution,
        "pairs_per_pulse": {
            w: stats["counts"][w] for w in ("V", "S", "I", "SV")
        },
        "counts_per_mm2": {
            w: stats["counts"][w] * M2_PER_MM2 for w in ("V", "S", "I", "SV")
        },
        "ratio_surface_volume": _json_ratio(stats["ratio_surface_volume"]),
        "warnings": list(emission.warnings),
        "no_emission": bool(stats["counts"]["SV"] == 0.0),
    }

    profile_sv = profiles.get("SV")
    if profile_sv is not None:
        t = profile_sv.t
        peaks = {}
        for w, prof in profiles.items():
            if prof is None:
                continue
            joint_peak = np.unravel_index(np.argmax(prof.p), prof.p.shape)
            peaks[w] = {
                "joint_peak_t_s_fs": t[joint_peak[0]] * 1e15,
                "joint_peak_t_i_fs": t[joint_peak[1]] * 1e15,
                "flux_fwhm_fs": (
                    None
                    if (fw := _safe_fwhm(t, prof.p_signal)) is None
                    else fw * 1e15
                ),
                "parseval_ratio": prof.parseval_ratio,
            }
        t_cond = (
            cfg.conditional_t_idler
            if cfg.conditional_t_idler is not None
            else t[np.unravel_index(np.argmax(profile_sv.p),
                                    profile_sv.p.shape)[1]]
        )
        cond_names, cond_cols = ["t_s"], []
        tc = None
        cond_widths = {}
        for w, prof in profiles.items():
            if prof is None:
                continue
            tx, cut = prof.conditional_cut(t_cond)
            if tc is None:
                tc = tx
                cond_cols.append(tc)
            cond_names.append(f"p_cond_{w}_per_s")
            cond_cols.append(cut)
            cond_widths[w] = (
                None if (fw := _safe_fwhm(tx, cut)) is None else fw * 1e15
            )
        write_csv(os.path.join(out_dir, "temporal_conditional.csv"),
                  cond_names, cond_cols)
        summary["temporal"] = {
            "grid_points": int(t.size),
            "grid_span_fs": float((t[-1] - t[0]) * 1e15),
            "conditional_t_idler_fs": float(t_cond * 1e15),
            "conditional_fwhm_fs": cond_widths,
            "peaks": peaks,
        }

    anti_ws, anti_v = antidiagonal_profile(
        jd.continuous("V"), jd.omega_s, jd.omega_i, cfg.omega_p0
    )
    if anti_ws.size:
        _, anti_s = antidiagonal_profile(
            jd.continuous("S"), jd.omega_s, jd.omega_i, cfg.omega_p0
        )
        _, anti_sv = antidiagonal_profile(
            jd.continuous("SV"), jd.omega_s, jd.omega_i, cfg.omega_p0
        )
        write_csv(
            os.path.join(out_dir, "antidiagonal.csv"),
            ["omega_s_rad_s", "n_V_s2", "n_S_s2", "n_SV_s2"],
            [anti_ws, anti_v, anti_s, anti_sv],
        )
    write_json(os.path.join(out_dir, "summary.json"), summary)
    return summary, emission, jd


def _pair_stack(cfg, l1_m, l2_m):
    scan = cfg.scan
    mat_a = cfg.materials[scan.material_a]
    mat_b = cfg.materials[scan.material_b]
    layers = ((mat_a, l1_m, 1), (mat_b, l2_m, 1)) * scan.pairs
    return StructureSpec(layers, cfg.structure.ambient_in,
                         cfg.structure.ambient_out)


def transmission_map(cfg: RunConfig, out_dir=None):
    """Pump intensity transmission over the (l1, l2) geometry grid."""
    if cfg.scan is None:
        raise ConfigError("config has no 'scan' section")
    lo1, hi1, n1 = cfg.scan.l1_nm
    lo2, hi2, n2 = cfg.scan.l2_nm
    l1 = np.linspace(lo1, hi1, int(n1))
    l2 = np.linspace(lo2, hi2, int(n2))
    tmap = np.empty((l1.size, l2.size))
    for i, a in enumerate(l1):
        for j, b in enumerate(l2):
            st = _pair_stack(cfg, a * 1e-9, b * 1e-9)
            _, _, big_t, _ = linear_transmission(st, cfg.omega_p0)
            tmap[i, j] = big_t
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_csv(
            os.path.join(out_dir, "transmission_map.csv"),
            ["l1_nm", "l2_nm", "T_p"],
            [np.repeat(l1, l2.size), np.tile(l2, l1.size), tmap.ravel()],
        )
    return l1, l2, tmap


def _local_maxima(row, floor):
    idx = []
    for j in range(1, row.size - 1):
        if row[j] > row[j - 1] and row[j] >= row[j + 1] and row[j] > floor:
            idx.append(j)
    return idx


def track_ridges(l1, l2, tmap, max_jump=2, floor=0.05):
    """Transmission-peak curves in the (l1, l2) plane.

    Nearest-maximum continuation with a bounded jump; a ridge whose peak
    vanishes or is claimed by an earlier ridge is flagged lost.
    """
    ridges = []
    active = {}
    for j in _local_maxima(tmap[0], floor):
        ridges.append({"points": [(0, j)], "lost": False})
        active[len(ridges) - 1] = j
    for i in range(1, l1.size):
        maxima = _local_maxima(tmap[i], floor)
        taken = set()
        for rid in sorted(active):
            j0 = active[rid]
            best = None
            for j in maxima:
                if j in taken or abs(j - j0) > max_jump:
                    continue
                if best is None or abs(j - j0) < abs(best - j0):
                    best = j
            if best is None:
                ridges[rid]["lost"] = True
                del active[rid]
            else:
                taken.add(best)
                ridges[rid]["points"].append((i, best))
                active[rid] = best
        for j in maxima:
            if j not in taken:
                ridges.append({"points": [(i, j)], "lost": False})
                active[len(ridges) - 1] = j
    return ridges


def _scan_cell(args):
    cfg, l1_nm, l2_nm = args
    st = _pair_stack(cfg, l1_nm * 1e-9, l2_nm * 1e-9)
    basis = cfg.basis(bins=cfg.scan.bins)
    emission = build_emission(st, cfg.pump, basis, basis,
                              convention=cfg.attribution)
    jd = joint_density(emission, cfg.channel)
    stats = marginals_and_counts(jd)
    return {
        "l1_nm": l1_nm,
        "l2_nm": l2_nm,
        "N_SV_per_mm2": stats["counts"]["SV"] * M2_PER_MM2,
        "N_V_per_mm2": stats["counts"]["V"] * M2_PER_MM2,
        "N_S_per_mm2": stats["counts"]["S"] * M2_PER_MM2,
        "R": stats["ratio_surface_volume"] if np.isfinite(
            stats["ratio_surface_volume"]) else -1.0,
    }


def scan(cfg: RunConfig, out_dir, workers=1, min_ridge_points=4):
    """Transmission map, ridge tracking, and SPDC yields along ridges."""
    os.makedirs(out_dir, exist_ok=True)
    l1, l2, tmap = transmission_map(cfg, out_dir)
    ridges = track_ridges(l1, l2, tmap, max_jump=cfg.scan.ridge_max_jump)
    jobs = []
    meta = []
    for rid, ridge in enumerate(ridges):
        if len(ridge["points"]) < min_ridge_points:
            continue
        for (i, j) in ridge["points"]:
            jobs.append((cfg, float(l1[i]), float(l2[j])))
            meta.append((rid, i, j, ridge["lost"]))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_scan_cell, jobs))
    else:
        results = [_scan_cell(j) for j in jobs]
    rows = {
        "ridge": [], "lost_flag": [], "l1_nm": [], "l2_nm": [], "T_p": [],
        "N_SV_per_mm2": [], "N_V_per_mm2": [], "N_S_per_mm2": [], "R": [],
    }
    for (rid, i, j, lost), res in zip(meta, results):
        rows["ridge"].append(float(rid))
        rows["lost_flag"].append(float(lost))
        rows["l1_nm"].append(res["l1_nm"])
        rows["l2_nm"].append(res["l2_nm"])
        rows["T_p"].append(tmap[i, j])
        for key in ("N_SV_per_mm2", "N_V_per_mm2", "N_S_per_mm2", "R"):
            rows[key].append(res[key])
    write_csv(
        os.path.join(out_dir, "ridge_scan.csv"),
        list(rows.keys()),
        [np.asarray(v) for v in rows.values()],
    )
    summary = {
        "version": __version__,
        "config_hash": cfg.config_hash(),
        "ridges_tracked": len(ridges),
        "ridges_scanned": len({m[0] for m in meta}),
        "cells": len(jobs),
    }
    write_json(os.path.join(out_dir, "scan_summary.json"), summary)
    return ridges, rows, summary


def verify(cfg: RunConfig, bins=16, step_fraction=20.0, out_path=None):
    """Consistency report: oracle match, invariances, unitarity, Parseval.

    Returns (report, ok); every check carries its measured error and
    tolerance.  Intended for small structures (N <= 6 recommended).
    """
    basis = cfg.basis(bins=bins)
    structure = cfg.structure
    checks = {}

    emission = build_emission(structure, cfg.pump, basis, basis,
                              convention=cfg.attribution)
    f = emission.f_linear.data
    dev = np.max(np.abs(f @ f.conj().T - np.eye(f.shape[0])))
    checks["scattering_unitary"] = {"error": float(dev), "tol": 1e-9}

    omega_probe = np.linspace(basis.omega_min, basis.omega_max, 7)
    _, _, big_t, big_r = linear_transmission(structure, omega_probe)
    checks["energy_conservation"] = {
        "error": float(np.max(np.abs(big_t + big_r - 1.0))), "tol": 1e-10
    }

    mid = max(1, structure.n_layers // 2)
    em_split = build_emission(
        structure.split_layer(mid, 0.5), cfg.pump, basis, basis,
        keep_sources=True, convention="local-jump",
    )
    if cfg.attribution != "local-jump":
        emission_lj = build_emission(structure, cfg.pump, basis, basis,
                                     convention="local-jump")
    else:
        emission_lj = emission
    scale_g = max(np.linalg.norm((emission.g_volume + emission.g_surface).data),
                  1e-300)
    checks["split_invariance_GV"] = {
        "error": float(
            np.linalg.norm(em_split.g_volume.data - emission_lj.g_volume.data)
            / scale_g
        ),
        "tol": 1e-9,
    }
    checks["split_invariance_GS"] = {
        "error": float(
            np.linalg.norm(em_split.g_surface.data - emission_lj.g_surface.data)
            / scale_g
        ),
        "tol": 1e-9,
    }
    s_s = em_split.boundary_sources[mid + 1][1]
    checks["fictitious_surface_null"] = {
        "error": float(np.linalg.norm(s_s.data) / scale_g), "tol": 1e-10
    }

    min_len = min(structure.length(l) for l in range(1, structure.n_layers + 1))
    ref = reference_pair_amplitude(
        structure, cfg.pump, basis, basis, step=min_len / step_fraction
    )
    checks["oracle_total_amplitude"] = {
        "error": float(compare_with_emission(ref, emission)), "tol": 1e-4
    }

    amps = two_photon_amplitude(emission, cfg.channel)
    if np.max(np.abs(amps["SV"].matrix)) > 0.0:
        prof = temporal_profiles(amps["SV"], n_time=max(512, 4 * bins))
        checks["parseval"] = {
            "error": float(abs(prof.parseval_ratio - 1.0)), "tol": 1e-8
        }
        checks["time_normalization"] = {
            "error": float(abs(prof.p.sum() * prof.dt**2 - 1.0)), "tol": 1e-6
        }
    jd = joint_density(emission, cfg.channel)
    checks["decomposition_identity"] = {
        "error": float(
            np.max(np.abs(jd.n_total - (jd.n_volume + jd.n_surface
                                        + jd.n_interf)))
        ),
        "tol": 0.0,
    }
    f1v, f2v = branch_amplitudes(emission, cfg.channel, "V")
    f1s, f2s = branch_amplitudes(emission, cfg.channel, "S")
    tot1, tot2 = f1v + f1s, f2v + f2s
    scale = max(np.max(np.abs(tot2)), 1e-300)
    checks["branch_conjugacy_total"] = {
        "error": float(np.max(np.abs(tot1 - np.conj(tot2))) / scale), "tol": 1e-8
    }

    # bin-refinement study: pair counts converge as the midpoint rule
    counts = []
    for k_ref in (bins // 2, bins, 2 * bins):
        em_k = build_emission(structure, cfg.pump, cfg.basis(bins=k_ref),
                              cfg.basis(bins=k_ref),
                              convention=cfg.attribution)
        jd_k = joint_density(em_k, cfg.channel)
        counts.append(marginals_and_counts(jd_k)["counts"]["SV"])
    d_coarse = abs(counts[1] - counts[0])
    d_fine = abs(counts[2] - counts[1])
    ratio = d_coarse / d_fine if d_fine > 0 else np.inf
    checks["bins_refinement"] = {
        "error": 0.0 if ratio > 1.5 else float(1.5 - ratio),
        "tol": 0.0,
        "ratio": float(min(ratio, 1e6)),
    }
    checks["density_nonnegative"] = {
        "error": float(
            max(0.0, -min(jd.n_volume.min(), jd.n_surface.min(),
                          jd.n_total.min()) / max(jd.n_total.max(), 1e-300))
        ),
        "tol": 1e-15,
    }

    ok = all(c["error"] <= max(c["tol"], 0.0) for c in checks.values())
    report = {
        "version": __version__,
        "config_hash": cfg.config_hash(),
        "bins": bins,
        "checks": checks,
        "ok": bool(ok),
    }
    if out_path is not None:
        write_json(out_path, report)
    return report, ok


MATRIX_NAMES = (
    "T", "F", "W", "Z", "Y", "GV", "GS", "T:l", "P:l", "L:l", "X:l",
    "SV:l", "SS:l",
)


def dump_matrix(cfg: RunConfig, name: str, out_path, bins=None):
    """Write one named pipeline matrix with labeled rows/columns to CSV."""
    basis = cfg.basis(bins)
    chain = TransferChain.build(cfg.structure, basis, basis)
    n_tot = cfg.structure.n_layers + 2
    t_full = chain.from_left[n_tot - 1]
    f_map = input_output_map(t_full)
    parts = name.split(":")
    key = parts[0].upper()
    idx = int(parts[1]) if len(parts) > 1 else None
    if key in ("GV", "GS", "SV", "SS"):
        emission = build_emission(
            cfg.structure, cfg.pump, basis, basis, keep_sources=True,
            convention=cfg.attribution,
        )
    if key == "T" and idx is None:
        mat = t_full
    elif key == "T":
        mat = chain.from_left[idx]
    elif key == "P":
        mat = chain.propagator[idx]
    elif key == "L":
        mat = chain.interface[idx]
    elif key == "F":
        mat = f_map
    elif key == "W":
        mat = feed_in_map(f_map)
    elif key == "Z":
        mat = f_map.inv()
    elif key == "Y":
        _, mat, _ = outward_maps(chain, f_map, 1)
    elif key == "X":
        mat, _, _ = outward_maps(chain, f_map, idx)
    elif key == "GV":
        mat = emission.g_volume
    elif key == "GS":
        mat = emission.g_surface
    elif key in ("SV", "SS"):
        mat = emission.boundary_sources[idx][0 if key == "SV" else 1]
    else:
        raise ConfigError(
            f"unknown matrix {name!r}; known: {', '.join(MATRIX_NAMES)}"
        )
    mat.write_csv(out_path)
    return out_path
