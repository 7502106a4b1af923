"""Run configuration: JSON schema, validation, canonical hashing.

Unknown keys are rejected everywhere so that typos fail loudly.  All
geometry is given in nanometres and wavelengths in nanometres; the
loader converts to SI.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .constants import CONSTANTS
from .errors import ConfigError
from .linear import PumpSpec
from .materials import MaterialModel, constant_material, sellmeier_material
from .spectral import SpectralBasis
from .structure import StructureSpec


def _require_keys(obj: dict, allowed, required, where: str):
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    missing = set(required) - set(obj)
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")


def _parse_pol_triple(s: str):
    """'y;xy' -> ('y', 'x', 'y'): pump pol; signal pol, idler pol."""
    try:
        gamma, rest = s.split(";")
        alpha, beta = rest[0], rest[1]
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"bad chi2 pol triple {s!r}, expected 'g;ab'") from exc
    return gamma, alpha, beta


def parse_material(name: str, obj: dict) -> MaterialModel:
    _require_keys(obj, ("dispersion", "chi2"), ("dispersion",), f"material {name}")
    disp = obj["dispersion"]
    chi2 = {}
    for entry in obj.get("chi2", []):
        _require_keys(entry, ("pol", "d_m_per_V"), ("pol", "d_m_per_V"),
                      f"material {name} chi2 entry")
        chi2[_parse_pol_triple(entry["pol"])] = float(entry["d_m_per_V"])
    kind = disp.get("type")
    if kind == "constant":
        _require_keys(disp, ("type", "n", "window_um"), ("type", "n"),
                      f"material {name} dispersion")
        window = (0.0, np.inf)
        if "window_um" in disp:
            lo, hi = disp["window_um"]
            two_pi_c_um = 2 * np.pi * CONSTANTS.c * 1e6
            window = (two_pi_c_um / hi, two_pi_c_um / lo)
        return constant_material(name, float(disp["n"]), chi2, window)
    if kind == "sellmeier":
        _require_keys(disp, ("type", "A", "terms", "window_um"),
                      ("type", "A", "terms", "window_um"),
                      f"material {name} dispersion")
        return sellmeier_material(
            name, disp["A"], disp["terms"], chi2, tuple(disp["window_um"])
        )
    raise ConfigError(f"material {name}: dispersion type must be "
                      f"'constant' or 'sellmeier', got {kind!r}")


def _expand_layers(items, materials, where="structure.layers"):
    out = []
    for item in items:
        if "repeat" in item:
            _require_keys(item, ("repeat", "layers"), ("repeat", "layers"), where)
            for _ in range(int(item["repeat"])):
                out.extend(_expand_layers(item["layers"], materials, where))
            continue
        _require_keys(item, ("material", "length_nm", "poling"),
                      ("material", "length_nm"), where)
        mat = item["material"]
        if mat not in materials:
            raise ConfigError(f"{where}: unknown material {mat!r}")
        out.append(
            (materials[mat], float(item["length_nm"]) * 1e-9,
             int(item.get("poling", 1)))
        )
    return out


@dataclass(frozen=True)
class ScanSpec:
    material_a: str
    material_b: str
    pairs: int
    l1_nm: tuple  # (lo, hi, count)
    l2_nm: tuple
    bins: int
    ridge_max_jump: int = 2


@dataclass(frozen=True)
class RunConfig:
    materials: dict
    structure: StructureSpec
    pump: PumpSpec
    bins: int
    window: tuple  # fractions of omega_p0
    channel: tuple  # (a, b, alpha, beta)
    attribution: str
    time_points: int
    conditional_t_idler: float | None
    scan: ScanSpec | None
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def omega_p0(self) -> float:
        return self.pump.omega0

    def basis(self, bins=None, window=None) -> SpectralBasis:
        bins = bins or self.bins
        lo, hi = window or self.window
        return SpectralBasis(lo * self.omega_p0, hi * self.omega_p0, bins)

    def config_hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


TOP_KEYS = ("materials", "structure", "pump", "basis", "observe", "scan",
            "surface_attribution", "notes")


def parse_config(raw: dict) -> RunConfig:
    _require_keys(raw, TOP_KEYS, ("materials", "structure", "pump", "basis"),
                  "config")
    materials = {
        name: parse_material(name, obj) for name, obj in raw["materials"].items()
    }
    st = raw["structure"]
    _require_keys(st, ("ambient_in", "ambient_out", "layers"),
                  ("ambient_in", "ambient_out", "layers"), "structure")
    for amb in ("ambient_in", "ambient_out"):
        if st[amb] not in materials:
            raise ConfigError(f"structure.{amb}: unknown material {st[amb]!r}")
    layers = _expand_layers(st["layers"], materials)
    structure = StructureSpec(
        tuple(layers), materials[st["ambient_in"]], materials[st["ambient_out"]]
    )
    p = raw["pump"]
    _require_keys(
        p,
        ("wavelength_nm", "fwhm_nm", "energy_J_per_m2", "polarization",
         "side", "cutoff_nsigma"),
        ("wavelength_nm", "fwhm_nm", "energy_J_per_m2"),
        "pump",
    )
    pump = PumpSpec.from_wavelength(
        float(p["wavelength_nm"]) * 1e-9,
        float(p["fwhm_nm"]) * 1e-9,
        float(p["energy_J_per_m2"]),
        polarization=p.get("polarization", "y"),
        side=p.get("side", "F"),
        cutoff_nsigma=float(p.get("cutoff_nsigma", 8.0)),
    )
    b = raw["basis"]
    _require_keys(b, ("bins", "window"), ("bins", "window"), "basis")
    window = tuple(float(x) for x in b["window"])
    if not (0.0 < window[0] < window[1]):
        raise ConfigError("basis.window must be increasing positive fractions")
    obs = raw.get("observe", {})
    _require_keys(
        obs,
        ("signal_dir", "idler_dir", "signal_pol", "idler_pol",
         "time_points", "conditional_t_idler_fs"),
        (),
        "observe",
    )
    channel = (
        obs.get("signal_dir", "F"),
        obs.get("idler_dir", "F"),
        obs.get("signal_pol", "x"),
        obs.get("idler_pol", "y"),
    )
    if channel[0] not in ("F", "B") or channel[1] not in ("F", "B"):
        raise ConfigError("observe directions must be 'F' or 'B'")
    if channel[2] not in ("x", "y") or channel[3] not in ("x", "y"):
        raise ConfigError("observe polarizations must be 'x' or 'y'")
    cond = obs.get("conditional_t_idler_fs")
    attribution = raw.get("surface_attribution", "local-jump")
    if attribution not in ("local-jump", "local-jump-flipped", "per-slot"):
        raise ConfigError(
            f"surface_attribution must be 'local-jump', 'local-jump-flipped'"
            f" or 'per-slot', got {attribution!r}"
        )
    scan = None
    if "scan" in raw:
        s = raw["scan"]
        _require_keys(
            s,
            ("material_a", "material_b", "pairs", "l1_nm", "l2_nm", "bins",
             "ridge_max_jump"),
            ("material_a", "material_b", "pairs", "l1_nm", "l2_nm"),
            "scan",
        )
        for m in (s["material_a"], s["material_b"]):
            if m not in materials:
                raise ConfigError(f"scan: unknown material {m!r}")
        scan = ScanSpec(
            material_a=s["material_a"],
            material_b=s["material_b"],
            pairs=int(s["pairs"]),
            l1_nm=tuple(s["l1_nm"]),
            l2_nm=tuple(s["l2_nm"]),
            bins=int(s.get("bins", 12)),
            ridge_max_jump=int(s.get("ridge_max_jump", 2)),
        )
    return RunConfig(
        materials=materials,
        structure=structure,
        pump=pump,
        bins=int(b["bins"]),
        window=window,
        channel=channel,
        attribution=attribution,
        time_points=int(obs.get("time_points", 2048)),
        conditional_t_idler=None if cond is None else float(cond) * 1e-15,
        scan=scan,
        raw=raw,
    )


def load_config(path) -> RunConfig:
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    with fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, "
                              f"column {exc.colno}: {exc.msg}") from exc
    return parse_config(raw)
