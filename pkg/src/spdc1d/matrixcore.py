"""Block-matrix assembly of the layered-structure pair-emission operators.

The mode super-space stacks the signal annihilation sector and the idler
creation sector, each with channels (F,x), (B,x), (F,y), (B,y) times the
frequency bins.  All linear maps are block-diagonal in the field sector;
because the idler entries are creation operators, every idler block is
the complex conjugate of the corresponding annihilation-operator block.
Pair sources are anti-diagonal in the field sector.

Boundary continuity (electric and magnetic rows, both polarizations,
both fields) yields, per boundary l between layers l-1 and l:

* a linear interface relation  L^(l-1) A^(l-1) = L^(l) A^(l),
* a volume pair source fed by the kernel content arriving with the
  ingoing mode of each side, and
* a surface pair source fed by the jump of the bare magnetic source
  coefficient across the boundary.

The emitted pair waves of one boundary propagate as free fields to the
structure outputs.  Writing the left-going part through the forward
transfer of the left segment and the right-going part through the
backward transfer of the right segment gives a square response operator
per boundary whose inverse maps continuity sources to output amplitudes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .blockmatrix import (
    FIELDS,
    MODE_CHANNELS,
    BlockMatrix,
    Space,
    mode_space,
    row_space,
)
from .constants import CONSTANTS
from .errors import ConfigError
from .linear import PumpField, PumpSpec, propagate_pump
from .materials import refractive_index
from .spectral import (
    POLS,
    LayerCoupling,
    SpectralBasis,
    project_to_basis,
)
from .structure import StructureSpec

CONDITION_WARN = 1e12


def overlap_matrices(material, basis: SpectralBasis):
    """Diagonal single-frequency overlaps of the top-hat basis.

    Returns (i_e, i_h_f, i_h_b): entries 1/sqrt(n(w_k)) and
    +-i k(w_k)/sqrt(n(w_k)) on the bin centers.
    """
    w = basis.centers
    n = refractive_index(material, w)
    i_e = 1.0 / np.sqrt(n)
    i_h_f = 1j * w / CONSTANTS.c * n / np.sqrt(n)
    return i_e, i_h_f, -i_h_f


def interface_matrix(material, basis_s, basis_i, rows: Space, cols: Space):
    """Boundary-continuity matrix of one layer (rows E/H x pol, cols modes).

    The idler sector is conjugated because it acts on creation operators.
    """
    out = BlockMatrix(rows, cols)
    for f, basis in (("s", basis_s), ("i", basis_i)):
        i_e, i_h_f, i_h_b = overlap_matrices(material, basis)
        if f == "i":
            i_e, i_h_f, i_h_b = np.conj(i_e), np.conj(i_h_f), np.conj(i_h_b)
        for pol in POLS:
            for a, i_h in (("F", i_h_f), ("B", i_h_b)):
                out.set_block((f, "E", pol), (f, a, pol), np.diag(i_e))
                out.set_block((f, "H", pol), (f, a, pol), np.diag(i_h))
    return out


def layer_propagator(material, length, basis_s, basis_i, space: Space):
    """Free propagation across one layer: diagonal phases exp(i k_a L)."""
    out = BlockMatrix(space, space)
    for f, basis in (("s", basis_s), ("i", basis_i)):
        w = basis.centers
        n = refractive_index(material, w)
        for a, sign in (("F", 1.0), ("B", -1.0)):
            phase = np.exp(1j * sign * w / CONSTANTS.c * n * length)
            if f == "i":
                phase = np.conj(phase)
            for pol in POLS:
                out.set_block((f, a, pol), (f, a, pol), np.diag(phase))
    return out


@dataclass
class TransferChain:
    """Interface/propagator matrices and cumulative transfers of a stack."""

    structure: StructureSpec
    basis_s: SpectralBasis
    basis_i: SpectralBasis
    interface: list = field(default_factory=list)   # L^(l), l = 0..N+1
    propagator: list = field(default_factory=list)  # P^(l)
    from_left: list = field(default_factory=list)   # layer l at z_l <- medium 0 at z_1
    from_right: list = field(default_factory=list)  # layer l at z_l <- medium N+1 at z_N+1

    @classmethod
    def build(cls, structure, basis_s, basis_i):
        if basis_s.bins != basis_i.bins:
            raise ConfigError("signal and idler bases must share the bin count")
        bins = basis_s.bins
        modes = mode_space("modes", bins)
        rows = row_space("continuity", bins)
        chain = cls(structure, basis_s, basis_i)
        n_tot = structure.n_layers + 2
        for l in range(n_tot):
            mat = structure.material(l)
            chain.interface.append(
                interface_matrix(mat, basis_s, basis_i, rows, modes)
            )
            chain.propagator.append(
                layer_propagator(mat, structure.length(l), basis_s, basis_i, modes)
            )
        ident = BlockMatrix.identity(modes)
        chain.from_left = [ident]
        for l in range(1, n_tot):
            step = chain.interface[l].solve(
                chain.interface[l - 1] @ chain.propagator[l - 1] @ chain.from_left[l - 1],
                context=f"interface L{l}",
            )
            chain.from_left.append(step)
        chain.from_right = [None] * n_tot
        chain.from_right[n_tot - 1] = ident
        for l in range(n_tot - 2, -1, -1):
            across = chain.interface[l].solve(
                chain.interface[l + 1] @ chain.from_right[l + 1],
                context=f"interface L{l}",
            )
            chain.from_right[l] = chain.propagator[l].inv() @ across
        return chain

    def tilde_from_left(self, l: int) -> BlockMatrix:
        """Layer-l modes at z_{l+1} from medium-0 modes at z_1."""
        return self.propagator[l] @ self.from_left[l]


def transfer_compose(chain: TransferChain, n: int, m: int) -> BlockMatrix:
    """General transfer: layer-n modes at z_n from layer-m modes at z_{m+1}.

    Folds interface and propagator matrices right-to-left over the layers
    strictly between m and n; the empty product (n = m + 1) is unity.
    """
    if not n > m:
        raise ConfigError("transfer needs n > m")
    acc = chain.interface[m].copy()
    for l in range(m + 1, n):
        acc = chain.interface[l] @ (
            chain.propagator[l] @ chain.interface[l].solve(acc, context=f"L{l}")
        )
    return chain.interface[n].solve(acc, context=f"L{n}")


def input_output_map(t_full: BlockMatrix) -> BlockMatrix:
    """Scattering form of the full transfer: outputs from inputs.

    Inputs are the forward modes at z_1 and backward modes at z_{N+1};
    outputs the forward modes at z_{N+1} and backward modes at z_1.
    """
    bins = t_full.row.bins
    eq = mode_space("scatter-rows", bins)
    out_sp = mode_space("out", bins)
    in_sp = mode_space("in", bins)
    u = BlockMatrix(eq, out_sp)
    v = BlockMatrix(eq, in_sp)
    eye = np.eye(bins)
    for f in FIELDS:
        for c in MODE_CHANNELS:
            for c2 in MODE_CHANNELS:
                blk = t_full.block((f,) + c, (f,) + c2)
                if c2[0] == "B":
                    u.add_block((f,) + c, (f,) + c2, -blk)
                else:
                    v.add_block((f,) + c, (f,) + c2, blk)
        for pol in POLS:
            u.add_block((f, "F", pol), (f, "F", pol), eye)
            v.add_block((f, "B", pol), (f, "B", pol), -eye)
    f_map = u.solve(v, context="input-output")
    return BlockMatrix(out_sp, in_sp, f_map.data)


def feed_in_map(f_map: BlockMatrix) -> BlockMatrix:
    """Medium-0 modes at z_1 from input modes (forward rows pass through,
    backward rows are the left-exit rows of the scattering map)."""
    bins = f_map.row.bins
    w = BlockMatrix(mode_space("medium0", bins), f_map.col)
    eye = np.eye(bins)
    for f in FIELDS:
        for pol in POLS:
            w.set_block((f, "F", pol), (f, "F", pol), eye)
            for c2 in MODE_CHANNELS:
                w.set_block((f, "B", pol), (f,) + c2,
                            f_map.block((f, "B", pol), (f,) + c2))
    return w


def outward_maps(chain: TransferChain, f_map: BlockMatrix, l: int):
    """(X(z_l), Y, Z): free propagation of emitted pairs to the outputs.

    Z inverts the scattering map; Y rebuilds the medium-0 mode vector of
    the equivalent-input solution from the outputs (backward outputs
    already sit at z_1); X carries that vector to the outgoing modes at
    boundary l (forward rows in layer l, backward rows in layer l-1).
    """
    z_map = f_map.inv(context="scattering map")
    bins = f_map.row.bins
    y = BlockMatrix(mode_space("medium0", bins), f_map.row)
    eye = np.eye(bins)
    for f in FIELDS:
        for pol in POLS:
            for c2 in MODE_CHANNELS:
                y.set_block((f, "F", pol), (f,) + c2,
                            z_map.block((f, "F", pol), (f,) + c2))
            y.set_block((f, "B", pol), (f, "B", pol), eye)
    x = BlockMatrix(mode_space(f"outgoing-z{l}", bins), mode_space("medium0", bins))
    left_tilde = chain.tilde_from_left(l - 1)
    right = chain.from_left[l]
    for f in FIELDS:
        for pol in POLS:
            for c2 in MODE_CHANNELS:
                x.set_block((f, "F", pol), (f,) + c2,
                            right.block((f, "F", pol), (f,) + c2))
                x.set_block((f, "B", pol), (f,) + c2,
                            left_tilde.block((f, "B", pol), (f,) + c2))
    return x, y, z_map


def _source_matrix(coupling: LayerCoupling, edge: str, rows: Space, cols: Space,
                   magnetic_sources=True, convention="local-jump"):
    """(J_volume, J_surface) of one layer side, mapping that layer's free
    modes at the boundary to continuity-row sources.

    Volume rows: electric = arriving kernel content, magnetic = its
    i k chi part minus the bare source coefficient.  Surface rows:
    electric zero, magnetic = the bare source coefficient (whose jump
    across the boundary is the only net surface drive).  The idler-row
    sector is conjugated (creation-operator components); its row index
    pairs with signal-mode columns.
    """
    j_v = BlockMatrix(rows, cols)
    j_s = BlockMatrix(rows, cols)
    if coupling.is_dark():
        return j_v, j_s
    blocks = project_to_basis(coupling, edge, convention)
    for row_field in FIELDS:
        col_field = "i" if row_field == "s" else "s"
        basis_row = coupling.basis_s if row_field == "s" else coupling.basis_i
        n_row = refractive_index(coupling.material, basis_row.centers)
        pref = (1.0 / np.sqrt(n_row))[:, None]
        for (rf, b, alpha, beta), arr in blocks.volume_e.items():
            if rf != row_field:
                continue
            ve = pref * arr
            vh = pref * blocks.volume_h[(rf, b, alpha, beta)]
            sh = pref * blocks.surface_h[(rf, b, alpha, beta)]
            if row_field == "i":
                ve, vh, sh = np.conj(ve), np.conj(vh), np.conj(sh)
            # key convention: alpha = row pol, beta = column pol
            row_pol, col_pol = alpha, beta
            j_v.add_block((row_field, "E", row_pol), (col_field, b, col_pol), ve)
            if magnetic_sources:
                j_v.add_block((row_field, "H", row_pol), (col_field, b, col_pol), vh)
                j_s.add_block((row_field, "H", row_pol), (col_field, b, col_pol), sh)
    return j_v, j_s


@dataclass
class EmissionOperators:
    """Linear scattering and first-order pair-emission maps of a stack."""

    structure: StructureSpec
    basis_s: SpectralBasis
    basis_i: SpectralBasis
    pump: PumpField
    f_linear: BlockMatrix
    g_volume: BlockMatrix
    g_surface: BlockMatrix
    boundary_sources: dict
    warnings: list
    area: float = 1.0

    @property
    def bins(self) -> int:
        return self.basis_s.bins


def build_emission(
    structure: StructureSpec,
    pump_spec: PumpSpec,
    basis_s: SpectralBasis,
    basis_i: SpectralBasis,
    area: float = 1.0,
    magnetic_sources: bool = True,
    keep_sources: bool = False,
    convention: str = "local-jump",
) -> EmissionOperators:
    """Assemble the scattering map and the volume/surface emission maps."""
    sums = np.unique(
        (basis_s.centers[:, None] + basis_i.centers[None, :]).ravel()
    )
    pump = propagate_pump(structure, pump_spec, sums)
    chain = TransferChain.build(structure, basis_s, basis_i)
    n_tot = structure.n_layers + 2
    bins = basis_s.bins
    t_full = chain.from_left[n_tot - 1]
    f_map = input_output_map(t_full)
    w_map = feed_in_map(f_map)
    rows = row_space("continuity", bins)
    modes = mode_space("modes", bins)
    out_sp, in_sp = f_map.row, f_map.col

    couplings = [
        LayerCoupling(structure, l, basis_s, basis_i, pump, area)
        for l in range(n_tot)
    ]
    g_v = BlockMatrix(out_sp, in_sp)
    g_s = BlockMatrix(out_sp, in_sp)
    sources = {}
    warnings = []
    b_emb = BlockMatrix(modes, out_sp)
    g_emb = BlockMatrix(modes, out_sp)
    eye = np.eye(bins)
    for f in FIELDS:
        for pol in POLS:
            b_emb.set_block((f, "B", pol), (f, "B", pol), eye)
            g_emb.set_block((f, "F", pol), (f, "F", pol), eye)

    for l in range(1, n_tot):
        left, right = couplings[l - 1], couplings[l]
        feed_left = chain.tilde_from_left(l - 1) @ w_map
        feed_right = chain.from_left[l] @ w_map
        if left.is_dark() and right.is_dark():
            if keep_sources:
                sources[l] = (BlockMatrix(out_sp, in_sp), BlockMatrix(out_sp, in_sp))
            continue
        response = (
            chain.interface[l] @ chain.from_right[l] @ g_emb
            - chain.interface[l - 1] @ chain.tilde_from_left(l - 1) @ b_emb
        )
        cond = response.condition_number()
        if cond > CONDITION_WARN:
            warnings.append(
                f"boundary {l}: response condition number {cond:.2e}"
            )
        jv_left, js_left = _source_matrix(
            left, "right", rows, modes, magnetic_sources, convention
        )
        jv_right, js_right = _source_matrix(
            right, "left", rows, modes, magnetic_sources, convention
        )
        k_v = jv_left @ feed_left - jv_right @ feed_right
        k_s = js_left @ feed_left - js_right @ feed_right
        s_v = response.solve(k_v, context=f"boundary {l} response")
        s_s = response.solve(k_s, context=f"boundary {l} response")
        s_v = BlockMatrix(out_sp, in_sp, s_v.data)
        s_s = BlockMatrix(out_sp, in_sp, s_s.data)
        g_v = g_v + s_v
        g_s = g_s + s_s
        if keep_sources:
            sources[l] = (s_v, s_s)

    for name, mat in (("F", f_map), ("G_V", g_v), ("G_S", g_s)):
        if not np.all(np.isfinite(mat.data)):
            raise ConfigError(f"non-finite entries in {name}")
    return EmissionOperators(
        structure=structure,
        basis_s=basis_s,
        basis_i=basis_i,
        pump=pump,
        f_linear=f_map,
        g_volume=g_v,
        g_surface=g_s,
        boundary_sources=sources,
        warnings=warnings,
        area=area,
    )


def pair_source(emission: EmissionOperators, l: int, kind: str) -> BlockMatrix:
    """Per-boundary source map (requires keep_sources=True at build)."""
    if l not in emission.boundary_sources:
        raise ConfigError(f"boundary {l} sources were not retained")
    return emission.boundary_sources[l][{"V": 0, "S": 1}[kind]]
