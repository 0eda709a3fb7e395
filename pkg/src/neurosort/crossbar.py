"""Memristive crossbar classifier modeled as a linear resistive network.

Node layout: junction (i, j) of an ``rows x cols`` array has linear index
``k = j * rows + i`` (column-major) and two circuit nodes, the row-bar node
``2k`` and the column-bar node ``2k + 1``. The memristor joins the two. Bar
segments between neighbouring junctions are wire conductances ``g_p``;
current enters row i at its column-0 node and leaves each column bar through
the termination ``g_t`` at row ``rows - 1``. The last column is the dummy
column that equalizes total row conductance.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.io
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigError, DimensionError, NumericalError

COND_LIMIT = 1e14
RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class CrossbarConfig:
    rows: int = 300
    cols: int = 4                # real columns + 1 dummy
    g_on: float = 1e-4           # 10 kOhm
    g_off: float = 1e-6          # 1 MOhm
    g_p: float = 0.5             # 2 Ohm wire segment
    g_t: float = 1e-4            # 10 kOhm termination
    i_in_on: float = 0.3e-6
    i_in_off: float = 0.0
    v_dd: float = 1.2
    delta_v_max: float = 0.2
    t_on: float = 50e-9
    t_data: float = 5e-6
    # Capacitor sized for this many active rows; None sizes it per spike.
    design_n_active: Optional[int] = None

    def __post_init__(self):
        if self.rows < 1 or self.cols < 2:
            raise ConfigError("need rows >= 1 and cols >= 2 (one real column plus dummy)")
        if not self.g_on > self.g_off > 0:
            raise ConfigError("need g_on > g_off > 0")
        if not (self.g_p > 0 and self.g_t > 0):
            raise ConfigError("g_p and g_t must be positive")
        if not 0 < self.t_on <= self.t_data:
            raise ConfigError("need 0 < t_on <= t_data")
        if not self.v_dd > 0:
            raise ConfigError("v_dd must be positive")
        if self.i_in_on < 0 or self.i_in_off < 0:
            raise ConfigError("input currents must be nonnegative")
        if not 100e-9 <= self.i_in_on <= 1e-6:
            warnings.warn(f"synaptic current {self.i_in_on:.3g} A outside the 100 nA - 1 uA window",
                          RuntimeWarning, stacklevel=3)

    @property
    def classes(self) -> int:
        return self.cols - 1

    @property
    def beta(self) -> float:
        return self.t_on / self.t_data

    @classmethod
    def near_ideal(cls, **kwargs) -> "CrossbarConfig":
        """Low-loss wires (0.05 Ohm) and a 1 Ohm termination that acts
        as a virtual ground, so column currents track the weighted sums.
        The defaults model the physical 10 kOhm termination instead."""
        kwargs.setdefault("g_p", 20.0)
        kwargs.setdefault("g_t", 1.0)
        return cls(**kwargs)

    @classmethod
    def for_weights(cls, w, **kwargs) -> "CrossbarConfig":
        w = np.asarray(w)
        return cls(rows=w.shape[0], cols=w.shape[1] + 1, **kwargs)


def nominal_conductances(cfg: CrossbarConfig, w) -> np.ndarray:
    w = np.asarray(w, dtype=bool)
    if w.shape != (cfg.rows, cfg.classes):
        raise DimensionError(f"weights {w.shape} do not fit a {cfg.rows}x{cfg.cols} crossbar")
    return np.where(w, cfg.g_on, cfg.g_off)


def dummy_column(cfg: CrossbarConfig, real_g) -> np.ndarray:
    """Dummy-column conductances bringing every row to the same total:
    ``max_row_total - row_total + g_off``."""
    totals = np.asarray(real_g, dtype=np.float64).sum(axis=1)
    return np.maximum(totals.max() - totals + cfg.g_off, cfg.g_off)


def junction_matrix(cfg: CrossbarConfig, w, real_g=None) -> np.ndarray:
    """Full ``rows x cols`` junction conductances including the dummy
    column. ``real_g`` overrides the nominal conductances of the real
    columns (e.g. perturbed values); the dummy is always sized from the
    nominal programming."""
    nominal = nominal_conductances(cfg, w)
    if real_g is None:
        real_g = nominal
    real_g = np.asarray(real_g, dtype=np.float64)
    if real_g.shape != nominal.shape:
        raise DimensionError("conductance matrix does not match weights")
    return np.column_stack([real_g, dummy_column(cfg, nominal)])


def row_node(rows: int, i: int, j: int) -> int:
    return 2 * (j * rows + i)


def col_node(rows: int, i: int, j: int) -> int:
    return 2 * (j * rows + i) + 1


def stamp_triplets(junction_g, g_p, g_t):
    """COO triplets ``(r, c, value)`` of the nodal conductance matrix.

    Works on any element type supporting ``+`` and unary ``-`` (floats or
    sympy symbols); duplicates are meant to be summed.
    """
    junction_g = np.asarray(junction_g, dtype=object)
    rows, cols = junction_g.shape
    trip = []

    def between(a, b, g):
        trip.extend([(a, a, g), (b, b, g), (a, b, -g), (b, a, -g)])

    for j in range(cols):
        for i in range(rows):
            between(row_node(rows, i, j), col_node(rows, i, j), junction_g[i, j])
            if j + 1 < cols:
                between(row_node(rows, i, j), row_node(rows, i, j + 1), g_p)
            if i + 1 < rows:
                between(col_node(rows, i, j), col_node(rows, i + 1, j), g_p)
        t = col_node(rows, rows - 1, j)
        trip.append((t, t, g_t))
    return trip


def _assemble_sparse(junction_g, g_p, g_t) -> sp.csr_matrix:
    g = np.asarray(junction_g, dtype=np.float64)
    rows, cols = g.shape
    n = 2 * rows * cols
    ii, jj = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    k = jj * rows + ii
    rn, cn = 2 * k, 2 * k + 1
    a_list, b_list, v_list = [rn.ravel()], [cn.ravel()], [g.ravel()]
    if cols > 1:  # row-bar segments
        a_list.append(rn[:, :-1].ravel())
        b_list.append(rn[:, 1:].ravel())
        v_list.append(np.full(rows * (cols - 1), float(g_p)))
    if rows > 1:  # column-bar segments
        a_list.append(cn[:-1, :].ravel())
        b_list.append(cn[1:, :].ravel())
        v_list.append(np.full((rows - 1) * cols, float(g_p)))
    a = np.concatenate(a_list)
    b = np.concatenate(b_list)
    v = np.concatenate(v_list)
    term = cn[-1, :]
    r = np.concatenate([a, b, a, b, term])
    c = np.concatenate([a, b, b, a, term])
    val = np.concatenate([v, v, -v, -v, np.full(cols, float(g_t))])
    return sp.coo_matrix((val, (r, c)), shape=(n, n)).tocsr()


@dataclass
class ConductanceSystem:
    g: sp.csr_matrix
    i: np.ndarray          # (N,) or (N, k) injected currents
    rows: int
    cols: int
    g_t: float

    @property
    def size(self) -> int:
        return self.g.shape[0]

    def node(self, row: int, col: int, side: str) -> int:
        if side == "row":
            return row_node(self.rows, row, col)
        if side == "col":
            return col_node(self.rows, row, col)
        raise ValueError("side must be 'row' or 'col'")

    @property
    def node_index(self) -> dict:
        return {(i, j, s): self.node(i, j, s)
                for j in range(self.cols) for i in range(self.rows) for s in ("row", "col")}

    @property
    def termination_nodes(self) -> np.ndarray:
        return np.array([col_node(self.rows, self.rows - 1, j) for j in range(self.cols)])

    @property
    def input_nodes(self) -> np.ndarray:
        return np.array([row_node(self.rows, i, 0) for i in range(self.rows)])


def input_currents(cfg: CrossbarConfig, spikes) -> np.ndarray:
    """Per-row injected currents; ``spikes`` may be (rows,) or (n, rows)."""
    s = np.asarray(spikes, dtype=bool)
    if s.shape[-1] != cfg.rows:
        raise DimensionError(f"spike length {s.shape[-1]} != rows {cfg.rows}")
    return np.where(s, cfg.i_in_on, cfg.i_in_off)


def assemble(junction_g, g_p, g_t, row_currents=None) -> ConductanceSystem:
    """Nodal system for an explicit junction conductance matrix."""
    junction_g = np.asarray(junction_g, dtype=np.float64)
    rows, cols = junction_g.shape
    g = _assemble_sparse(junction_g, g_p, g_t)
    b = np.zeros(g.shape[0])
    if row_currents is not None:
        row_currents = np.asarray(row_currents, dtype=np.float64)
        if row_currents.shape[0] != rows:
            raise DimensionError("one input current per row expected")
        if row_currents.ndim == 2:
            b = np.zeros((g.shape[0], row_currents.shape[1]))
        b[[row_node(rows, i, 0) for i in range(rows)]] = row_currents
    return ConductanceSystem(g, b, rows, cols, float(g_t))


def build_system(cfg: CrossbarConfig, w, spike, real_g=None) -> ConductanceSystem:
    return assemble(junction_matrix(cfg, w, real_g), cfg.g_p, cfg.g_t, input_currents(cfg, spike))


@dataclass
class CrossbarSolution:
    v: np.ndarray
    column_currents: np.ndarray
    residual: float


class Factorization:
    """Sparse LU of a conductance matrix, reusable across right-hand sides."""

    def __init__(self, g):
        g = sp.csc_matrix(g)
        self.g = g
        try:
            self.lu = spla.splu(g, permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as exc:
            raise NumericalError(f"singular conductance matrix: {exc}", 0.0) from None
        pivots = np.abs(self.lu.U.diagonal())
        self.smallest_pivot = float(pivots.min())
        if self.smallest_pivot == 0 or not np.isfinite(pivots).all():
            raise NumericalError("singular conductance matrix", self.smallest_pivot)
        n = g.shape[0]
        inv = spla.LinearOperator((n, n), matvec=self.lu.solve,
                                  rmatvec=lambda x: self.lu.solve(x, trans="T"))
        norm_inv = spla.onenormest(inv) if n > 1 else abs(1.0 / g[0, 0])
        self.condition = float(spla.norm(g, 1) * norm_inv)
        if not self.condition < COND_LIMIT:
            raise NumericalError(f"conductance matrix ill-conditioned (cond ~ {self.condition:.2e})",
                                 self.smallest_pivot)

    def solve(self, b, refine: int = 3) -> np.ndarray:
        """LU solve plus iterative refinement with extended-precision
        residuals. The wire stamps make double-precision ``b - G x``
        cancel badly when g_p is large, and a solution stored in double
        cannot get below g_p * |v| * eps / |i|; once refinement is needed
        the iterate is therefore kept in long double."""
        b = np.asarray(b, dtype=np.float64)
        x = self.lu.solve(b)
        r = b - self.g @ x
        if _relative_residual(r, b) <= 0.01 * RESIDUAL_TOL:
            return x
        x = x.astype(np.longdouble)
        for _ in range(refine):
            r = residual_vector(self.g, x, b, exact=True)
            if _relative_residual(r, b) <= 0.01 * RESIDUAL_TOL:
                break
            x = x + self.lu.solve(np.asarray(r, dtype=np.float64))
        return x


def residual_vector(g, x, b, exact: bool = False) -> np.ndarray:
    """``b - g @ x``. Computed in double first; recomputed in long double
    when that is not clearly below the tolerance (or when ``exact``)."""
    g = sp.csr_matrix(g)
    if not exact:
        r = b - g @ np.asarray(x, dtype=np.float64)
        if _relative_residual(r, b) <= 0.01 * RESIDUAL_TOL:
            return r
    xl = np.asarray(x, dtype=np.longdouble)
    prod = g.data.astype(np.longdouble)
    prod = prod[:, None] * xl[g.indices] if xl.ndim == 2 else prod * xl[g.indices]
    # every row has a nonzero diagonal, so reduceat sees no empty segments
    return np.asarray(b, dtype=np.longdouble) - np.add.reduceat(prod, g.indptr[:-1], axis=0)


def _relative_residual(r, b) -> float:
    scale = np.abs(b).max()
    if scale == 0:
        return float(np.abs(r).max())
    return float(np.abs(r).max() / scale)


def solve(system: ConductanceSystem, factor: Optional[Factorization] = None) -> CrossbarSolution:
    """Solve G v = i and report termination currents and the relative
    infinity-norm residual."""
    factor = factor or Factorization(system.g)
    v = factor.solve(system.i)
    residual = _relative_residual(residual_vector(system.g, v, system.i), system.i)
    if residual > RESIDUAL_TOL:
        raise NumericalError(f"residual {residual:.2e} above tolerance", factor.smallest_pivot)
    currents = np.asarray(system.g_t * v[system.termination_nodes], dtype=np.float64)
    return CrossbarSolution(v, currents, residual)


def capacitance_for(cfg: CrossbarConfig, n_active: int) -> float:
    """Column capacitor from C_L * dV = N * I_synapse * T_on."""
    if n_active < 0:
        raise ValueError("n_active must be >= 0")
    return n_active * cfg.i_in_on * cfg.t_on / cfg.delta_v_max


@dataclass
class CrossbarResult:
    class_id: int
    voltages: np.ndarray     # final capacitor voltage per real column
    saturated: bool = False
    warning: Optional[str] = None


class CrossbarNetwork:
    """A programmed crossbar: assembled and factored once, then applied to
    any number of spike trains."""

    def __init__(self, cfg: CrossbarConfig, w, real_g=None):
        self.cfg = cfg
        self.junctions = junction_matrix(cfg, w, real_g)
        self.system = assemble(self.junctions, cfg.g_p, cfg.g_t)
        self.factor = Factorization(self.system.g)

    def rhs(self, spikes) -> np.ndarray:
        cur = np.atleast_2d(input_currents(self.cfg, spikes))   # (n, rows)
        b = np.zeros((self.system.size, cur.shape[0]))
        b[self.system.input_nodes] = cur.T
        return b

    def solve(self, spikes) -> CrossbarSolution:
        """Node voltages for one or more spike trains (one column each)."""
        b = self.rhs(spikes)
        v = self.factor.solve(b)
        residual = _relative_residual(residual_vector(self.system.g, v, b), b)
        if residual > RESIDUAL_TOL:
            raise NumericalError(f"residual {residual:.2e} above tolerance", self.factor.smallest_pivot)
        currents = np.asarray(self.cfg.g_t * v[self.system.termination_nodes], dtype=np.float64)  # (cols, n)
        return CrossbarSolution(v, currents, residual)

    def column_currents(self, spikes) -> np.ndarray:
        """(n, cols) termination currents, dummy column last."""
        return self.solve(spikes).column_currents.T

    def final_voltages(self, spikes):
        """Capacitor voltages after all active rows have been applied.

        Each active row discharges column j by I_ij * t_on / C_L; by
        superposition the sum over rows equals the all-rows solve.
        Returns ``(voltages (n, classes), droop (n, classes))``.
        """
        spikes = np.atleast_2d(np.asarray(spikes, dtype=bool))
        charge = self.column_currents(spikes)[:, :-1] * self.cfg.t_on
        n_active = spikes.sum(axis=1) if self.cfg.design_n_active is None \
            else np.full(spikes.shape[0], self.cfg.design_n_active)
        c_l = np.array([capacitance_for(self.cfg, int(n)) for n in n_active])
        with np.errstate(divide="ignore", invalid="ignore"):
            droop = np.where(c_l[:, None] > 0, charge / c_l[:, None], 0.0)
        return np.maximum(self.cfg.v_dd - droop, 0.0), droop

    def classify(self, spike) -> CrossbarResult:
        v, droop = self.final_voltages(spike)
        return _result(self.cfg, v[0], droop[0])

    def predict(self, spikes) -> np.ndarray:
        v, _ = self.final_voltages(spikes)
        return np.argmin(v, axis=1)


def _result(cfg, v, droop) -> CrossbarResult:
    saturated = bool((droop > cfg.v_dd).any())
    msg = None
    if saturated:
        msg = f"column droop {droop.max():.3g} V exceeds v_dd {cfg.v_dd} V"
        warnings.warn(msg, RuntimeWarning, stacklevel=3)
    return CrossbarResult(int(np.argmin(v)), v, saturated, msg)


def classify_crossbar(cfg: CrossbarConfig, w, spike, real_g=None, sequential: bool = False) -> CrossbarResult:
    """Classify one spike train by capacitor discharge.

    ``sequential=True`` drives the active rows one at a time and sums the
    per-row charge, instead of the single superposed solve.
    """
    net = CrossbarNetwork(cfg, w, real_g)
    if not sequential:
        return net.classify(spike)
    spike = np.asarray(spike, dtype=bool)
    active = np.flatnonzero(spike)
    if cfg.i_in_off != 0:
        raise ConfigError("sequential mode assumes i_in_off == 0")
    charge = np.zeros(cfg.classes)
    if active.size:
        single = np.zeros((active.size, cfg.rows), dtype=bool)
        single[np.arange(active.size), active] = True
        charge = net.column_currents(single)[:, :-1].sum(axis=0) * cfg.t_on
    n_active = int(spike.sum()) if cfg.design_n_active is None else cfg.design_n_active
    c_l = capacitance_for(cfg, n_active)
    droop = charge / c_l if c_l > 0 else np.zeros(cfg.classes)
    return _result(cfg, np.maximum(cfg.v_dd - droop, 0.0), droop)


def dump_matrix_market(system: ConductanceSystem, path, comment: str = ""):
    scipy.io.mmwrite(os.fspath(path), system.g.tocoo(), comment=comment, field="real",
                     symmetry="symmetric")
