"""Exact quantum Kubo-weighted OTOC on a sinc-DVR grid.

The position grid is a tensor product of two 1D sinc-DVR bases
(Colbert-Miller), on which x is diagonal and p_x = -i hbar D with D the
antisymmetric sinc derivative.  One dense diagonalization of the grid
Hamiltonian gives the complete eigenbasis; matrix elements of x and p_x
are then rectangular arrays between a thermally retained "out" set and a
larger "internal" set used for the k-sum in

    b_nm(t) = sum_k [ e^{i(E_n-E_k)t} x_nk p_km - p_nk e^{i(E_k-E_m)t} x_km ],
    C(t)    = sum_nm w_nm |b_nm(t)|^2,

with Kubo weights w_nm = (e^{-bE_n} - e^{-bE_m}) / (b Z (E_m - E_n)),
w_nn = e^{-bE_n}/Z.  The internal set is grown until the t=0 commutator
closure [x, p]_nm = i hbar delta_nm holds to a set tolerance, which fixes
C(0) = hbar^2 to the same precision; only the outer sums are thermally
truncated.  b_nm(t) is temperature independent, so one table serves a
whole temperature sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse

from .series import OtocSeries


@dataclass(frozen=True)
class GridSpec:
    """DVR grid.  Defaults contain the classical sampling box
    [-6, 6] x [-2, 8] with margin in y for the Morse wall."""

    nx: int = 80
    ny: int = 64
    x_min: float = -6.0
    x_max: float = 6.0
    y_min: float = -3.0
    y_max: float = 9.0

    def __post_init__(self):
        if self.nx < 16 or self.ny < 16:
            raise ValueError("grid needs at least 16 points per axis")
        if self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise ValueError("grid extents are empty")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / (self.ny - 1)

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.ny)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    def nyquist_energy(self, m, hbar=1.0) -> float:
        """Kinetic energy of the fastest representable oscillation (the
        resolution ceiling for eigenstates)."""
        d = max(self.dx, self.dy)
        return hbar**2 * math.pi**2 / (2.0 * m * d * d)


def kinetic_1d(n, dx, m, hbar=1.0):
    """Sinc-DVR kinetic matrix: (hbar^2/2m dx^2) * {pi^2/3 on the diagonal,
    2 (-1)^{i-j} / (i-j)^2 off it}."""
    i = np.arange(n)
    d = i[:, None] - i[None, :]
    t = np.empty((n, n))
    with np.errstate(divide="ignore"):
        t = 2.0 * np.where(d == 0, 0.0, (-1.0) ** d / np.where(d == 0, 1, d) ** 2)
    np.fill_diagonal(t, math.pi**2 / 3.0)
    return (hbar**2 / (2.0 * m * dx * dx)) * t


def deriv_1d(n, dx):
    """Antisymmetric sinc-DVR first derivative, D_jk = (-1)^{j-k}/((j-k) dx),
    zero diagonal.  p = -i hbar D."""
    i = np.arange(n)
    d = i[:, None] - i[None, :]
    with np.errstate(divide="ignore"):
        out = (-1.0) ** d / (np.where(d == 0, 1, d) * dx)
    np.fill_diagonal(out, 0.0)
    return out


def potential_grid(pot, grid: GridSpec):
    """V on the grid, shape (nx, ny)."""
    pts = np.stack(np.meshgrid(grid.xs, grid.ys, indexing="ij"), axis=-1)
    return pot.value(pts)


def build_hamiltonian(pot, grid: GridSpec):
    """Sparse CSR grid Hamiltonian (row index g = ix * ny + iy).  Used for
    residual checks; the solve itself runs on a dense copy."""
    p = pot.params
    tx = scipy.sparse.csr_matrix(kinetic_1d(grid.nx, grid.dx, p.m, p.hbar))
    ty = scipy.sparse.csr_matrix(kinetic_1d(grid.ny, grid.dy, p.m, p.hbar))
    h = scipy.sparse.kron(tx, scipy.sparse.identity(grid.ny), format="csr")
    h = h + scipy.sparse.kron(scipy.sparse.identity(grid.nx), ty, format="csr")
    h = h + scipy.sparse.diags(potential_grid(pot, grid).ravel())
    return h.tocsr()


@dataclass
class EigenSpectrum:
    """Complete eigensystem of the grid Hamiltonian.  `vecs` columns are
    eigenvectors in grid normalization (sum of squares = 1)."""

    grid: GridSpec
    energies: np.ndarray
    vecs: np.ndarray
    max_residual: float
    meta: dict = field(default_factory=dict)

    def states_below(self, e) -> int:
        return int(np.searchsorted(self.energies, e))


def solve_spectrum(pot, grid: GridSpec | None = None,
                   n_residual=24, residual_tol=1e-8) -> EigenSpectrum:
    """Dense diagonalization of the grid Hamiltonian.

    The full basis (not just low states) is kept so commutator closure in
    downstream k-sums can be made exact to any requested tolerance.
    Raises with a residual report if ||H psi - E psi|| exceeds
    residual_tol on the checked states.
    """
    grid = grid or GridSpec()
    p = pot.params
    n = grid.size
    h = np.zeros((n, n))
    hr = h.reshape(grid.nx, grid.ny, grid.nx, grid.ny)
    tx = kinetic_1d(grid.nx, grid.dx, p.m, p.hbar)
    ty = kinetic_1d(grid.ny, grid.dy, p.m, p.hbar)
    for iy in range(grid.ny):
        hr[:, iy, :, iy] += tx
    for ix in range(grid.nx):
        hr[ix, :, ix, :] += ty
    v = potential_grid(pot, grid).ravel()
    h[np.arange(n), np.arange(n)] += v
    energies, vecs = scipy.linalg.eigh(h, overwrite_a=True, driver="evd")

    hs = build_hamiltonian(pot, grid)
    idx = np.unique(np.concatenate([
        np.arange(min(n_residual, n)),
        np.linspace(0, n - 1, min(n_residual, n)).astype(int)]))
    res = hs @ vecs[:, idx] - vecs[:, idx] * energies[idx]
    scale = np.maximum(np.abs(energies[idx]), 1.0)
    max_res = float(np.max(np.linalg.norm(res, axis=0) / scale))
    if max_res > residual_tol:
        raise RuntimeError(
            f"eigensolve residual {max_res:.3e} exceeds {residual_tol:.0e} "
            f"on states {idx.tolist()}")
    meta = {"nx": grid.nx, "ny": grid.ny, "v_min": float(v.min()),
            "max_residual": max_res, "m": p.m}
    return EigenSpectrum(grid=grid, energies=energies, vecs=vecs,
                         max_residual=max_res, meta=meta)


@dataclass
class ScramblingTable:
    """Rectangular x / p_x matrix elements between `n_out` thermally kept
    states and `n_int` internal states (p_nk = i * p_im[n, k])."""

    e_out: np.ndarray
    e_int: np.ndarray
    x_rect: np.ndarray
    p_im: np.ndarray
    comm_err: float
    hbar: float
    psi_out: np.ndarray  # (n_out, nx, ny)
    grid: GridSpec
    meta: dict = field(default_factory=dict)

    @property
    def n_out(self) -> int:
        return self.e_out.size

    @property
    def n_int(self) -> int:
        return self.e_int.size


def scrambling_table(spec: EigenSpectrum, e_out, hbar=1.0, comm_tol=1e-12,
                     int_pad=25.0) -> ScramblingTable:
    """Matrix-element table for all states with E <= e_out.

    The internal set starts at E <= e_out + int_pad and is doubled in
    reach until the t=0 k-sum reproduces the exact grid commutator
    [x, p] = i hbar (I - s s^T), s the alternating Nyquist vector, to
    comm_tol * hbar; the complete grid basis closes it by construction.
    The Nyquist correction is exponentially small on thermal states (its
    largest projection is recorded as `nyquist_weight`).
    """
    grid = spec.grid
    n_out = spec.states_below(e_out)
    if n_out < 2:
        raise ValueError(f"e_out={e_out} keeps fewer than 2 states")
    e_nyq = grid.nyquist_energy(spec.meta.get("m", 1.0), hbar)
    if e_out >= e_nyq:
        raise ValueError(
            f"grid too coarse: retention cutoff {e_out:.2f} is not below "
            f"the kinetic resolution ceiling {e_nyq:.2f}")
    n_all = spec.energies.size
    vec_o = spec.vecs[:, :n_out]
    # unnormalized alternating vector: [x, p] = i hbar (I - s s^T (x) I)
    sx = np.where(np.arange(grid.nx) % 2 == 0, 1.0, -1.0)
    amp = np.einsum("x,xyn->ny", sx,
                    vec_o.reshape(grid.nx, grid.ny, n_out))
    proj = amp @ amp.T
    target = hbar * (np.eye(n_out) - proj)
    d = deriv_1d(grid.nx, grid.dx)

    pad = int_pad
    while True:
        n_int = max(spec.states_below(e_out + pad), n_out)
        vec_i = spec.vecs[:, :n_int]
        xg = np.repeat(grid.xs, grid.ny)
        x_rect = vec_o.T @ (xg[:, None] * vec_i)
        dv = np.tensordot(d, vec_i.reshape(grid.nx, grid.ny, n_int),
                          axes=(1, 0)).reshape(n_all, n_int)
        p_im = -hbar * (vec_o.T @ dv)
        closure = x_rect @ p_im.T
        closure += closure.T
        comm_err = float(np.abs(-closure - target).max())
        if comm_err <= comm_tol * hbar or n_int == n_all:
            break
        pad = 2.0 * pad if spec.states_below(e_out + 2.0 * pad) > n_int \
            else math.inf
    psi = vec_o.T.reshape(n_out, grid.nx, grid.ny).copy()
    meta = {"e_out": float(e_out), "n_out": n_out, "n_int": n_int,
            "comm_err": comm_err, "max_residual": spec.max_residual,
            "nyquist_weight": float(np.abs(proj).max())}
    return ScramblingTable(e_out=spec.energies[:n_out].copy(),
                           e_int=spec.energies[:n_int].copy(),
                           x_rect=x_rect, p_im=p_im, comm_err=comm_err,
                           hbar=hbar, psi_out=psi, grid=grid, meta=meta)


def kubo_weights(e_out, beta):
    """Symmetric nonnegative weight matrix; rows/cols ordered like e_out.
    Z runs over the same retained states, so the t=0 sum is exactly
    hbar^2 regardless of truncation."""
    e = np.asarray(e_out, dtype=float)
    e0 = e.min()
    bw = np.exp(-beta * (e - e0))
    z = bw.sum()
    de = e[None, :] - e[:, None]
    num = bw[:, None] - bw[None, :]
    w = np.empty_like(de)
    np.divide(num, beta * z * de, where=de != 0, out=w)
    ii = np.arange(e.size)
    w[ii, ii] = bw / z
    # degenerate off-diagonal pairs: limit of the Kubo integrand
    mask = (de == 0)
    w[mask & (ii[:, None] != ii[None, :])] = 0.0
    deg = np.argwhere(mask & (ii[:, None] != ii[None, :]))
    for n, m in deg:
        w[n, m] = bw[n] / z
    return w


def b_matrix(table: ScramblingTable, t):
    """b_nm(t)/i as a complex (n_out, n_out) array; equals hbar*I at t=0
    up to the table's closure error."""
    ph = np.exp(-1j * table.e_int * t)
    left = -(np.exp(1j * table.e_out * t)[:, None]
             * ((table.x_rect * ph) @ table.p_im.T))
    right = -((table.p_im * np.conj(ph)) @ table.x_rect.T) \
        * np.exp(-1j * table.e_out * t)[None, :]
    return left + right


def check_tail(table: ScramblingTable, temperature, kb=1.0, tail_tol=1e-6):
    """Boltzmann truncation guard: exp(-beta (e_cut - E_0)) / Z' must be
    below tail_tol.  Raises with the required cutoff if violated."""
    beta = 1.0 / (kb * temperature)
    e = table.e_out
    zp = float(np.exp(-beta * (e - e[0])).sum())
    tail = math.exp(-beta * (float(e[-1]) - float(e[0]))) / zp
    if tail >= tail_tol:
        e_need = float(e[0]) + math.log(1.0 / (tail_tol * zp)) / beta
        raise ValueError(
            f"thermal tail {tail:.2e} >= {tail_tol:.0e} at T={temperature}; "
            f"rebuild the table with e_out >= {e_need:.2f}")
    return tail


def kubo_otoc(table: ScramblingTable, temperature, times, kb=1.0,
              tail_tol=1e-6, meta=None) -> OtocSeries:
    tail = check_tail(table, temperature, kb, tail_tol)
    beta = 1.0 / (kb * temperature)
    w = kubo_weights(table.e_out, beta)
    times = np.asarray(times, dtype=float)
    c = np.empty(times.size)
    for i, t in enumerate(times):
        b = b_matrix(table, t)
        c[i] = float(np.sum(w * (b.real**2 + b.imag**2)))
    md = {"temperature": float(temperature), "tail_weight": tail,
          **table.meta}
    md.update(meta or {})
    return OtocSeries(times=times, values=c,
                      std_errors=np.zeros_like(c),
                      n_samples=table.n_out, kind="quantum_kubo", meta=md)


def auto_e_cut(spec: EigenSpectrum, temperature, kb=1.0, pad_kt=10.0,
               barrier=None, tail=1e-6):
    """Retention cutoff: barrier + pad_kt * k_B T, raised until the
    Boltzmann weight exp(-beta (E_last - E_0)) of the highest state the
    cutoff actually retains drops below `tail` (so the guard holds even
    when the spectrum is sparse and e_cut falls inside a gap)."""
    t_kb = kb * temperature
    e0 = float(spec.energies[0])
    e_top = float(spec.energies[-1])
    base = e0 if barrier is None else barrier
    e_cut = base + pad_kt * t_kb
    while e_cut < e_top:
        e_last = float(spec.energies[max(spec.states_below(e_cut), 1) - 1])
        if math.exp(-(e_last - e0) / t_kb) < tail:
            break
        e_cut += t_kb
    return min(e_cut, e_top)


def quantum_otoc(pot, temperature, t_max=8.0, dt_out=0.05,
                 grid: GridSpec | None = None,
                 table: ScramblingTable | None = None,
                 comm_tol=1e-12) -> OtocSeries:
    """End-to-end exact OTOC at one temperature.  Pass a prebuilt `table`
    (covering the largest temperature of a sweep) to amortize the solve."""
    if table is None:
        spec = solve_spectrum(pot, grid)
        e_cut = auto_e_cut(spec, temperature, kb=pot.params.kb,
                           barrier=pot.params.barrier_height)
        table = scrambling_table(spec, e_cut, hbar=pot.params.hbar,
                                 comm_tol=comm_tol)
    n = int(round(t_max / dt_out))
    times = np.linspace(0.0, n * dt_out, n + 1)
    return kubo_otoc(table, temperature, times, kb=pot.params.kb)


def scrambling_elements(table: ScramblingTable, t):
    """|b_nm(t)|^2 matrix (units hbar^2), for operator-spreading maps."""
    b = b_matrix(table, t)
    return b.real**2 + b.imag**2


def pair_contributions(table: ScramblingTable, temperature, t, kb=1.0,
                       tail_tol=1e-6):
    """Per-pair decomposition of the OTOC at time t: structured array of
    (n, m, weight, b2, contribution) sorted by contribution descending.
    The contribution column sums to the kubo_otoc value at t."""
    check_tail(table, temperature, kb, tail_tol)
    beta = 1.0 / (kb * temperature)
    w = kubo_weights(table.e_out, beta)
    b2 = scrambling_elements(table, t)
    n = table.n_out
    nn, mm = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    out = np.empty(n * n, dtype=[("n", "i8"), ("m", "i8"),
                                 ("weight", "f8"), ("b2", "f8"),
                                 ("contribution", "f8")])
    out["n"], out["m"] = nn.ravel(), mm.ravel()
    out["weight"], out["b2"] = w.ravel(), b2.ravel()
    out["contribution"] = (w * b2).ravel()
    return out[np.argsort(-out["contribution"], kind="stable")]


# ------------------------------------------------------------------ Husimi

def well_frequencies(pot):
    """Harmonic frequencies (w_x, w_y) at the global minimum."""
    q0, _ = pot.minimum()
    h = pot.hess(q0)
    m = pot.mass
    return math.sqrt(h[0, 0] / m), math.sqrt(h[1, 1] / m)


def transverse_ground_state(pot, grid: GridSpec):
    """Ground state of the uncoupled transverse Hamiltonian: the 1D
    y-potential along x = 0 (pure Morse profile for the production
    surface, centered at y = 0)."""
    p = pot.params
    ty = kinetic_1d(grid.ny, grid.dy, p.m, p.hbar)
    pts = np.stack([np.zeros(grid.ny), grid.ys], axis=-1)
    hy = ty + np.diag(pot.value(pts))
    _, v = scipy.linalg.eigh(hy)
    chi = v[:, 0]
    return chi * np.sign(chi.sum())


def husimi_map(table: ScramblingTable, pot, state_indices, x_grid, p_grid,
               sigma_x=None):
    """Husimi projection |<g_{x0,p0} (x) chi_0 | psi_n>|^2 on the (x, p_x)
    plane, with a coherent state in x (width sigma_x, default matched to
    the well frequency) and the transverse ground state in y.

    Returns (len(state_indices), len(x_grid), len(p_grid)), raw overlaps.
    """
    grid = table.grid
    hbar = table.hbar
    if sigma_x is None:
        wx, _ = well_frequencies(pot)
        sigma_x = math.sqrt(hbar / (2.0 * pot.mass * wx))
    chi = transverse_ground_state(pot, grid)
    xs = grid.xs
    out = np.empty((len(state_indices), len(x_grid), len(p_grid)))
    # collapse y first: psi_x[n, ix] = sum_iy psi[n, ix, iy] chi[iy]
    psi_x = table.psi_out[state_indices] @ chi
    norm = (2.0 * math.pi * sigma_x**2) ** -0.25 * math.sqrt(grid.dx)
    for i, x0 in enumerate(np.asarray(x_grid, dtype=float)):
        gauss = norm * np.exp(-((xs - x0) ** 2) / (4.0 * sigma_x**2))
        for j, p0 in enumerate(np.asarray(p_grid, dtype=float)):
            coh = gauss * np.exp(-1j * p0 * xs / hbar)
            amp = psi_x @ coh
            out[:, i, j] = amp.real**2 + amp.imag**2
    return out


def husimi_section(table: ScramblingTable, pot, state_index, x_grid,
                   p_grid, sigma_x=None):
    """Single-state Husimi map normalized to unit maximum (plot scale)."""
    q = husimi_map(table, pot, [state_index], x_grid, p_grid, sigma_x)[0]
    peak = q.max()
    return q / peak if peak > 0 else q
