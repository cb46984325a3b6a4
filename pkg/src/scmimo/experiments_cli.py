"""Sweep orchestration and command-line harness.

Subcommands:

* ``sweep --config <file> [--override k=v ...]`` — run a configured
  (filter x correlation-parameter x power-grid) sweep and write a CSV.
* ``validate --suite <closed_forms|appendix|zero_forcing|figures>`` —
  run a named acceptance suite; prints one line per check and exits
  nonzero on any failure.
* ``plot --csv <file> --out <script.py>`` — emit a standalone matplotlib
  script that renders the sweep curves (one curve per filter/parameter).
* ``beta --config <file> --rho-db <x>`` — report the optimized ridge
  parameter for the config's regularized filter at one power point.

Config files are flat ``key = value`` text with dotted keys ('#' starts
a comment); every value can be overridden from the command line. The
default seed comes from the config, else the SCMIMO_SEED environment
variable, else 12345.
"""

import argparse
import concurrent.futures
import csv
import dataclasses
import math
import os
import sys

import numpy as np

from . import analysis
from .analysis import (Scenario, buckets_to_result, cmfe_rate_closed,
                       cmfp_rate_closed, coop_capacity, mc_buckets,
                       sum_rate_mc)
from .channel import (DEFAULT_SEED, SimulationDims, draw_channel,
                      exponential_pdp, trial_rng)
from .corr_models import (bessel_correlation, exponential_correlation,
                          identity_correlation, ula, upa)

CSV_HEADER = ("link,filter,corr_model,corr_param,mu,rho_f_db,rate_bpcu,"
              "desired,if,isi,mui,awgn,trials,seed")

BETA_FILTERS = ("rzfp", "mmsee")

RHO_GRID_DEFAULT = [-10.0 + 2.5 * i for i in range(13)]

CONFIG_KEYS = frozenset([
    "link", "filters", "corr.model", "corr.alpha", "corr.pairs",
    "geometry.kind", "geometry.m", "geometry.m_x", "geometry.spacing",
    "dims.k", "dims.l", "dims.n", "dims.t", "dims.t_c",
    "grid.rho_db", "trials", "seed",
    "beta.mode", "beta.value", "beta.trials",
    "dl_framing", "output",
])


@dataclasses.dataclass
class ScenarioConfig:
    link: str
    filters: list
    corr_model: str
    corr_params: list          # floats (alpha) or (eta, mu) tuples
    geometry_kind: str
    M: int
    M_x: int
    spacing: float
    K: int
    L: int
    N: int
    T: int
    T_c: int
    rho_grid: list
    trials: int
    seed: int
    beta_mode: str = "grid_opt"
    beta_value: float = 0.0
    beta_trials: int = 100
    dl_framing: str = "circular"
    output: str = "sweep.csv"


def _parse_kv_file(path):
    kv = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', "
                                 f"got {raw.strip()!r}")
            key, value = line.split("=", 1)
            kv[key.strip()] = value.strip()
    return kv


def _floats(text):
    return [float(tok) for tok in text.split(",") if tok.strip()]


def load_config(path, overrides=()):
    """Parse a flat key=value config file, then apply KEY=VALUE overrides."""
    kv = _parse_kv_file(path)
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"override must look like key=value: {item!r}")
        key, value = item.split("=", 1)
        kv[key.strip()] = value.strip()

    unknown = sorted(k for k in kv if k not in CONFIG_KEYS)
    if unknown:
        raise ValueError(f"unknown config key(s): {', '.join(unknown)}")

    def need(key):
        if key not in kv:
            raise ValueError(f"{key}: missing required config key")
        return kv[key]

    link = need("link")
    if link not in ("downlink", "uplink"):
        raise ValueError(f"link: expected downlink or uplink, got {link!r}")
    filters = [f.strip().lower() for f in need("filters").split(",")]
    expected = analysis.DL_FILTERS if link == "downlink" \
        else analysis.UL_FILTERS
    for f in filters:
        if f not in expected:
            raise ValueError(f"filters: {f!r} is not a {link} filter "
                             f"(expected a subset of {expected})")

    corr_model = need("corr.model")
    if corr_model == "exponential":
        params = _floats(need("corr.alpha"))
    elif corr_model == "bessel":
        params = []
        for pair in need("corr.pairs").split(";"):
            eta_mu = _floats(pair)
            if len(eta_mu) != 2:
                raise ValueError(f"corr.pairs: expected 'eta,mu' pairs "
                                 f"separated by ';', got {pair!r}")
            params.append((eta_mu[0], eta_mu[1]))
    elif corr_model == "identity":
        params = [None]
    else:
        raise ValueError(f"corr.model: unknown model {corr_model!r}")

    seed = int(kv.get("seed", os.environ.get("SCMIMO_SEED", DEFAULT_SEED)))
    cfg = ScenarioConfig(
        link=link, filters=filters, corr_model=corr_model,
        corr_params=params,
        geometry_kind=kv.get("geometry.kind", "ula"),
        M=int(need("geometry.m")),
        M_x=int(kv.get("geometry.m_x", kv.get("geometry.m"))),
        spacing=float(kv.get("geometry.spacing", "0.5")),
        K=int(need("dims.k")), L=int(need("dims.l")),
        N=int(need("dims.n")), T=int(need("dims.t")),
        T_c=int(need("dims.t_c")),
        rho_grid=_floats(kv.get("grid.rho_db",
                                ",".join(map(str, RHO_GRID_DEFAULT)))),
        trials=int(kv.get("trials", "500")),
        seed=seed,
        beta_mode=kv.get("beta.mode", "grid_opt"),
        beta_value=float(kv.get("beta.value", "0")),
        beta_trials=int(kv.get("beta.trials", "100")),
        dl_framing=kv.get("dl_framing", "circular"),
        output=kv.get("output", "sweep.csv"))

    if not cfg.rho_grid:
        raise ValueError("grid.rho_db: power grid must be non-empty")
    if cfg.trials < 1:
        raise ValueError("trials: must be >= 1")
    if cfg.beta_mode not in ("grid_opt", "fixed"):
        raise ValueError(f"beta.mode: expected grid_opt or fixed, "
                         f"got {cfg.beta_mode!r}")
    if cfg.dl_framing not in ("circular", "linear"):
        raise ValueError(f"dl_framing: expected circular or linear, "
                         f"got {cfg.dl_framing!r}")
    return cfg


def _geometry(cfg):
    if cfg.geometry_kind == "ula":
        return ula(cfg.M, cfg.spacing)
    if cfg.geometry_kind == "upa":
        return upa(cfg.M, cfg.M_x, cfg.spacing)
    raise ValueError(f"geometry.kind: unknown kind {cfg.geometry_kind!r}")


def _correlation(cfg, param):
    geom = _geometry(cfg)
    if cfg.corr_model == "identity":
        return identity_correlation(cfg.M)
    if cfg.corr_model == "exponential":
        return exponential_correlation(geom, param)
    eta, mu = param
    return bessel_correlation(geom, eta, mu)


def _scenario(cfg, filt, param, rho_db, beta=0.0):
    dims = SimulationDims(M=cfg.M, K=cfg.K, L=cfg.L, N=cfg.N, T=cfg.T,
                          T_c=cfg.T_c, rho_f_db=rho_db, seed=cfg.seed)
    if cfg.corr_model == "bessel":
        corr_param, mu = param
    elif cfg.corr_model == "identity":
        corr_param, mu = None, None
    else:
        corr_param, mu = param, None
    return Scenario(link=cfg.link, filt=filt, dims=dims,
                    corr=_correlation(cfg, param),
                    pdp=exponential_pdp(cfg.K, cfg.L),
                    beta=beta, dl_framing=cfg.dl_framing,
                    corr_model=cfg.corr_model, corr_param=corr_param, mu=mu)


# ---------------------------------------------------------------------------
# ridge-parameter optimization


def optimize_beta(scenario, rho_f, trials=100):
    """Ridge parameter maximizing the Monte Carlo sum rate at power rho_f.

    Evaluates beta in {0} union {10^k : k = -6..6} under common random
    numbers (one shared set of channel draws), then refines the best
    log-grid bracket with golden-section search to a 1% bracket width.
    Exact ties return the earliest candidate, biasing toward beta = 0;
    when beta = 0 wins outright the search returns 0.0 without
    refinement. Deterministic given the scenario seed.
    """
    if scenario.filt not in BETA_FILTERS:
        raise ValueError(f"filter {scenario.filt!r} has no ridge parameter")
    dims = scenario.dims
    rho_db = 10.0 * math.log10(rho_f)
    base = dataclasses.replace(
        scenario, dims=dataclasses.replace(dims, rho_f_db=rho_db))
    draws = [draw_channel(dims, scenario.pdp, scenario.corr,
                          trial_rng(dims.seed, t)) for t in range(trials)]

    def rate_at(beta):
        scn = dataclasses.replace(base, beta=beta)
        K = dims.K
        g = np.empty((trials, K), dtype=complex)
        isi = np.empty((trials, K))
        mui = np.empty((trials, K))
        awgn = np.empty((trials, K))
        for t, ch in enumerate(draws):
            g[t], isi[t], mui[t], awgn[t] = analysis._draw_buckets(scn, ch)
        return analysis.buckets_to_result(scn, trials, g, isi, mui,
                                          awgn).rate_bpcu

    grid = [0.0] + [10.0 ** k for k in range(-6, 7)]
    rates = [rate_at(b) for b in grid]
    best = max(range(len(grid)), key=lambda i: (rates[i], -i))
    if best == 0:
        return 0.0

    lo = grid[max(best - 1, 1)]   # keep the refinement bracket positive
    hi = grid[min(best + 1, len(grid) - 1)]
    if lo == hi:
        return grid[best]
    a, b = math.log(lo), math.log(hi)
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = rate_at(math.exp(c)), rate_at(math.exp(d))
    while (b - a) > math.log(1.01):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = rate_at(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = rate_at(math.exp(d))
    beta_star = math.exp(0.5 * (a + b))
    # never return a refined point that lost to the coarse winner
    return beta_star if rate_at(beta_star) >= rates[best] else grid[best]


# ---------------------------------------------------------------------------
# sweeps


def _sweep_group(cfg, filt, param):
    """All power-grid rows for one (filter, correlation-parameter) cell."""
    rows = []
    needs_beta = filt in BETA_FILTERS and cfg.beta_mode == "grid_opt"
    fixed_beta = cfg.beta_value if filt in BETA_FILTERS else 0.0
    if not needs_beta:
        scn0 = _scenario(cfg, filt, param, cfg.rho_grid[0], beta=fixed_beta)
        stacks = mc_buckets(scn0, cfg.trials)
    for rho_db in cfg.rho_grid:
        if needs_beta:
            scn = _scenario(cfg, filt, param, rho_db)
            beta = optimize_beta(scn, 10.0 ** (rho_db / 10.0),
                                 trials=cfg.beta_trials)
            scn = dataclasses.replace(scn, beta=beta)
            result = sum_rate_mc(scn, cfg.trials)
        else:
            scn = _scenario(cfg, filt, param, rho_db, beta=fixed_beta)
            result = buckets_to_result(scn, cfg.trials, *stacks)
        rows.append(_result_row(result))
    return rows


def _result_row(result):
    meta = result.meta
    bd = result.breakdown
    return {
        "link": meta["link"],
        "filter": meta["filter"].upper(),
        "corr_model": meta["corr_model"],
        "corr_param": "" if meta["corr_param"] is None
                      else repr(float(meta["corr_param"])),
        "mu": "" if meta["mu"] is None else repr(float(meta["mu"])),
        "rho_f_db": repr(float(meta["rho_f_db"])),
        "rate_bpcu": repr(float(result.rate_bpcu)),
        "desired": repr(bd.desired),
        "if": repr(bd.if_power),
        "isi": repr(bd.isi),
        "mui": repr(bd.mui),
        "awgn": repr(bd.awgn),
        "trials": str(meta["trials"]),
        "seed": str(meta["seed"]),
    }


def run_sweep(cfg, workers=None):
    """Evaluate the config's full (filter x parameter x power) grid.

    Cells run on a thread pool; rows are buffered and written to
    cfg.output in deterministic config order regardless of completion
    order. Returns the row dicts.
    """
    cells = [(filt, param) for filt in cfg.filters
             for param in cfg.corr_params]
    if workers is None:
        workers = min(len(cells), os.cpu_count() or 1)
    if workers > 1 and len(cells) > 1:
        with concurrent.futures.ThreadPoolExecutor(workers) as pool:
            per_cell = list(pool.map(
                lambda cell: _sweep_group(cfg, *cell), cells))
    else:
        per_cell = [_sweep_group(cfg, *cell) for cell in cells]
    rows = [row for cell_rows in per_cell for row in cell_rows]
    write_csv(rows, cfg.output)
    return rows


def write_csv(rows, path):
    fieldnames = CSV_HEADER.split(",")
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# plot-script emission


PLOT_TEMPLATE = '''\
#!/usr/bin/env python3
"""Render sum-rate curves from {csv_name} (auto-generated; edit freely)."""
import csv
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
CSV = os.path.join(HERE, {csv_rel!r})
OUT = os.path.join(HERE, {png_rel!r})

MARKERS = ["o", "s", "^", "v", "D", "x", "*", "P", "<", ">", "h", "+"]

with open(CSV, newline="") as fh:
    rows = list(csv.DictReader(fh))

curves = {{}}
for row in rows:
    key = (row["filter"], row["corr_param"], row["mu"])
    curves.setdefault(key, []).append(
        (float(row["rho_f_db"]), float(row["rate_bpcu"])))

plt.figure(figsize=(7.2, 5.4))
for i, (key, pts) in enumerate(sorted(curves.items())):
    filt, param, mu = key
    label = filt
    if param:
        label += " ({param_symbol}=" + param + ")"
    if mu:
        label += " (mu=" + mu + ")"
    pts.sort()
    plt.plot([p[0] for p in pts], [p[1] for p in pts],
             marker=MARKERS[i % len(MARKERS)], label=label)

plt.xlabel("long-term average power (dB)")
plt.ylabel("achievable sum rate (bpcu)")
plt.grid(True, alpha=0.4)
plt.legend(fontsize=8)
plt.tight_layout()
plt.savefig(OUT, dpi=150)
print("wrote", OUT)
'''


def emit_plot_script(table, path, csv_path=None):
    """Write a standalone plotting script for a sweep table.

    The script references the CSV by a path relative to its own location,
    so the pair can move together. Regenerating with identical inputs is
    byte-identical. Raises on an empty table (nothing to plot) before
    touching the output file.
    """
    if not table:
        raise ValueError("cannot emit a plot script for an empty table")
    if csv_path is None:
        raise ValueError("csv_path is required (the script must know where "
                         "its data lives)")
    out_dir = os.path.dirname(os.path.abspath(path)) or "."
    csv_rel = os.path.relpath(os.path.abspath(csv_path), out_dir)
    png_rel = os.path.splitext(os.path.basename(path))[0] + ".png"
    param_symbol = "eta" if any(r.get("corr_model") == "bessel"
                                for r in table) else "alpha"
    text = PLOT_TEMPLATE.format(csv_name=os.path.basename(csv_path),
                                csv_rel=csv_rel, png_rel=png_rel,
                                param_symbol=param_symbol)
    with open(path, "w") as fh:
        fh.write(text)
    return path


# ---------------------------------------------------------------------------
# validation suites


class _Report:
    def __init__(self, tol_scale=1.0):
        self.lines = []
        self.ok = True
        self.tol_scale = tol_scale

    def check(self, name, expected, measured, tol, kind="rel"):
        tol = tol * self.tol_scale
        if kind == "rel":
            err = abs(measured - expected) / abs(expected)
        else:
            err = abs(measured - expected)
        verdict = "PASS" if err <= tol else "FAIL"
        if verdict == "FAIL":
            self.ok = False
        self.lines.append(
            f"{name:<52s} expected={expected:<14.6g} "
            f"measured={measured:<14.6g} tol={tol:<10.3g} {verdict}")

    def check_order(self, name, lhs, rhs, strict=True, slack=0.0):
        good = lhs > rhs if strict else lhs >= rhs - slack
        if not good:
            self.ok = False
        op = ">" if strict else ">="
        self.lines.append(
            f"{name:<52s} expected={'lhs ' + op + ' rhs':<14s} "
            f"measured={lhs:.4f} vs {rhs:.4f}{'':<4s} "
            f"tol={slack:<10.3g} {'PASS' if good else 'FAIL'}")


def _quick_cfg(link, filters, M=64, K=10, L=4, N=20, T=100, T_c=20,
               trials=500, seed=DEFAULT_SEED, alphas=(0.0,), kind="ula",
               M_x=None):
    return ScenarioConfig(
        link=link, filters=list(filters), corr_model="exponential",
        corr_params=list(alphas), geometry_kind=kind, M=M,
        M_x=M_x or M, spacing=0.5, K=K, L=L, N=N, T=T, T_c=T_c,
        rho_grid=list(RHO_GRID_DEFAULT), trials=trials, seed=seed)


def _rate_point(cfg, filt, alpha, rho_db, trials=None, beta=None):
    trials = trials or cfg.trials
    if filt in BETA_FILTERS and beta is None:
        scn = _scenario(cfg, filt, alpha, rho_db)
        beta = optimize_beta(scn, 10.0 ** (rho_db / 10.0),
                             trials=cfg.beta_trials)
    scn = _scenario(cfg, filt, alpha, rho_db, beta=beta or 0.0)
    return sum_rate_mc(scn, trials).rate_bpcu


def _validate_closed_forms(rep):
    M, K, L, T = 16, 4, 4, 64
    trials = 2000
    cfg = _quick_cfg("downlink", ["cmfp"], M=M, K=K, L=L, N=20, T=T,
                     trials=trials)
    pdp = exponential_pdp(K, L)
    rho = 1.0

    for alpha in (0.0, 0.7, 0.9, 0.99):
        scn = _scenario(cfg, "cmfp", alpha, 0.0)
        g, isi_u, mui_u, _ = mc_buckets(scn, trials)
        mean_g = g.mean(axis=0)
        mean_g2 = (np.abs(g) ** 2).mean(axis=0)
        desired = rho * np.abs(mean_g) ** 2
        eff = rho * (mean_g2 - np.abs(mean_g) ** 2) \
            + rho * isi_u.mean(axis=0) + rho * mui_u.mean(axis=0) + 1.0
        trA2 = scn.corr.trace_A2
        rep.check(f"cmfp desired power (alpha={alpha})", M * rho / K,
                  float(desired.mean()), 0.03)
        rep.check(f"cmfp effective noise (alpha={alpha})",
                  trA2 * rho / M + 1.0, float(eff.mean()), 0.05)

    ul_cfg = _quick_cfg("uplink", ["cmfe"], M=M, K=K, L=L, N=20, T=T,
                        trials=trials)
    for alpha in (0.0, 0.7):
        scn = _scenario(ul_cfg, "cmfe", alpha, 0.0)
        stacks = mc_buckets(scn, trials)
        awgn = stacks[3].mean()
        rep.check(f"cmfe post-filter AWGN (alpha={alpha})",
                  scn.corr.trace_A / (M * K), float(awgn), 0.03)
        rate_mc = buckets_to_result(scn, trials, *stacks).rate_bpcu
        rate_closed = cmfe_rate_closed(rho, M, K, scn.corr.trace_A,
                                       scn.corr.trace_A2, pdp.d[0])
        rep.check(f"cmfe sum rate vs closed form (alpha={alpha})",
                  rate_closed, rate_mc, 0.05)

    rep.check("cmfp closed-form rate (M=64, K=10, rho=1, A=I)",
              10.352, cmfp_rate_closed(1.0, 64, 10, 64.0), 1e-3, kind="abs")
    rep.check("cmfp closed-form high-power limit",
              14.44, cmfp_rate_closed(np.inf, 64, 10, 64.0), 1e-2,
              kind="abs")
    rep.check("cooperative bound (M=64, K=10, rho=1)",
              coop_capacity(1.0, 64, 10), 14.4376, 1e-3)

    big = _quick_cfg("downlink", ["cmfp"], trials=500)
    mc = _rate_point(big, "cmfp", 0.0, 0.0, trials=500)
    rep.check("cmfp Monte Carlo rate vs closed form (M=64)",
              cmfp_rate_closed(1.0, 64, 10, 64.0), mc, 0.03)


def _validate_appendix(rep):
    M, K, L = 8, 3, 3
    draws = 100_000
    seed = DEFAULT_SEED
    geom = ula(M, 0.5)
    corr = exponential_correlation(geom, 0.5)
    pdp = exponential_pdp(K, L)
    cases = [
        ("k=q l=l' b=0", (1, 1, 0, 1, 1)),
        ("k=q l=l' b!=0", (1, 1, 1, 1, 1)),
        ("k=q l!=l' b=0", (1, 2, 0, 1, 1)),
        ("k=q l!=l' b!=0", (1, 2, 1, 1, 1)),
        ("k!=q l=l' b=0", (1, 1, 0, 0, 2)),
        ("k!=q l=l' b!=0", (1, 1, 1, 0, 2)),
        ("k!=q l!=l'", (1, 2, 0, 0, 2)),
    ]
    sqrt_d = np.sqrt(pdp.d.T)                      # (L, K)
    chunk, done = 5000, 0
    sums = {name: 0.0 + 0.0j for name, _ in cases}
    sqsums = {name: 0.0 for name, _ in cases}
    ci = 0
    while done < draws:
        n = min(chunk, draws - done)
        rng = trial_rng(seed, 10_000 + ci)
        H = (rng.standard_normal((n, L, M, K))
             + 1j * rng.standard_normal((n, L, M, K))) / np.sqrt(2)
        Hhat = (corr.sqrt_A @ H) * sqrt_d[None, :, None, :]
        for name, (l, lp, b, k, q) in cases:
            f1 = np.einsum("nm,nm->n", np.conj(Hhat[:, l, :, k]),
                           Hhat[:, l - b, :, q])
            f2 = np.einsum("nm,nm->n", np.conj(Hhat[:, lp, :, k]),
                           Hhat[:, lp - b, :, q])
            z = f1 * np.conj(f2)
            sums[name] += z.sum()
            sqsums[name] += float(np.sum(np.abs(z) ** 2))
        done += n
        ci += 1
    for name, (l, lp, b, k, q) in cases:
        closed = analysis.appendix_moment(l, lp, b, k, q, corr, pdp)
        mean = sums[name] / draws
        var = sqsums[name] / draws - abs(mean) ** 2
        stderr = math.sqrt(max(var, 0.0) / draws)
        if abs(closed) > 0:
            rep.check(f"appendix moment {name}", float(closed.real),
                      float(mean.real), 0.05)
        else:
            rep.check(f"appendix moment {name} (zero case, 3 sigma)",
                      0.0, abs(mean), 3.0 * stderr, kind="abs")


def _validate_zero_forcing(rep):
    M, K, L, N = 16, 4, 4, 20
    dims = SimulationDims(M=M, K=K, L=L, N=N, T=N, T_c=N,
                          rho_f_db=0.0, seed=DEFAULT_SEED)
    corr = exponential_correlation(ula(M, 0.5), 0.7)
    pdp = exponential_pdp(K, L)
    from .dl_precoding import zfp_bank
    from .ul_equalization import zfe_bank

    worst_dl = worst_ul = 0.0
    worst_isi_dl = worst_isi_ul = 0.0
    for t in range(5):
        ch = draw_channel(dims, pdp, corr, trial_rng(dims.seed, t))
        wb = zfp_bank(ch)
        nu_grid = np.arange(N)
        kernel = np.exp(2j * np.pi
                        * np.outer(nu_grid, np.arange(L)) / N)
        B = np.einsum("vl,lmk->vmk", kernel, ch.Hhat)
        for nu in range(N):
            prod = np.conj(B[nu].T) @ (wb.norm * wb.freq[nu])
            a = np.trace(prod).real / K
            worst_dl = max(worst_dl,
                           float(np.max(np.abs(prod - a * np.eye(K)))) / a)
        qb = zfe_bank(ch)
        Hnu = np.einsum("vl,lmk->vmk", np.conj(kernel), ch.Hhat)
        for nu in range(N):
            prod = qb.freq[nu] @ Hnu[nu]
            worst_ul = max(worst_ul,
                           float(np.max(np.abs(prod - np.eye(K)))))
        blocks = analysis.SignalBlocks(rho_f=1.0, T=N, noise=None)
        bd_dl = analysis.decompose("downlink", "zfp", ch, blocks)
        bd_ul = analysis.decompose("uplink", "zfe", ch, blocks)
        worst_isi_dl = max(worst_isi_dl,
                           float((bd_dl.isi_k + bd_dl.mui_k).max()))
        worst_isi_ul = max(worst_isi_ul,
                           float((bd_ul.isi_k + bd_ul.mui_k).max()))
    rep.check("zfp per-bin cascade is scaled identity", 0.0, worst_dl,
              1e-8, kind="abs")
    rep.check("zfe per-bin cascade is identity", 0.0, worst_ul,
              1e-8, kind="abs")
    rep.check("zfp measured ISI+MUI at rho=1 (T=N)", 0.0, worst_isi_dl,
              1e-6, kind="abs")
    rep.check("zfe measured ISI+MUI at rho=1 (CP framing)", 0.0,
              worst_isi_ul, 1e-6, kind="abs")


def _validate_figures(rep):
    dl = _quick_cfg("downlink", ["cmfp", "zfp", "rzfp"])
    ul = _quick_cfg("uplink", ["cmfe", "zfe", "mmsee"])

    # uncorrelated downlink at low power: matched filter wins
    cmfp0 = _rate_point(dl, "cmfp", 0.0, -10.0)
    zfp0 = _rate_point(dl, "zfp", 0.0, -10.0)
    rzfp0 = _rate_point(dl, "rzfp", 0.0, -10.0)
    rep.check_order("downlink alpha=0, -10 dB: cmfp >= zfp",
                    cmfp0, zfp0, strict=False)
    rep.check_order("downlink alpha=0, -10 dB: cmfp >= rzfp",
                    cmfp0, rzfp0, strict=False)

    # alpha=0.7: regularized zero-forcing overtakes from -5 dB up
    scn = _scenario(dl, "cmfp", 0.7, 0.0)
    stacks = mc_buckets(scn, dl.trials)
    for rho_db in [g for g in dl.rho_grid if g >= -5.0]:
        cm = buckets_to_result(
            dataclasses.replace(
                scn, dims=dataclasses.replace(scn.dims, rho_f_db=rho_db)),
            dl.trials, *stacks).rate_bpcu
        rz = _rate_point(dl, "rzfp", 0.7, rho_db)
        rep.check_order(f"downlink alpha=0.7, {rho_db:+.1f} dB: "
                        f"rzfp > cmfp", rz, cm)

    # uplink at 20 dB: ridge equalizer beats matched filter at every alpha
    for alpha in (0.0, 0.7, 0.9, 0.99):
        cmfe = _rate_point(ul, "cmfe", alpha, 20.0)
        mmsee = _rate_point(ul, "mmsee", alpha, 20.0)
        rep.check_order(f"uplink alpha={alpha}, 20 dB: mmsee > cmfe",
                        mmsee, cmfe)

    # planar array degrades the matched-filter downlink at high power
    upa_cfg = _quick_cfg("downlink", ["cmfp"], kind="upa", M_x=8)
    for alpha in (0.7, 0.9):
        r_ula = _rate_point(dl, "cmfp", alpha, 20.0)
        r_upa = _rate_point(upa_cfg, "cmfp", alpha, 20.0)
        rep.check_order(f"cmfp 20 dB alpha={alpha}: ULA > UPA",
                        r_ula, r_upa)

    # 20 dB ordering chain and its growth with correlation. "Growth" is
    # multiplicative: at extreme correlation every filter's rate collapses,
    # so the absolute lead over the matched filter eventually shrinks while
    # the rate ratio keeps rising.
    ratio_zfp, ratio_rzfp = [], []
    for alpha in (0.7, 0.9, 0.99):
        cm = _rate_point(dl, "cmfp", alpha, 20.0)
        zf = _rate_point(dl, "zfp", alpha, 20.0)
        rz = _rate_point(dl, "rzfp", alpha, 20.0)
        rep.check_order(f"20 dB alpha={alpha}: zfp > cmfp", zf, cm)
        rep.check_order(f"20 dB alpha={alpha}: rzfp >= zfp", rz, zf,
                        strict=False, slack=1e-9)
        ratio_zfp.append(zf / cm)
        ratio_rzfp.append(rz / cm)
    for name, r in (("zfp/cmfp", ratio_zfp), ("rzfp/cmfp", ratio_rzfp)):
        rep.check_order(f"{name} rate ratio grows 0.7 -> 0.9", r[1], r[0])
        rep.check_order(f"{name} rate ratio grows 0.9 -> 0.99", r[2], r[1])

    # regularization never hurts the uplink under an optimized ridge
    zfe = _rate_point(ul, "zfe", 0.9, 20.0)
    mmsee = _rate_point(ul, "mmsee", 0.9, 20.0)
    rep.check_order("uplink alpha=0.9, 20 dB: mmsee >= zfe", mmsee, zfe,
                    strict=False, slack=1e-9)


def validate(suite, _tolerance_scale=1.0):
    """Run one named validation suite; returns (all_passed, report_lines)."""
    suites = {
        "closed_forms": _validate_closed_forms,
        "appendix": _validate_appendix,
        "zero_forcing": _validate_zero_forcing,
        "figures": _validate_figures,
    }
    if suite not in suites:
        raise ValueError(f"unknown suite {suite!r} "
                         f"(expected one of {sorted(suites)})")
    rep = _Report(tol_scale=_tolerance_scale)
    suites[suite](rep)
    return rep.ok, rep.lines


# ---------------------------------------------------------------------------
# CLI


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="scmimo",
        description="Sum-rate sweeps for correlated single-carrier "
                    "massive MIMO links")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run a configured sweep")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--override", action="append", default=[],
                         metavar="KEY=VALUE")
    p_sweep.add_argument("--workers", type=int, default=None)

    p_val = sub.add_parser("validate", help="run an acceptance suite")
    p_val.add_argument("--suite", required=True,
                       choices=["closed_forms", "appendix", "zero_forcing",
                                "figures"])

    p_plot = sub.add_parser("plot", help="emit a plotting script for a CSV")
    p_plot.add_argument("--csv", required=True)
    p_plot.add_argument("--out", required=True)

    p_beta = sub.add_parser("beta", help="optimize the ridge parameter "
                                         "at one power point")
    p_beta.add_argument("--config", required=True)
    p_beta.add_argument("--rho-db", type=float, required=True)
    p_beta.add_argument("--override", action="append", default=[],
                        metavar="KEY=VALUE")

    args = parser.parse_args(argv)

    if args.command == "sweep":
        cfg = load_config(args.config, args.override)
        rows = run_sweep(cfg, workers=args.workers)
        print(f"wrote {len(rows)} rows to {cfg.output}")
        return 0

    if args.command == "validate":
        ok, lines = validate(args.suite)
        for line in lines:
            print(line)
        print(f"suite {args.suite}: {'PASS' if ok else 'FAIL'}")
        return 0 if ok else 1

    if args.command == "plot":
        table = read_csv(args.csv)
        emit_plot_script(table, args.out, csv_path=args.csv)
        print(f"wrote {args.out}")
        return 0

    if args.command == "beta":
        cfg = load_config(args.config, args.override)
        filt = next((f for f in cfg.filters if f in BETA_FILTERS), None)
        if filt is None:
            parser.error("config has no ridge-regularized filter")
        scn = _scenario(cfg, filt, cfg.corr_params[0], args.rho_db)
        beta = optimize_beta(scn, 10.0 ** (args.rho_db / 10.0),
                             trials=cfg.beta_trials)
        scn = dataclasses.replace(scn, beta=beta)
        rate = sum_rate_mc(scn, cfg.trials).rate_bpcu
        print(f"beta* = {beta!r}  (sum rate {rate:.4f} bpcu at "
              f"{args.rho_db:+.1f} dB, filter {filt})")
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
