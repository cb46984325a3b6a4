"""Signal decomposition, Monte Carlo sum rates, and closed-form references.

The received-signal power at user k splits into five buckets:

* desired — the reference-gain path (matched-filter precoding uses the
  analytic mean gain sqrt(M/K); the zero-forcing family uses the
  Monte Carlo mean; uplink equalizers use the realized gain),
* IF — wander of the realized same-symbol gain around the reference
  (identically zero on the uplink, where the receiver knows the draw),
* ISI — same-user energy at nonzero delays,
* MUI — cross-user energy at all delays,
* AWGN — the noise-only path.

`decompose` measures the buckets by driving isolated unit probes through
the actual transmit/receive operations — one reference implementation
that serves all six filters. `sum_rate_mc` evaluates the same quantities
per channel draw through a T-point FFT of the cascade taps (identical
numbers, two orders of magnitude faster) and averages over draws.

Rates are (1/2) log2(1 + SINR) per user, in bits per channel use.
"""

from dataclasses import dataclass, field

import numpy as np

from .channel import draw_channel, trial_rng
from .dl_precoding import (cmfp_transmit, downlink_receive, precoded_transmit,
                           rzfp_bank, zfp_bank)
from .ul_equalization import (apply_equalizer_bank, cmfe_apply,
                              make_uplink_frame, mmsee_bank, uplink_receive,
                              zfe_bank)

DL_FILTERS = ("cmfp", "zfp", "rzfp")
UL_FILTERS = ("cmfe", "zfe", "mmsee")


@dataclass
class NoiseBreakdown:
    """Per-user power buckets and their across-user means.

    gains holds the realized complex same-symbol gain per user (the
    diagonal of the delay-zero cascade tap).
    """

    desired_k: np.ndarray
    if_k: np.ndarray
    isi_k: np.ndarray
    mui_k: np.ndarray
    awgn_k: np.ndarray
    gains: np.ndarray

    @property
    def desired(self):
        return float(self.desired_k.mean())

    @property
    def if_power(self):
        return float(self.if_k.mean())

    @property
    def isi(self):
        return float(self.isi_k.mean())

    @property
    def mui(self):
        return float(self.mui_k.mean())

    @property
    def awgn(self):
        return float(self.awgn_k.mean())

    def sinr(self):
        return self.desired_k / (self.if_k + self.isi_k + self.mui_k
                                 + self.awgn_k)


def rate_from_breakdown(breakdown):
    """Sum rate sum_k (1/2) log2(1 + SINR_k) from a breakdown's buckets."""
    per_user = 0.5 * np.log2(1.0 + breakdown.sinr())
    return float(per_user.sum()), per_user


@dataclass
class SumRateResult:
    rate_bpcu: float
    per_user_rates: np.ndarray
    breakdown: NoiseBreakdown
    meta: dict = field(default_factory=dict)
    stderr: float = float("nan")


@dataclass(frozen=True)
class Scenario:
    """Everything sum_rate_mc needs for one operating point."""

    link: str
    filt: str
    dims: object
    corr: object
    pdp: object
    beta: float = 0.0
    dl_framing: str = "circular"
    corr_model: str = ""
    corr_param: float = None
    mu: float = None

    def __post_init__(self):
        _check_combo(self.link, self.filt)


@dataclass(frozen=True)
class SignalBlocks:
    """Stimulus for decompose: block length, symbol power, noise block.

    The probes themselves are generated internally (unit impulses), so the
    external inputs reduce to the block length T, the per-symbol variance
    rho_f, and the noise block (None means noiseless — the AWGN bucket
    then comes out exactly zero).
    """

    rho_f: float
    T: int
    noise: np.ndarray = None


def _check_combo(link, filt):
    if link == "downlink":
        if filt not in DL_FILTERS:
            raise ValueError(f"unknown downlink filter {filt!r} "
                             f"(expected one of {DL_FILTERS})")
    elif link == "uplink":
        if filt not in UL_FILTERS:
            raise ValueError(f"unknown uplink filter {filt!r} "
                             f"(expected one of {UL_FILTERS})")
    else:
        raise ValueError(f"unknown link {link!r}")


def _make_pipeline(link, filt, ch, beta, framing):
    """Return run(symbols, noise) -> output block, through the real ops."""
    _check_combo(link, filt)
    if link == "downlink":
        if filt == "cmfp":
            tx = lambda s: cmfp_transmit(ch, s)
        else:
            bank = zfp_bank(ch) if filt == "zfp" else rzfp_bank(ch, beta)
            tx = lambda s: precoded_transmit(bank, s)
        return lambda s, n: downlink_receive(ch, tx(s), n, framing=framing)
    if filt == "cmfe":
        eq = lambda r: cmfe_apply(ch, r)
    else:
        bank = zfe_bank(ch) if filt == "zfe" else mmsee_bank(ch, beta)
        eq = lambda r: apply_equalizer_bank(bank, r)

    def run(s, n):
        frame = make_uplink_frame(s, ch.dims.T_c)
        return eq(uplink_receive(ch, frame, n))
    return run


def _reference_gains(link, filt, ch):
    """Mean same-symbol gain: analytic for CMFP, realized otherwise."""
    if link == "downlink" and filt == "cmfp":
        M, K = ch.dims.M, ch.dims.K
        return np.sqrt(M / K) * ch.pdp.d.sum(axis=1)
    return None


def decompose(link, filt, ch, blocks, reference_gains=None,
              beta=0.0, framing="circular"):
    """Probe-based power decomposition through the actual signal path.

    Sends one unit impulse per user (zero noise) to measure the full
    cascade tap response, then a noise-only block for the AWGN bucket.
    reference_gains=None selects the analytic CMFP mean gain on the
    downlink and the realized per-draw gain everywhere else (which makes
    the uplink IF bucket exactly zero).

    With framing="linear" (downlink only) the probes are placed past the
    channel transient and the transient rows are excluded, measuring the
    steady-state response; requires T comfortably above N + 3L.
    """
    dims = ch.dims
    K, L, T = dims.K, dims.L, blocks.T
    rho = blocks.rho_f
    run = _make_pipeline(link, filt, ch, beta, framing)
    p0 = 2 * (L - 1)
    if framing == "linear" and T < dims.N + 3 * L:
        raise ValueError("linear framing needs T >= N + 3L for a clean "
                         "steady-state measurement window")

    C = np.zeros((T, K, K), dtype=complex)
    zero_noise = np.zeros((K if link == "downlink" else dims.M, T))
    for q in range(K):
        s = np.zeros((K, T), dtype=complex)
        s[q, p0] = 1.0
        y = run(s, zero_noise)
        C[:, :, q] = np.roll(y, -p0, axis=1).T
    if framing == "linear":
        # rows 0..L-2 of each probe response are channel transient
        C[[(i - p0) % T for i in range(L - 1)]] = 0.0

    g = np.diagonal(C[0]).copy()
    if reference_gains is None:
        reference_gains = _reference_gains(link, filt, ch)
    gbar = g if reference_gains is None else np.asarray(reference_gains)

    tot = (np.abs(C) ** 2).sum(axis=0)          # (K, K) over all delays
    isi_k = rho * (np.diagonal(tot) - np.abs(g) ** 2)
    mui_k = rho * (tot.sum(axis=1) - np.diagonal(tot))
    desired_k = rho * np.abs(gbar) ** 2
    if_k = rho * np.abs(g - gbar) ** 2

    if blocks.noise is None:
        awgn_k = np.zeros(K)
    else:
        y_n = run(np.zeros((K, T), dtype=complex), blocks.noise)
        lo = L - 1 if framing == "linear" else 0
        awgn_k = (np.abs(y_n[:, lo:]) ** 2).mean(axis=1)

    return NoiseBreakdown(desired_k=desired_k, if_k=if_k,
                          isi_k=np.maximum(isi_k, 0.0),
                          mui_k=np.maximum(mui_k, 0.0),
                          awgn_k=awgn_k, gains=g)


def _draw_buckets(scenario, ch):
    """Unit-power buckets for one draw via the T-grid FFT of the cascade.

    Returns (g, isi_u, mui_u, awgn): realized gains, same-user and
    cross-user interference energies at unit symbol power, and the exact
    per-draw AWGN bucket (downlink: 1; uplink: mean squared equalizer
    row norm, by Parseval).
    """
    dims = ch.dims
    M, K, T = dims.M, dims.K, dims.T
    filt = scenario.filt
    if scenario.link == "downlink":
        if scenario.dl_framing == "linear":
            bd = decompose("downlink", filt, ch,
                           SignalBlocks(rho_f=1.0, T=T, noise=None),
                           beta=scenario.beta, framing="linear")
            return bd.gains, bd.isi_k, bd.mui_k, np.ones(K)
        Gch = np.fft.fft(np.conj(np.transpose(ch.Hhat, (0, 2, 1))),
                         n=T, axis=0)                       # (T, K, M)
        if filt == "cmfp":
            C = Gch @ np.conj(np.transpose(Gch, (0, 2, 1))) / np.sqrt(M * K)
        else:
            bank = zfp_bank(ch) if filt == "zfp" \
                else rzfp_bank(ch, scenario.beta)
            Wf = np.fft.fft(bank.norm * bank.time, n=T, axis=0)
            C = Gch @ Wf
        awgn = np.ones(K)
    else:
        Hch = np.fft.fft(ch.Hhat, n=T, axis=0)              # (T, M, K)
        if filt == "cmfe":
            Qf = np.conj(np.transpose(Hch, (0, 2, 1))) / np.sqrt(M * K)
        else:
            bank = zfe_bank(ch) if filt == "zfe" \
                else mmsee_bank(ch, scenario.beta)
            Qf = np.fft.fft(bank.norm * bank.time, n=T, axis=0)
        C = Qf @ Hch
        awgn = (np.abs(Qf) ** 2).mean(axis=0).sum(axis=1)
    c0 = C.mean(axis=0)
    g = np.diagonal(c0).copy()
    tot = (np.abs(C) ** 2).mean(axis=0)
    isi_u = np.maximum(np.diagonal(tot) - np.abs(g) ** 2, 0.0)
    mui_u = tot.sum(axis=1) - np.diagonal(tot)
    return g, isi_u, mui_u, awgn


def mc_buckets(scenario, trials):
    """Per-draw bucket stacks over `trials` seeded channel draws.

    Returns (g, isi_u, mui_u, awgn) arrays of shape (trials, K) at unit
    symbol power. Draw t uses the counter-based stream (seed, t), so the
    stack is independent of evaluation order.
    """
    dims = scenario.dims
    K = dims.K
    g = np.empty((trials, K), dtype=complex)
    isi_u = np.empty((trials, K))
    mui_u = np.empty((trials, K))
    awgn = np.empty((trials, K))
    for t in range(trials):
        ch = draw_channel(dims, scenario.pdp, scenario.corr,
                          trial_rng(dims.seed, t))
        g[t], isi_u[t], mui_u[t], awgn[t] = _draw_buckets(scenario, ch)
    return g, isi_u, mui_u, awgn


def _aggregate(scenario, g, isi_u, mui_u, awgn):
    """Reduce per-draw bucket stacks to a NoiseBreakdown at scenario power.

    Downlink: desired power is the squared reference gain (analytic
    sqrt(M/K) for CMFP, the stack mean otherwise) and IF is the mean
    squared wander around it. Uplink: desired is the mean squared realized
    gain and IF is zero.
    """
    dims = scenario.dims
    rho = dims.rho_f
    mean_g = g.mean(axis=0)
    mean_g2 = (np.abs(g) ** 2).mean(axis=0)
    isi_k = rho * isi_u.mean(axis=0)
    mui_k = rho * mui_u.mean(axis=0)
    awgn_k = awgn.mean(axis=0)
    if scenario.link == "downlink":
        if scenario.filt == "cmfp":
            ref = np.sqrt(dims.M / dims.K) * scenario.pdp.d.sum(axis=1)
        else:
            ref = mean_g
        desired_k = rho * np.abs(ref) ** 2
        if_k = rho * np.maximum(
            mean_g2 - 2 * np.real(np.conj(ref) * mean_g) + np.abs(ref) ** 2,
            0.0)
    else:
        desired_k = rho * mean_g2
        if_k = np.zeros(dims.K)
    return NoiseBreakdown(desired_k=desired_k, if_k=if_k, isi_k=isi_k,
                          mui_k=mui_k, awgn_k=awgn_k, gains=mean_g)


def _jackknife_rate_stderr(scenario, g, isi_u, mui_u, awgn, blocks=10):
    """Delete-one-block jackknife standard error of the sum rate."""
    n = g.shape[0]
    blocks = min(blocks, n)
    idx = np.array_split(np.arange(n), blocks)
    rates = np.empty(blocks)
    for i, drop in enumerate(idx):
        keep = np.ones(n, dtype=bool)
        keep[drop] = False
        bd = _aggregate(scenario, g[keep], isi_u[keep], mui_u[keep],
                        awgn[keep])
        rates[i], _ = rate_from_breakdown(bd)
    return float(np.sqrt((blocks - 1) / blocks
                         * np.sum((rates - rates.mean()) ** 2)))


def buckets_to_result(scenario, trials, g, isi_u, mui_u, awgn):
    """Aggregate per-draw buckets into a SumRateResult at scenario power."""
    bd = _aggregate(scenario, g, isi_u, mui_u, awgn)
    rate, per_user = rate_from_breakdown(bd)
    stderr = float("nan")
    if g.shape[0] >= 20:
        stderr = _jackknife_rate_stderr(scenario, g, isi_u, mui_u, awgn)
    dims = scenario.dims
    meta = dict(link=scenario.link, filter=scenario.filt,
                corr_model=scenario.corr_model,
                corr_param=scenario.corr_param, mu=scenario.mu,
                rho_f_db=dims.rho_f_db, trials=trials, seed=dims.seed,
                beta=scenario.beta)
    return SumRateResult(rate_bpcu=rate, per_user_rates=per_user,
                         breakdown=bd, meta=meta, stderr=stderr)


def sum_rate_mc(scenario, trials):
    """Monte Carlo achievable sum rate over `trials` channel draws.

    Deterministic given (scenario, trials): draw t always uses the
    (seed, t) stream and the bucket reduction is order-independent
    pairwise summation. The result's rate always equals the rate
    recomputed from its own breakdown.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    g, isi_u, mui_u, awgn = mc_buckets(scenario, trials)
    return buckets_to_result(scenario, trials, g, isi_u, mui_u, awgn)


# ---------------------------------------------------------------------------
# closed forms


def cmfp_rate_closed(rho_f, M, K, trace_A2):
    """Matched-filter downlink sum rate,
    (K/2) log2(1 + M rho / (K (tr(A^2)/M) rho + K)); rho_f=inf gives the
    high-power limit (K/2) log2(1 + M^2/(K tr(A^2)))."""
    if np.isinf(rho_f):
        return (K / 2) * np.log2(1.0 + M * M / (K * trace_A2))
    return (K / 2) * np.log2(
        1.0 + M * rho_f / (K * (trace_A2 / M) * rho_f + K))


def coop_capacity(rho_f, M, K):
    """Cooperative-receiver bound (K/2) log2(1 + M rho_f / K) —
    correlation-independent by construction."""
    return (K / 2) * np.log2(1.0 + M * rho_f / K)


def cmfe_rate_closed(rho_f, M, K, trace_A, trace_A2, pdp_row):
    """Matched-filter uplink sum rate for a common per-user PDP row:

    (K/2) log2(1 + (tr(A^2) sum d^2 rho + tr(A)^2 rho)
                   / (tr(A^2) (K - sum d^2) rho + M)).
    """
    pdp_row = np.asarray(pdp_row, dtype=float)
    if abs(pdp_row.sum() - 1.0) > 1e-9:
        raise ValueError("pdp_row must sum to 1")
    sd2 = float(np.sum(pdp_row ** 2))
    num = trace_A2 * sd2 * rho_f + trace_A ** 2 * rho_f
    den = trace_A2 * (K - sd2) * rho_f + M
    return (K / 2) * np.log2(1.0 + num / den)


def appendix_moment(l, lp, b, k, q, corr, pdp):
    """Closed-form second moment of the cascade-tap entries,

        E{ F_(l, l-b)[k, q] * conj(F_(l', l'-b)[k, q]) },

    where F_(l,l') = Hhat_l^H Hhat_l'. Seven cases depending on which of
    k == q, l == l', b == 0 hold; mismatched tap pairs are zero.
    """
    d = pdp.d
    K, L = d.shape
    for name, idx in (("l", l), ("l'", lp)):
        if not 0 <= idx < L:
            raise IndexError(f"tap index {name}={idx} out of range [0, {L})")
        if not 0 <= idx - b < L:
            raise IndexError(f"shifted tap {name}-b={idx - b} "
                             f"out of range [0, {L})")
    for name, idx in (("k", k), ("q", q)):
        if not 0 <= idx < K:
            raise IndexError(f"user index {name}={idx} out of range [0, {K})")
    trA, trA2 = corr.trace_A, corr.trace_A2
    if k == q:
        if l == lp:
            if b == 0:
                return complex((trA2 + trA ** 2) * d[k, l] ** 2)
            return complex(trA2 * d[k, l] * d[k, l - b])
        if b == 0:
            return complex(trA ** 2 * d[k, l] * d[k, lp])
        return 0j
    if l == lp:
        if b == 0:
            return complex(trA2 * d[k, l] * d[q, l])
        return complex(trA2 * d[k, l] * d[q, l - b])
    return 0j
