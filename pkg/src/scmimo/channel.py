"""Multipath channel generation: power delay profiles, fast fading, CSI.

A user-k channel is an L-tap FIR filter whose tap l is an M-vector
sqrt(d_l[k]) * A^{1/2} h, with h i.i.d. CN(0,1) fast fading, d the power
delay profile (rows summing to one), and A the base-station correlation
matrix. The composite CSI taps Hhat_l = A^{1/2} H_l D_l^{1/2} are what
every precoder/equalizer consumes, alongside their N-point DFT across
the tap index.
"""

from dataclasses import dataclass, field

import numpy as np

DEFAULT_SEED = 12345


@dataclass(frozen=True)
class SimulationDims:
    """Static scenario dimensions.

    M antennas, K users, L channel taps, N filter-bank bins (N > L),
    T-symbol blocks, cyclic prefix T_c > L.
    """

    M: int
    K: int
    L: int
    N: int
    T: int
    T_c: int
    rho_f_db: float = 0.0
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.N <= self.L:
            raise ValueError(f"need N > L, got N={self.N}, L={self.L}")
        if self.T_c <= self.L:
            raise ValueError(f"need T_c > L, got T_c={self.T_c}, L={self.L}")
        if self.K > self.M:
            raise ValueError(f"need K <= M, got K={self.K}, M={self.M}")

    @property
    def rho_f(self):
        """Linear long-term average power (per-symbol variance)."""
        return 10.0 ** (self.rho_f_db / 10.0)


@dataclass(frozen=True)
class PowerDelayProfile:
    """Per-user tap powers d[k, l], each row normalized to sum to 1."""

    d: np.ndarray

    def __post_init__(self):
        if np.any(self.d < 0):
            raise ValueError("PDP entries must be nonnegative")
        rowsums = self.d.sum(axis=1)
        if not np.allclose(rowsums, 1.0, rtol=0, atol=1e-12):
            raise ValueError("PDP rows must sum to 1 within 1e-12")

    @property
    def K(self):
        return self.d.shape[0]

    @property
    def L(self):
        return self.d.shape[1]


def exponential_pdp(K, L):
    """Exponential power delay profile d_l = e^{-theta l} / sum_i e^{-theta i}.

    The decay constant is theta = (K - 1) / 5, identical for all users;
    K = 1 degenerates to a uniform profile.
    """
    if K < 1 or L < 1:
        raise ValueError("K and L must be >= 1")
    theta = (K - 1) / 5.0
    w = np.exp(-theta * np.arange(L))
    row = w / w.sum()
    return PowerDelayProfile(d=np.tile(row, (K, 1)))


@dataclass(frozen=True)
class ChannelRealization:
    """One channel draw: raw fading H, composite CSI Hhat, and DFT view.

    H and Hhat are (L, M, K) stacks; Hhat_freq is the (N, M, K) stack of
    Hhat_nu = sum_l exp(-2j pi nu l / N) Hhat_l. The generating PDP and
    dimensions ride along since every downstream stage needs them.
    """

    H: np.ndarray
    Hhat: np.ndarray
    Hhat_freq: np.ndarray
    pdp: PowerDelayProfile = field(repr=False)
    dims: SimulationDims = field(repr=False)


def trial_rng(seed, trial):
    """Counter-based per-trial stream: independent, reproducible, and
    insensitive to execution order across parallel workers."""
    return np.random.Generator(np.random.Philox(key=(seed, trial)))


def draw_channel(dims, pdp, corr, rng_stream):
    """Draw one ChannelRealization from the given generator.

    Fast fading H_l[m, k] is i.i.d. CN(0, 1) (real/imag parts independent
    N(0, 1/2)); the composite taps are Hhat_l = sqrt_A @ H_l @ D_l^{1/2}.
    The fading block depends only on (L, M, K) and the stream — never on
    the correlation model — so same-seed runs under different geometries
    share their fading.
    """
    M, K, L = dims.M, dims.K, dims.L
    if pdp.K != K or pdp.L != L:
        raise ValueError(f"PDP shaped {pdp.d.shape}, expected ({K}, {L})")
    if corr.A.shape[0] != M:
        raise ValueError(f"correlation matrix is {corr.A.shape[0]}x..., "
                         f"expected {M}")
    H = (rng_stream.standard_normal((L, M, K))
         + 1j * rng_stream.standard_normal((L, M, K))) / np.sqrt(2)
    # (L, 1, K) broadcast of sqrt(d_l[k]) over antennas
    amp = np.sqrt(pdp.d.T)[:, None, :]
    Hhat = (corr.sqrt_A @ H) * amp
    return ChannelRealization(H=H, Hhat=Hhat,
                              Hhat_freq=taps_to_freq(Hhat, dims.N),
                              pdp=pdp, dims=dims)


def taps_to_freq(taps, N):
    """N-point DFT across the tap index: out[nu] = sum_l e^{-2j pi nu l/N} taps[l].

    Zero-pads L taps up to N (requires N > L); the inverse N-point DFT
    recovers the zero-padded taps exactly.
    """
    taps = np.asarray(taps)
    if N <= taps.shape[0]:
        raise ValueError(f"need N > L, got N={N}, L={taps.shape[0]}")
    return np.fft.fft(taps, n=N, axis=0)
