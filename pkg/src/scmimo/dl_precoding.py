"""Downlink transmit processing: CMFP, ZFP, and RZFP precoders.

The matched-filter precoder (CMFP) works directly on the channel taps:
x[i] = sqrt(1/(MK)) sum_l Hhat_l s[i+l]. The zero-forcing family works
per frequency bin on an N-point filter bank. Because the downlink channel
is applied conjugated (y[i] = sum_l Hhat_l^H x[i-l]), the bin that pairs
with filter W_nu is the *synthesis* response

    B_nu = sum_l exp(+2j pi nu l / N) Hhat_l,

not the analysis DFT; designing against B_nu makes the realized cascade
B_nu^H W_nu = a I_K hold exactly at every bin:

    ZFP : W_nu = a B_nu (B_nu^H B_nu)^{-1}
    RZFP: W_nu = a B_nu (B_nu^H B_nu + beta I_K)^{-1}

a is the power normalization making the block-averaged E||x[i]||^2 equal
rho_f for unit-variance-times-rho_f symbols.

All downlink block processing is circular (indices mod T); a linear
framing variant of the channel is available for edge-effect studies.
"""

from dataclasses import dataclass

import numpy as np

RCOND_MIN = 1e-12


@dataclass
class FrequencyFilterBank:
    """N per-bin filter matrices with their time-domain taps.

    freq[nu] holds the bin design (M x K precoder or K x M equalizer);
    time[m] = (1/N) sum_nu exp(+2j pi nu m / N) freq[nu] is the inverse
    DFT across bins. norm is the scalar applied at application time
    (power normalization a for precoders, 1 for equalizers).
    """

    freq: np.ndarray
    time: np.ndarray
    norm: float = 1.0
    beta: float = 0.0

    @classmethod
    def from_freq(cls, freq, beta=0.0):
        return cls(freq=np.asarray(freq), time=np.fft.ifft(freq, axis=0),
                   beta=beta)


def synthesis_bins(taps, N):
    """Conjugate-kernel N-point transform, out[nu] = sum_l e^{+2j pi nu l/N} taps[l].

    This is the bin response the downlink cascade actually pairs with the
    precoder (equal to the analysis DFT evaluated at -nu mod N).
    """
    taps = np.asarray(taps)
    if N <= taps.shape[0]:
        raise ValueError(f"need N > L, got N={N}, L={taps.shape[0]}")
    return np.fft.ifft(taps, n=N, axis=0) * N


def _apply_bank(bank, block):
    """Cyclic bank application: out[i] = norm * sum_m time[m] @ block[(i-m) % T]."""
    T = block.shape[1]
    N = bank.time.shape[0]
    if T < N:
        raise ValueError(f"block length T={T} shorter than bank length N={N}")
    out = np.zeros((bank.time.shape[1], T), dtype=complex)
    for m in range(N):
        out += bank.time[m] @ np.roll(block, m, axis=1)
    return bank.norm * out


def _ridge_bank(ch, beta, check_conditioning):
    B = synthesis_bins(ch.Hhat, ch.dims.N)          # (N, M, K)
    gram = np.conj(np.transpose(B, (0, 2, 1))) @ B  # (N, K, K)
    if check_conditioning:
        s = np.linalg.svd(gram, compute_uv=False)
        rcond = s[:, -1] / s[:, 0]
        bad = int(np.argmin(rcond))
        if rcond[bad] < RCOND_MIN:
            raise np.linalg.LinAlgError(
                f"rank-deficient channel draw: Gram matrix at bin {bad} has "
                f"reciprocal condition {rcond[bad]:.3e} < {RCOND_MIN:g}")
    K = gram.shape[-1]
    W = B @ np.linalg.inv(gram + beta * np.eye(K))
    bank = FrequencyFilterBank.from_freq(W, beta=beta)
    bank.norm = normalize_bank(bank)
    return bank


def zfp_bank(ch):
    """Zero-forcing precoder bank, W_nu = a B_nu (B_nu^H B_nu)^{-1}.

    Raises (naming the offending bin) when a bin's Gram matrix has
    reciprocal condition below 1e-12.
    """
    return _ridge_bank(ch, 0.0, check_conditioning=True)


def rzfp_bank(ch, beta):
    """Regularized zero-forcing bank, W_nu = a B_nu (B_nu^H B_nu + beta I)^{-1}.

    beta = 0 recovers the ZFP directions; large beta tilts every bin
    toward the matched-filter direction B_nu.
    """
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    return _ridge_bank(ch, float(beta), check_conditioning=False)


def normalize_bank(bank, rho_f=1.0):
    """Power normalization a with a^2 = N / sum_nu ||freq[nu]||_F^2.

    Derivation: for i.i.d. symbols of variance rho_f, the block-averaged
    transmit power is E||x[i]||^2 = a^2 rho_f sum_m ||time[m]||_F^2, and
    Parseval gives sum_m ||time[m]||^2 = (1/N) sum_nu ||freq[nu]||^2.
    Setting E||x||^2 = rho_f, the target power cancels — `rho_f` is
    accepted to document that invariance, nothing more.
    """
    energy = np.sum(np.abs(bank.freq) ** 2)
    if energy == 0:
        raise ValueError("cannot normalize a zero-energy filter bank")
    return float(np.sqrt(bank.freq.shape[0] / energy))


def precoded_transmit(bank, symbols):
    """Cyclic precoding x[i] = a sum_m W_m s[(i-m) mod T]; needs T >= N."""
    return _apply_bank(bank, symbols)


def cmfp_transmit(ch, symbols, rho_f=None):
    """Matched-filter transmit x[i] = sqrt(1/(MK)) sum_l Hhat_l s[(i+l) mod T].

    Symbols must already be drawn at per-symbol variance rho_f; the
    explicit 1/sqrt(MK) then yields E||x[i]||^2 = rho_f for any
    correlation matrix with unit diagonal (the argument is accepted only
    to document that precondition).
    """
    M, K, L = ch.dims.M, ch.dims.K, ch.dims.L
    if symbols.shape[0] != K:
        raise ValueError(f"symbol block has {symbols.shape[0]} rows, "
                         f"expected K={K}")
    x = np.zeros((M, symbols.shape[1]), dtype=complex)
    for l in range(L):
        x += ch.Hhat[l] @ np.roll(symbols, -l, axis=1)
    return x / np.sqrt(M * K)


def downlink_receive(ch, x, noise, framing="circular"):
    """User-side reception y[i] = sum_l Hhat_l^H x[(i-l) mod T] + n[i].

    framing="linear" drops the wrapped terms instead (x indices below
    zero contribute nothing), which only affects the first L-1 output
    samples of the block — the steady-state rows are identical.
    """
    K, T = ch.dims.K, x.shape[1]
    if noise.shape != (K, T):
        raise ValueError(f"noise block shaped {noise.shape}, "
                         f"expected ({K}, {T})")
    y = np.zeros((K, T), dtype=complex)
    if framing == "circular":
        for l in range(ch.dims.L):
            y += np.conj(ch.Hhat[l].T) @ np.roll(x, l, axis=1)
    elif framing == "linear":
        for l in range(ch.dims.L):
            y[:, l:] += np.conj(ch.Hhat[l].T) @ x[:, :T - l]
    else:
        raise ValueError(f"unknown framing {framing!r}")
    return y + noise
