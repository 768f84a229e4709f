"""Rayleigh channel sampling and instantaneous SINRs.

Transmission is two-phase: the source beamforms toward a selected relay with
power fraction lam while the destination jams with 1 - lam; the relay then
amplifies and forwards with power lam.  All SINR expressions below are exact
in the drawn vectors (true norms and inner products); the large-antenna
simplifications live in policy.py and analytics.py, never here.

Sampling is counter-based: trial t of a run with master seed m reads from an
independent Philox stream keyed (m, t), so results are bit-identical no
matter how trials are chunked or scheduled.  Each trial consumes one flat
block of standard normals plus one uniform, in a fixed layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .model import EveModel, MeanGains, SystemConfig

# Open-interval guard for the power split.
LAMBDA_EPS = 1e-9


@dataclass(frozen=True)
class RngStream:
    """Addressable random stream: (master_seed, stream_id) -> Philox key."""

    master_seed: int
    stream_id: int

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if not (0 <= v < 2**64):
                raise ValueError(f"{name} must fit in an unsigned 64-bit value, got {v}")

    def generator(self) -> Generator:
        key = np.array([self.master_seed, self.stream_id], dtype=np.uint64)
        return Generator(Philox(key=key))


@dataclass(eq=False)
class ChannelDraw:
    """One network realization, reduced to the gains the protocol sees.

    g_sr[i]: rho*||h_si||^2, source->relay i beamforming gain.
    g_rd[i]: rho*|h_id|^2, relay i <-> destination (reciprocal, so it is both
        the forwarding and the jamming gain at relay i).
    g_null_r[i, l]: rho*|(h_si/||h_si||)^H h_sl|^2, residual beamforming
        leakage toward malicious node l when relay i is served.  Malicious
        node columns are the K relays then the L eavesdroppers; the diagonal
        l == i entry equals g_sr[i] by construction.
    g_rl[i, l]: rho*|h_il|^2 between relay i and malicious node l (zero on
        the self entry, symmetric within the relay block).
    g_ld[l]: rho*|h_ld|^2 destination->node jamming gains; the relay part
        repeats g_rd by reciprocity.
    g_sd: rho*||h_sd||^2 and g_null_d[l]: leakage toward node l when the
        source beamforms to the destination (direct transmission).
    u_rand: one uniform variate reserved for scheme-level randomness
        (uniform relay pick), so policies stay deterministic per trial.
    """

    g_sr: np.ndarray
    g_rd: np.ndarray
    g_null_r: np.ndarray
    g_rl: np.ndarray
    g_ld: np.ndarray
    g_sd: float
    g_null_d: np.ndarray
    u_rand: float

    @property
    def n_relays(self) -> int:
        return len(self.g_sr)

    @property
    def n_nodes(self) -> int:
        return len(self.g_ld)


@dataclass(eq=False)
class BatchDraws:
    """ChannelDraw fields with a leading trial axis (row t == trial t)."""

    g_sr: np.ndarray
    g_rd: np.ndarray
    g_null_r: np.ndarray
    g_rl: np.ndarray
    g_ld: np.ndarray
    g_sd: np.ndarray
    g_null_d: np.ndarray
    u_rand: np.ndarray

    @property
    def n_trials(self) -> int:
        return len(self.g_sd)

    def row(self, t: int) -> ChannelDraw:
        return ChannelDraw(
            g_sr=self.g_sr[t],
            g_rd=self.g_rd[t],
            g_null_r=self.g_null_r[t],
            g_rl=self.g_rl[t],
            g_ld=self.g_ld[t],
            g_sd=float(self.g_sd[t]),
            g_null_d=self.g_null_d[t],
            u_rand=float(self.u_rand[t]),
        )


def _pair_list(k: int, l: int) -> list[tuple[int, int]]:
    # Inter-malicious links that matter: relay-relay (unordered), relay-eve.
    pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]
    pairs += [(i, k + j) for i in range(k) for j in range(l)]
    return pairs


def flat_draw_size(config: SystemConfig, gains: MeanGains) -> int:
    """Standard normals consumed per trial (the uniform comes on top)."""
    k, l, ns = gains.n_relays, gains.n_eves, config.n_antennas
    return 2 * ns * (k + l + 1) + 2 * k + 2 * l + 2 * len(_pair_list(k, l))


def _build_batch(z: np.ndarray, u: np.ndarray, gains: MeanGains, config: SystemConfig) -> BatchDraws:
    k, l, ns = gains.n_relays, gains.n_eves, config.n_antennas
    rho = config.snr_linear
    n = z.shape[0]
    nv = k + l + 1
    pos = 2 * ns * nv
    # Source-side vectors, order: relays, eves, destination.
    scales = np.sqrt(np.concatenate([gains.mu_sr, gains.mu_se, [gains.mu_sd]]) / 2.0)
    vec = z[:, :pos].reshape(n, nv, ns, 2)
    hv = (vec[..., 0] + 1j * vec[..., 1]) * scales[None, :, None]
    # Gram rows for the K relay beamformers plus the destination beamformer,
    # columns for every source-side vector.
    beam_rows = list(range(k)) + [nv - 1]
    gram = np.matmul(np.conj(hv[:, beam_rows, :]), np.swapaxes(hv, 1, 2))
    norms = np.real(gram[:, np.arange(k + 1), beam_rows])
    g_sr = rho * norms[:, :k]
    g_sd = rho * norms[:, k]
    leak = np.abs(gram[:, :, : k + l]) ** 2 / norms[:, :, None]
    g_null_r = rho * leak[:, :k, :]
    g_null_d = rho * leak[:, k, :]

    def cplx_gain(block: np.ndarray, mu: np.ndarray) -> np.ndarray:
        h = (block[..., 0] + 1j * block[..., 1]) * np.sqrt(mu / 2.0)
        return rho * np.abs(h) ** 2

    g_rd = cplx_gain(z[:, pos : pos + 2 * k].reshape(n, k, 2), gains.mu_rd)
    pos += 2 * k
    g_ed = cplx_gain(z[:, pos : pos + 2 * l].reshape(n, l, 2), gains.mu_ed)
    pos += 2 * l
    g_ld = np.concatenate([g_rd, g_ed], axis=1)
    pairs = _pair_list(k, l)
    g_rl = np.zeros((n, k, k + l))
    if pairs:
        mu_pairs = np.array([gains.mu_rl[i, j] for i, j in pairs])
        gp = cplx_gain(z[:, pos : pos + 2 * len(pairs)].reshape(n, len(pairs), 2), mu_pairs)
        for m, (i, j) in enumerate(pairs):
            g_rl[:, i, j] = gp[:, m]
            if j < k:
                g_rl[:, j, i] = gp[:, m]
    return BatchDraws(
        g_sr=g_sr,
        g_rd=g_rd,
        g_null_r=g_null_r,
        g_rl=g_rl,
        g_ld=g_ld,
        g_sd=g_sd,
        g_null_d=g_null_d,
        u_rand=u,
    )


def draw_batch(
    gains: MeanGains,
    config: SystemConfig,
    master_seed: int,
    first_trial: int,
    n_trials: int,
) -> BatchDraws:
    """Draw trials [first_trial, first_trial + n_trials) as stacked arrays.

    Row t is bit-identical to draw_realization with stream_id first_trial+t,
    independent of how the range is split across calls.
    """
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    size = flat_draw_size(config, gains)
    z = np.empty((n_trials, size))
    u = np.empty(n_trials)
    for t in range(n_trials):
        g = RngStream(master_seed, first_trial + t).generator()
        g.standard_normal(size, out=z[t])
        u[t] = g.random()
    return _build_batch(z, u, gains, config)


def draw_realization(gains: MeanGains, config: SystemConfig, rng: RngStream) -> ChannelDraw:
    """Draw one network realization from the given stream."""
    return draw_batch(gains, config, rng.master_seed, rng.stream_id, 1).row(0)


def _check_lam(lam) -> None:
    arr = np.asarray(lam, dtype=float)
    if ((arr <= 0.0) | (arr >= 1.0)).any() or not np.isfinite(arr).all():
        raise ValueError(f"power split must lie strictly inside (0, 1), got {lam}")


def _jammed_ratio(signal, jam, lam):
    # lam * signal / ((1 - lam) * jam + 1): first-phase SINR shape shared by
    # the served relay and every overhearing node.
    return lam * signal / ((1.0 - lam) * jam + 1.0)


def sinr_relay(draw: ChannelDraw, relay: int, lam: float) -> float:
    """First-phase SINR at the served (untrusted) relay."""
    _check_lam(lam)
    return float(_jammed_ratio(draw.g_sr[relay], draw.g_rd[relay], lam))


def sinr_eve_phase1(draw: ChannelDraw, relay: int, node: int, lam: float) -> float:
    """First-phase SINR at malicious node `node` while relay `relay` is served:
    beamforming leakage over destination jamming."""
    _check_lam(lam)
    return float(_jammed_ratio(draw.g_null_r[relay, node], draw.g_ld[node], lam))


def sinr_eve_phase2(draw: ChannelDraw, relay: int, node: int, lam: float) -> float:
    """Second-phase SINR at `node` listening to the relay's amplified forward.

    The relay's own forwarded signal rides on its first-phase observation, so
    this is bounded by the served relay's SINR no matter how strong the
    inter-malicious link is.
    """
    _check_lam(lam)
    if node == relay:
        raise ValueError("second-phase SINR is undefined at the served relay itself")
    g_si, g_id = draw.g_sr[relay], draw.g_rd[relay]
    g_il = draw.g_rl[relay, node]
    return float(
        lam * g_si * g_il / (lam * g_si + (1.0 + (1.0 - lam) * g_id) * (1.0 + g_il))
    )


def sinr_destination(draw: ChannelDraw, relay: int, lam: float) -> float:
    """End-to-end SINR at the destination after self-interference cancellation."""
    _check_lam(lam)
    g_si, g_id = draw.g_sr[relay], draw.g_rd[relay]
    return float(lam * g_si * g_id / (lam * g_si + (2.0 - lam) * g_id + 1.0))


def _leakage_parts(g_si, g_id, null_row, rl_row, g_ld, lam):
    """Per-node max(phase1, phase2) plus both phases, broadcast over trials.

    The self column reproduces the served relay's own SINR in phase 1 (its
    leakage entry is the full beamforming gain and its jamming gain is g_id)
    and zero in phase 2 (self link is zero), so taking node-wise maxima over
    all columns already includes the served relay.
    """
    lam_c = 1.0 - lam
    p1 = lam[..., None] * null_row / (lam_c[..., None] * g_ld + 1.0)
    num = lam[..., None] * g_si[..., None] * rl_row
    den = (lam * g_si)[..., None] + (1.0 + lam_c * g_id)[..., None] * (1.0 + rl_row)
    p2 = num / den
    return p1, p2


def _leakage_core(g_si, g_id, null_row, rl_row, g_ld, lam, model: EveModel, n_relays: int):
    p1, p2 = _leakage_parts(g_si, g_id, null_row, rl_row, g_ld, lam)
    per_node = np.maximum(p1, p2)
    if model is EveModel.NCE:
        return np.max(per_node, axis=-1)
    relay_part = np.max(per_node[..., :n_relays], axis=-1)
    eve_part = np.sum(p1[..., n_relays:] + p2[..., n_relays:], axis=-1)
    return np.maximum(relay_part, eve_part)


def leakage(draw: ChannelDraw, relay: int, lam: float, model: EveModel) -> float:
    """Exact information leakage toward the malicious set.

    NCE: strongest single observation over both phases and all K+L nodes
    (the served relay's own first-phase SINR included).  CE: the worse of the
    relay part and the L pooled eavesdroppers combining both phases.
    """
    _check_lam(lam)
    return float(
        _leakage_core(
            np.asarray(draw.g_sr[relay]),
            np.asarray(draw.g_rd[relay]),
            draw.g_null_r[relay],
            draw.g_rl[relay],
            draw.g_ld,
            np.asarray(float(lam)),
            model,
            draw.n_relays,
        )
    )


def leakage_batch(
    batch: BatchDraws, relay_idx: np.ndarray, lam: np.ndarray, model: EveModel
) -> np.ndarray:
    """Vectorized leakage with per-trial served relay and power split."""
    rows = np.arange(batch.n_trials)
    return _leakage_core(
        batch.g_sr[rows, relay_idx],
        batch.g_rd[rows, relay_idx],
        batch.g_null_r[rows, relay_idx],
        batch.g_rl[rows, relay_idx],
        batch.g_ld,
        np.asarray(lam, dtype=float),
        model,
        batch.g_sr.shape[1],
    )


def dt_snrs(draw: ChannelDraw) -> tuple[float, np.ndarray]:
    """Direct transmission: destination SNR and per-node leakage SNRs."""
    return draw.g_sd, draw.g_null_d.copy()


def dt_leakage(g_null_d: np.ndarray, n_relays: int, model: EveModel) -> np.ndarray | float:
    """Leakage under direct transmission: strongest node (NCE) or the worse
    of strongest relay and pooled eavesdroppers (CE).  Works on a single
    draw's vector or on a batch with a leading trial axis."""
    arr = np.asarray(g_null_d, dtype=float)
    if arr.shape[-1] == 0:
        return np.zeros(arr.shape[:-1]) if arr.ndim > 1 else 0.0
    if model is EveModel.NCE:
        return np.max(arr, axis=-1)
    relay_part = (
        np.max(arr[..., :n_relays], axis=-1)
        if n_relays
        else np.zeros(arr.shape[:-1])
    )
    eve_part = np.sum(arr[..., n_relays:], axis=-1)
    return np.maximum(relay_part, eve_part)
