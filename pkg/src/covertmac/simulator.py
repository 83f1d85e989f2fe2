"""Finite-blocklength embodiment of the coding scheme: phase-multiplexed
random codebooks, encoding under both hypotheses, the successive threshold
decoder, Monte-Carlo error estimation, and the exact warden divergence at
desk scale.

Covert codewords are i.i.d. Bernoulli at density rho * omega_n / sqrt(n_t)
over the active fraction of each phase; the non-covert codewords are i.i.d.
from the phase's x3 distribution.  Under hypothesis 0 the covert users send
all-zero sequences.  All randomness flows through numpy Generators seeded
from (seed, trial index), so reports are reproducible under any scheduling.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .channel import Dmc, SIDE_Z
from .infotheory import DEFAULT_UNIT, divergence_profile, unit_factor
from .region import PhasePlan, theorem1_sizing

WILSON_Z = 1.959963984540054      # 95% two-sided


class EnumerationCapError(RuntimeError):
    """Exact-divergence enumeration would exceed the configured cap."""


@dataclass
class SimConfig:
    n: int
    plan: PhasePlan
    m1: int = 2
    m2: int = 2
    m3: int = 2
    k1: int = 1
    k2: int = 1
    omega_n: float | None = None        # default n**-0.25
    eta1: float | str = "auto"
    eta2: float | str = "auto"
    mu: float = 0.5                     # auto-threshold backoff
    trials: int = 1000
    seed: int = 0
    exact_divergence: bool = False
    fixed_codebook: bool = False
    enum_cap: int = 1 << 26

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be non-negative")
        if self.omega_n is None:
            self.omega_n = float(self.n) ** -0.25 if self.n > 0 else 0.0
        for name in ("m1", "m2", "m3", "k1", "k2"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0 < self.mu < 1:
            raise ValueError("mu must lie in (0, 1)")
        self.plan.validate()

    def pair_count(self) -> int:
        return self.m1 * self.k1 * self.m2 * self.k2


def phase_lengths(n: int, p_t) -> list[int]:
    """floor(n * p_t) per phase, remainder assigned to the last phase."""
    lens = [int(math.floor(n * p)) for p in p_t]
    lens[-1] += n - sum(lens)
    return lens


def _phi_fractions(plan: PhasePlan) -> tuple[float, float, bool]:
    """Per-user active fractions; True when user 2 takes the longer role."""
    bmax = max(plan.beta1, plan.beta2)
    return plan.beta1 * bmax, plan.beta2 * bmax, plan.beta2 > plan.beta1


class CodebookEnsemble:
    """Random codebooks for one (plan, n, omega_n, sizes) configuration."""

    def __init__(self, cfg: SimConfig, rng: np.random.Generator, d_x3_size: int):
        plan = cfg.plan
        self.cfg = cfg
        self.plan = plan
        self.n = cfg.n
        self.omega_n = cfg.omega_n
        self.n_t = phase_lengths(cfg.n, plan.p_t)
        self.offsets = np.concatenate([[0], np.cumsum(self.n_t)]).astype(int)
        self.phi1, self.phi2, self.swapped = _phi_fractions(plan)
        self.active1 = [int(math.floor(self.phi1 * nt)) for nt in self.n_t]
        self.active2 = [int(math.floor(self.phi2 * nt)) for nt in self.n_t]
        self.clip_warnings: list[str] = []
        self.bern1, self.bern2 = [], []
        self.cb1, self.cb2, self.cb3 = [], [], []
        for t in range(plan.tau):
            nt = self.n_t[t]
            dens = []
            for user, rho in ((1, plan.rho1[t]), (2, plan.rho2[t])):
                p = rho * self.omega_n / math.sqrt(nt) if nt > 0 else 0.0
                if p > 1.0:
                    self.clip_warnings.append(
                        f"phase {t}: user-{user} density {p:.3g} clipped to 1")
                    p = 1.0
                dens.append(p)
            self.bern1.append(dens[0])
            self.bern2.append(dens[1])
            self.cb1.append((rng.random((cfg.m1, cfg.k1, self.active1[t]))
                             < dens[0]).astype(np.uint8))
            self.cb2.append((rng.random((cfg.m2, cfg.k2, self.active2[t]))
                             < dens[1]).astype(np.uint8))
            q = np.asarray(plan.p_x3_given_t[t], dtype=float)
            if len(q) != d_x3_size:
                raise ValueError("plan x3 alphabet does not match the channel")
            self.cb3.append(rng.choice(d_x3_size, size=(cfg.m3, nt), p=q))

    def x3_sequence(self, w3: int) -> np.ndarray:
        return np.concatenate([cb[w3] for cb in self.cb3]) if self.n else \
            np.zeros(0, dtype=int)

    def covert_sequence(self, user: int, w: int, s: int) -> np.ndarray:
        """Codeword symbols placed in the block, zeros elsewhere (no padding)."""
        x = np.zeros(self.n, dtype=np.uint8)
        cbs = self.cb1 if user == 1 else self.cb2
        active = self.active1 if user == 1 else self.active2
        for t in range(self.plan.tau):
            off = self.offsets[t]
            x[off:off + active[t]] = cbs[t][w, s]
        return x


def build_codebooks(cfg: SimConfig, rng: np.random.Generator,
                    d: Dmc | None = None, x3_size: int | None = None
                    ) -> CodebookEnsemble:
    """Draw a fresh random-coding ensemble; deterministic given the rng state."""
    if x3_size is None:
        x3_size = d.x3_size if d is not None else len(cfg.plan.p_x3_given_t[0])
    return CodebookEnsemble(cfg, rng, x3_size)


def encode(ens: CodebookEnsemble, hypothesis: int, w1: int, s1: int,
           w2: int, s2: int, w3: int, rng: np.random.Generator):
    """Channel inputs (x1, x2, x3) for one transmission.

    Under hypothesis 0 both covert users send all-zero sequences.  Under
    hypothesis 1 the shorter-active covert user pads the gap up to the longer
    user's active fraction with fresh i.i.d. symbols at its code density.
    """
    cfg = ens.cfg
    if not (0 <= w3 < cfg.m3):
        raise IndexError("w3 out of range")
    x3 = ens.x3_sequence(w3)
    if hypothesis == 0:
        z = np.zeros(ens.n, dtype=np.uint8)
        return z, z.copy(), x3
    if not (0 <= w1 < cfg.m1 and 0 <= s1 < cfg.k1
            and 0 <= w2 < cfg.m2 and 0 <= s2 < cfg.k2):
        raise IndexError("message or key index out of range")
    x1 = ens.covert_sequence(1, w1, s1)
    x2 = ens.covert_sequence(2, w2, s2)
    # pad the shorter user over [active_short, active_long) of each phase
    short_user = 1 if ens.swapped else 2
    xs = x1 if short_user == 1 else x2
    dens = ens.bern1 if short_user == 1 else ens.bern2
    lo = ens.active1 if ens.swapped else ens.active2
    hi = ens.active2 if ens.swapped else ens.active1
    for t in range(ens.plan.tau):
        gap = hi[t] - lo[t]
        if gap > 0:
            off = ens.offsets[t]
            xs[off + lo[t]:off + hi[t]] = (rng.random(gap) < dens[t])
    return x1, x2, x3


def channel_sample(d: Dmc, x1, x2, x3, rng: np.random.Generator):
    """Memoryless outputs (y, z); the two sides are sampled independently."""
    x1 = np.asarray(x1, dtype=int)
    x2 = np.asarray(x2, dtype=int)
    x3 = np.asarray(x3, dtype=int)
    if not (len(x1) == len(x2) == len(x3)):
        raise ValueError("input sequences must have equal length")
    n = len(x1)
    if n == 0:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    rows = x1 * (2 * d.x3_size) + x2 * d.x3_size + x3
    y = _sample_rows(d.gamma_y, rows, rng)
    z = _sample_rows(d.gamma_z, rows, rng)
    return y, z


def _sample_rows(mat: np.ndarray, rows: np.ndarray,
                 rng: np.random.Generator) -> np.ndarray:
    cum = np.cumsum(mat[rows], axis=1)
    u = rng.random(len(rows))
    out = (u[:, None] >= cum).sum(axis=1)
    return np.minimum(out, mat.shape[1] - 1)


@dataclass(frozen=True)
class DecodeResult:
    w3: int
    w1: int | None = None     # None = stage not run (H=0) or stage error
    w2: int | None = None


def auto_thresholds(d: Dmc, plan: PhasePlan, n: int, omega_n: float,
                    mu: float = 0.5) -> tuple[float, float]:
    """eta_l = (1 - mu) * omega_n * sqrt(n) * E[rho_l D_Y^(l)], natural log."""
    prof = divergence_profile(d, unit="nats")
    e = [0.0, 0.0]
    for t in range(plan.tau):
        q = np.asarray(plan.p_x3_given_t[t], dtype=float)
        e[0] += plan.p_t[t] * plan.rho1[t] * float(q @ prof.d_y1)
        e[1] += plan.p_t[t] * plan.rho2[t] * float(q @ prof.d_y2)
    root = omega_n * math.sqrt(n)
    return (1 - mu) * root * e[0], (1 - mu) * root * e[1]


def decode(ens: CodebookEnsemble, d: Dmc, yn, s1: int, s2: int,
           hypothesis: int, eta1: float, eta2: float) -> DecodeResult:
    """Successive decoder: w3 by maximum likelihood assuming silent covert
    users, then each covert message by a unique-above-threshold rule within
    the known key's sub-codebook.  Ties and failures resolve to the lowest
    index and stage errors respectively."""
    y = np.asarray(yn, dtype=int)
    cfg = ens.cfg
    with np.errstate(divide="ignore"):
        log_gy = np.log(d.gamma_y)
    # step 1: non-covert message, all-zero covert inputs assumed
    scores = np.empty(cfg.m3)
    for w3 in range(cfg.m3):
        rows = ens.x3_sequence(w3)
        scores[w3] = float(np.sum(log_gy[rows, y]))
    w3_hat = int(np.argmax(scores))
    if hypothesis == 0:
        return DecodeResult(w3=w3_hat)
    x3 = ens.x3_sequence(w3_hat)
    base_rows = x3                              # (0,0,x3) index equals x3
    w1_hat = _decode_covert(ens, d, y, 1, s1, x3, base_rows, eta1, log_gy)
    w2_hat = _decode_covert(ens, d, y, 2, s2, x3, base_rows, eta2, log_gy)
    return DecodeResult(w3=w3_hat, w1=w1_hat, w2=w2_hat)


def _decode_covert(ens, d, y, user, key, x3, base_rows, eta, log_gy):
    cfg = ens.cfg
    m = cfg.m1 if user == 1 else cfg.m2
    hits = []
    for j in range(m):
        xl = ens.covert_sequence(user, j, key)
        on = xl == 1
        if not np.any(on):
            llr = 0.0
        else:
            if user == 1:
                rows_on = 1 * (2 * d.x3_size) + x3[on]
            else:
                rows_on = d.x3_size + x3[on]
            llr = float(np.sum(log_gy[rows_on, y[on]])
                        - np.sum(log_gy[base_rows[on], y[on]]))
        if llr > eta:
            hits.append(j)
        if len(hits) > 1:
            return None
    return hits[0] if len(hits) == 1 else None


@dataclass
class SimReport:
    trials_run: int
    pe0_hat: float | None
    pe0_interval: tuple | None
    pe1_hat: float | None
    pe1_interval: tuple | None
    stage_errors: dict = field(default_factory=dict)
    delta_exact: float | None = None
    delta_bound_ratio: float | None = None
    codebook_mode: str = "fresh-per-trial"
    clip_warnings: tuple = ()
    wall_time: float = 0.0
    unit: str = DEFAULT_UNIT


def wilson_interval(errors: int, trials: int, z: float = WILSON_Z):
    if trials == 0:
        return None
    phat = errors / trials
    denom = 1 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials
                         + z * z / (4 * trials * trials)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def run_trials(cfg: SimConfig, d: Dmc) -> SimReport:
    """Monte-Carlo error probabilities under both hypotheses.

    Per-trial RNG streams derive from (seed, trial index); with
    ``fixed_codebook`` one ensemble (stream (seed, -1)) serves every trial,
    otherwise each trial draws a fresh ensemble (random-coding average).
    """
    t0 = time.perf_counter()
    eta1, eta2 = cfg.eta1, cfg.eta2
    if eta1 == "auto" or eta2 == "auto":
        a1, a2 = auto_thresholds(d, cfg.plan, cfg.n, cfg.omega_n, cfg.mu)
        eta1 = a1 if eta1 == "auto" else float(eta1)
        eta2 = a2 if eta2 == "auto" else float(eta2)
    fixed_ens = None
    if cfg.fixed_codebook:
        rng_cb = np.random.default_rng(np.random.SeedSequence([cfg.seed, 2**31]))
        fixed_ens = build_codebooks(cfg, rng_cb, d=d)
    e0 = e1 = 0
    stage = {"w3_h0": 0, "w3": 0, "w1": 0, "w2": 0}
    for trial in range(cfg.trials):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, trial]))
        ens = fixed_ens if fixed_ens is not None else build_codebooks(cfg, rng, d=d)
        w1 = int(rng.integers(cfg.m1)); s1 = int(rng.integers(cfg.k1))
        w2 = int(rng.integers(cfg.m2)); s2 = int(rng.integers(cfg.k2))
        w3 = int(rng.integers(cfg.m3))
        # hypothesis 0
        x1, x2, x3 = encode(ens, 0, w1, s1, w2, s2, w3, rng)
        y, _ = channel_sample(d, x1, x2, x3, rng)
        res0 = decode(ens, d, y, s1, s2, 0, eta1, eta2)
        if res0.w3 != w3:
            e0 += 1
            stage["w3_h0"] += 1
        # hypothesis 1
        x1, x2, x3 = encode(ens, 1, w1, s1, w2, s2, w3, rng)
        y, _ = channel_sample(d, x1, x2, x3, rng)
        res1 = decode(ens, d, y, s1, s2, 1, eta1, eta2)
        bad3 = res1.w3 != w3
        bad1 = res1.w1 != w1
        bad2 = res1.w2 != w2
        stage["w3"] += bad3
        stage["w1"] += bad1
        stage["w2"] += bad2
        if bad3 or bad1 or bad2:
            e1 += 1
    delta_exact = delta_ratio = None
    clip = ()
    if cfg.trials > 0 or cfg.exact_divergence:
        ens = fixed_ens
        if ens is None:
            rng_cb = np.random.default_rng(
                np.random.SeedSequence([cfg.seed, 2**31]))
            ens = build_codebooks(cfg, rng_cb, d=d)
        clip = tuple(ens.clip_warnings)
        if cfg.exact_divergence:
            deltas = [exact_delta(ens, d, w3, unit="nats")
                      for w3 in range(cfg.m3)]
            delta_exact = float(np.mean(deltas))
            sz = theorem1_sizing(d, cfg.plan, cfg.n, cfg.omega_n,
                                 (0.1,) * 6, unit="nats")
            predictor = sz.divergence_bound / (1 + 0.1)  # strip the slack
            delta_ratio = delta_exact / predictor if predictor > 0 else math.inf
    n_tr = cfg.trials
    report = SimReport(
        trials_run=n_tr,
        pe0_hat=(e0 / n_tr) if n_tr else None,
        pe0_interval=wilson_interval(e0, n_tr),
        pe1_hat=(e1 / n_tr) if n_tr else None,
        pe1_interval=wilson_interval(e1, n_tr),
        stage_errors=stage,
        delta_exact=delta_exact,
        delta_bound_ratio=delta_ratio,
        codebook_mode="fixed" if cfg.fixed_codebook else "fresh-per-trial",
        clip_warnings=clip,
        wall_time=time.perf_counter() - t0,
    )
    return report


def exact_delta(ens: CodebookEnsemble, d: Dmc, w3: int,
                unit: str = "nats") -> float:
    """Exact KL between the warden's hypothesis-1 mixture law and the all-off
    product law, conditioned on the non-covert message.

    Enumerates all |Z|^n output sequences and all (message, key) pairs;
    refuses when that exceeds the configured cap.  The shorter user's padding
    segment enters as an exact per-symbol Bernoulli mixture.
    """
    cfg = ens.cfg
    n = ens.n
    work = d.z_size ** n * cfg.pair_count() if n > 0 else 0
    if work > cfg.enum_cap:
        raise EnumerationCapError(
            f"|Z|^n * pairs = {work} exceeds enumeration cap {cfg.enum_cap}")
    x3 = ens.x3_sequence(w3)
    ref_rows = [d.row(SIDE_Z, 0, 0, int(v)) for v in x3]
    ref = _product_law(ref_rows)
    short_user = 1 if ens.swapped else 2
    dens = ens.bern1 if short_user == 1 else ens.bern2
    lo = ens.active1 if ens.swapped else ens.active2
    hi = ens.active2 if ens.swapped else ens.active1
    qhat = np.zeros_like(ref)
    pairs = 0
    for wa in range(cfg.m1):
        for sa in range(cfg.k1):
            x1 = ens.covert_sequence(1, wa, sa)
            for wb in range(cfg.m2):
                for sb in range(cfg.k2):
                    x2 = ens.covert_sequence(2, wb, sb)
                    rows = []
                    for t in range(ens.plan.tau):
                        off = ens.offsets[t]
                        for i in range(off, off + ens.n_t[t]):
                            j = i - off
                            if lo[t] <= j < hi[t]:
                                p = dens[t]
                                if short_user == 2:
                                    r = ((1 - p) * d.row(SIDE_Z, int(x1[i]), 0, int(x3[i]))
                                         + p * d.row(SIDE_Z, int(x1[i]), 1, int(x3[i])))
                                else:
                                    r = ((1 - p) * d.row(SIDE_Z, 0, int(x2[i]), int(x3[i]))
                                         + p * d.row(SIDE_Z, 1, int(x2[i]), int(x3[i])))
                            else:
                                r = d.row(SIDE_Z, int(x1[i]), int(x2[i]), int(x3[i]))
                            rows.append(r)
                    qhat += _product_law(rows)
                    pairs += 1
    qhat /= pairs
    mask = qhat > 0
    if np.any(ref[mask] == 0):
        return math.inf
    terms = qhat[mask] * np.log(qhat[mask] / ref[mask])
    return math.fsum(terms.tolist()) / unit_factor(unit)


def _product_law(rows) -> np.ndarray:
    out = np.ones(1)
    for r in rows:
        out = np.kron(out, r)
    return out
