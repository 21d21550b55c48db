"""GAN augmentation of oracle-confirmed normal rows.

A small generator/discriminator pair trains on the normal rows labeled in an
active-learning iteration; sampling binarizes the generator's sigmoid output
at 0.5 so synthetic rows stay valid boolean records.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import _safe_log
from .nn import Adam, LeakyReLU, Linear, Sequential, Sigmoid

SYNTHETIC_PREFIX = "synth"


@dataclass
class GanConfig:
    """Training schedule for the augmentation GAN.

    Batches are min(batch_size, pool size). Pools smaller than min_pool skip
    augmentation entirely: a couple of rows cannot anchor even a toy GAN.
    """

    steps: int = 600
    batch_size: int = 64
    learning_rate: float = 1e-3
    noise_dim: int = 32
    binarize_threshold: float = 0.5
    min_pool: int = 4

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.noise_dim < 1 or self.batch_size < 1:
            raise ValueError("noise_dim and batch_size must be positive")

    def to_json(self) -> dict:
        return {"steps": self.steps, "batch_size": self.batch_size,
                "learning_rate": self.learning_rate, "noise_dim": self.noise_dim,
                "binarize_threshold": self.binarize_threshold,
                "min_pool": self.min_pool}

    @classmethod
    def from_json(cls, payload: dict) -> "GanConfig":
        return cls(**payload)


class GanModel:
    """Generator noise -> d/2 -> d/2 -> d (sigmoid) and a mirrored
    discriminator d -> d/2 -> d/4 -> 1 (sigmoid)."""

    def __init__(self, dim: int, config: GanConfig, rng):
        h = max(math.ceil(dim / 2), 4)
        hd = max(math.ceil(dim / 4), 4)
        self.dim = dim
        self.config = config
        self.generator = Sequential([
            Linear(config.noise_dim, h, rng, "gan.g1"), LeakyReLU(0.2),
            Linear(h, h, rng, "gan.g2"), LeakyReLU(0.2),
            Linear(h, dim, rng, "gan.g3"), Sigmoid(),
        ])
        self.discriminator = Sequential([
            Linear(dim, h, rng, "gan.d1"), LeakyReLU(0.2),
            Linear(h, hd, rng, "gan.d2"), LeakyReLU(0.2),
            Linear(hd, 1, rng, "gan.d3"), Sigmoid(),
        ])

    def generate(self, count: int, rng) -> np.ndarray:
        """Raw generator output in (0, 1)^d for `count` noise draws."""
        z = rng.standard_normal((count, self.config.noise_dim))
        return self.generator.forward(z, mode="eval")


def discriminator_step_loss(gan: GanModel, real: np.ndarray, fake: np.ndarray,
                            backprop: bool = False, mode: str = "train") -> float:
    """-E[log D(real)] - E[log(1 - D(fake))]; fakes are treated as constants,
    so gradients accumulate into the discriminator only."""
    n = real.shape[0]
    p_real = gan.discriminator.forward(real, mode)
    logp, dlogp = _safe_log(p_real)
    if backprop:
        gan.discriminator.backward(-dlogp / n)
    p_fake = gan.discriminator.forward(fake, mode)
    logq, dlogq = _safe_log(1.0 - p_fake)
    if backprop:
        gan.discriminator.backward(dlogq / n)
    return -float(logp.mean()) - float(logq.mean())


def generator_step_loss(gan: GanModel, noise: np.ndarray,
                        backprop: bool = False, mode: str = "train") -> float:
    """Non-saturating generator loss -E[log D(G(z))]; with backprop the
    gradient flows through the frozen discriminator into the generator."""
    n = noise.shape[0]
    fake = gan.generator.forward(noise, mode)
    p_fake = gan.discriminator.forward(fake, mode)
    logp, dlogp = _safe_log(p_fake)
    if backprop:
        grad_fake = gan.discriminator.backward(-dlogp / n, param_grads=False)
        gan.generator.backward(grad_fake)
    return -float(logp.mean())


def train_gan(pool_rows: np.ndarray, config: GanConfig | None = None,
              rng=None, seed: int = 0) -> GanModel:
    """Alternating minimax training on the given pool of boolean rows.

    Each step maximizes the discriminator's real/fake separation, then takes
    a non-saturating generator step (maximize log D(G(z))). Deterministic per
    seed; logs are clamped so the losses stay finite.
    """
    pool = np.asarray(pool_rows, dtype=np.float64)
    if pool.ndim != 2 or pool.shape[0] == 0:
        raise ValueError("GAN training pool is empty")
    config = config or GanConfig()
    rng = rng if rng is not None else np.random.default_rng(seed)
    gan = GanModel(pool.shape[1], config, rng)
    opt_g = Adam(gan.generator.params(), config.learning_rate)
    opt_d = Adam(gan.discriminator.params(), config.learning_rate)
    batch = min(config.batch_size, pool.shape[0])
    for _ in range(config.steps):
        real = pool[rng.choice(pool.shape[0], size=batch, replace=False)]
        z = rng.standard_normal((batch, config.noise_dim))
        fake = gan.generator.forward(z, mode="train")
        opt_d.zero_grad()
        discriminator_step_loss(gan, real, fake, backprop=True)
        opt_d.step()
        # generator step on fresh noise
        z = rng.standard_normal((batch, config.noise_dim))
        opt_g.zero_grad()
        generator_step_loss(gan, z, backprop=True)
        opt_g.step()
    return gan


def gan_losses(gan: GanModel, pool_rows: np.ndarray, rng) -> tuple[float, float]:
    """Current discriminator and generator losses on one sampled batch."""
    pool = np.asarray(pool_rows, dtype=np.float64)
    batch = min(gan.config.batch_size, pool.shape[0])
    real = pool[rng.choice(pool.shape[0], size=batch, replace=False)]
    fake = gan.generate(batch, rng)
    logp, _ = _safe_log(gan.discriminator.forward(real, mode="eval"))
    logq, _ = _safe_log(1.0 - gan.discriminator.forward(fake, mode="eval"))
    d_loss = -float(logp.mean()) - float(logq.mean())
    logf, _ = _safe_log(gan.discriminator.forward(fake, mode="eval"))
    return d_loss, -float(logf.mean())


def sample_synthetic(gan: GanModel, count: int, rng,
                     iteration: int = 0) -> tuple[list[str], np.ndarray]:
    """Binarized synthetic rows with namespaced ids synth-<iter>-<n>."""
    if count < 0:
        raise ValueError("count must be non-negative")
    if count == 0:
        return [], np.zeros((0, gan.dim), dtype=np.uint8)
    probs = gan.generate(count, rng)
    rows = (probs > gan.config.binarize_threshold).astype(np.uint8)
    ids = [f"{SYNTHETIC_PREFIX}-{iteration}-{n}" for n in range(count)]
    return ids, rows
