"""Dual adversarial autoencoder with a latent attention gate.

Two complementary autoencoders reconstruct the same boolean input batch; a
three-layer discriminator is trained to tell real rows from either
reconstruction, and the autoencoders are trained on a weighted sum of their
reconstruction errors plus a non-saturating adversarial term. The anomaly
score of a record is its combined per-record reconstruction error in eval
mode.

The first autoencoder routes its latent code through a softmax attention
gate over contiguous latent tokens; the second decodes the raw latent.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import metrics
from .data import BooleanDataset
from .nn import (Adam, BatchNorm, Dropout, LeakyReLU, Linear, Param, Sequential,
                 ShapeError, Sigmoid, check_finite, glorot_uniform)

CHECKPOINT_SCHEMA = 1
_CLAMP = 1e-7


@dataclass
class Hyperparams:
    """Architecture and training settings for the dual autoencoder."""

    latent_dim: int = 32
    attention_tokens: int = 8
    alpha: float = 0.5          # weight of the first reconstruction path
    adv_weight: float = 0.5     # weight of the adversarial term
    learning_rate: float = 1e-4
    batch_size: int = 128
    max_epochs: int = 300
    patience: int = 10
    leaky_slope: float = 0.2
    dropout_p: float = 0.2

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.adv_weight > 0.0:
            raise ValueError(f"adv_weight must be positive, got {self.adv_weight}")
        if self.latent_dim % self.attention_tokens:
            raise ValueError(
                f"latent_dim {self.latent_dim} is not divisible by "
                f"attention_tokens {self.attention_tokens}")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, payload: dict) -> "Hyperparams":
        return cls(**payload)


def layer_widths(dim: int, latent_dim: int) -> tuple[int, int]:
    """Hidden widths d/2 and d/4 (ceiling), floored at max(latent, 4) so
    tiny inputs still build a valid stack."""
    floor = max(latent_dim, 4)
    return max(math.ceil(dim / 2), floor), max(math.ceil(dim / 4), floor)


class LatentAttention:
    """Softmax gate over contiguous latent tokens.

    A length-k latent splits into T tokens of width k/T. Token i is scored
    e_i = v . h_i against a learned vector v, the scores softmax into weights,
    and token i is rescaled by T * weight_i before the latent is flattened
    back. Uniform weights (v = 0) therefore make the gate the identity map.
    """

    def __init__(self, latent_dim: int, tokens: int, rng, name="attention"):
        if latent_dim % tokens:
            raise ShapeError(
                f"latent dim {latent_dim} does not divide into {tokens} tokens")
        self.tokens = tokens
        self.width = latent_dim // tokens
        self.score_vector = Param(
            glorot_uniform(rng, self.width, 1, (self.width,)), f"{name}.score_vector")
        self._cache = None

    def forward(self, z, mode="train", rng=None):
        n, k = z.shape
        if k != self.tokens * self.width:
            raise ShapeError(f"expected latent width {self.tokens * self.width}, got {k}")
        h = z.reshape(n, self.tokens, self.width)
        e = h @ self.score_vector.value                      # (n, T)
        e = e - e.max(axis=1, keepdims=True)
        w = np.exp(e)
        xi = w / w.sum(axis=1, keepdims=True)
        scale = self.tokens * xi
        self._cache = (h, xi, scale)
        return (h * scale[:, :, None]).reshape(n, k)

    def backward(self, grad_out, param_grads=True):
        h, xi, scale = self._cache
        n, tokens, width = h.shape
        g = grad_out.reshape(n, tokens, width)
        s = tokens * np.einsum("ntw,ntw->nt", g, h)
        de = xi * (s - np.sum(s * xi, axis=1, keepdims=True))
        dh = g * scale[:, :, None] + de[:, :, None] * self.score_vector.value
        if param_grads:
            self.score_vector.grad += np.einsum("nt,ntw->w", de, h)
        return dh.reshape(n, tokens * width)

    def params(self):
        return [self.score_vector]


def attention_apply(attention: LatentAttention, z: np.ndarray) -> np.ndarray:
    """Gate a single latent vector (or a batch of them)."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim == 1:
        return attention.forward(z.reshape(1, -1), mode="eval")[0]
    return attention.forward(z, mode="eval")


class AutoEncoder:
    """Encoder d -> h1 -> h2 -> k and mirrored decoder, sigmoid output.

    Hidden layers use LeakyReLU followed by batch normalization; dropout sits
    after the first hidden layer only. The latent layer is LeakyReLU with no
    normalization so the optional attention gate sees raw token magnitudes.
    """

    def __init__(self, dim: int, hyper: Hyperparams, rng, attention: bool, name: str):
        h1, h2 = layer_widths(dim, hyper.latent_dim)
        k = hyper.latent_dim
        slope = hyper.leaky_slope
        self.encoder = Sequential([
            Linear(dim, h1, rng, f"{name}.enc1"), LeakyReLU(slope),
            BatchNorm(h1, name=f"{name}.enc1.bn"), Dropout(hyper.dropout_p),
            Linear(h1, h2, rng, f"{name}.enc2"), LeakyReLU(slope),
            BatchNorm(h2, name=f"{name}.enc2.bn"),
            Linear(h2, k, rng, f"{name}.enc3"), LeakyReLU(slope),
        ])
        self.attention = (LatentAttention(k, hyper.attention_tokens, rng,
                                          f"{name}.attention")
                          if attention else None)
        self.decoder = Sequential([
            Linear(k, h2, rng, f"{name}.dec1"), LeakyReLU(slope),
            BatchNorm(h2, name=f"{name}.dec1.bn"),
            Linear(h2, h1, rng, f"{name}.dec2"), LeakyReLU(slope),
            BatchNorm(h1, name=f"{name}.dec2.bn"),
            Linear(h1, dim, rng, f"{name}.dec3"), Sigmoid(),
        ])

    def forward(self, x, mode="train", rng=None):
        z = self.encoder.forward(x, mode, rng)
        if self.attention is not None:
            z = self.attention.forward(z, mode, rng)
        return self.decoder.forward(z, mode, rng)

    def backward(self, grad_out, param_grads=True):
        grad = self.decoder.backward(grad_out, param_grads)
        if self.attention is not None:
            grad = self.attention.backward(grad, param_grads)
        return self.encoder.backward(grad, param_grads)

    def params(self):
        out = self.encoder.params()
        if self.attention is not None:
            out += self.attention.params()
        return out + self.decoder.params()

    def layers(self):
        yield from self.encoder.layers
        if self.attention is not None:
            yield self.attention
        yield from self.decoder.layers


def build_discriminator(dim: int, hyper: Hyperparams, rng, name="disc") -> Sequential:
    h1 = max(math.ceil(dim / 2), 4)
    h2 = max(math.ceil(dim / 4), 4)
    slope = hyper.leaky_slope
    return Sequential([
        Linear(dim, h1, rng, f"{name}.1"), LeakyReLU(slope),
        Linear(h1, h2, rng, f"{name}.2"), LeakyReLU(slope),
        Linear(h2, 1, rng, f"{name}.3"), Sigmoid(),
    ])


class DualAdversarialAutoencoder:
    """The trainable model: two autoencoders plus the shared discriminator."""

    def __init__(self, dim: int, hyper: Hyperparams | None = None, seed: int = 0):
        self.dim = dim
        self.hyper = hyper or Hyperparams()
        self.seed = seed
        r1, r2, r3 = np.random.default_rng(seed).spawn(3)
        self.ae1 = AutoEncoder(dim, self.hyper, r1, attention=True, name="ae1")
        self.ae2 = AutoEncoder(dim, self.hyper, r2, attention=False, name="ae2")
        self.disc = build_discriminator(dim, self.hyper, r3)
        self.training_log: list[dict] = []

    def reconstruct(self, batch, which="ae1", mode="eval", rng=None):
        """Reconstruction of a batch through one of the two paths; the first
        path routes the latent through the attention gate."""
        batch = np.asarray(batch, dtype=np.float64)
        if batch.ndim != 2 or batch.shape[1] != self.dim:
            raise ShapeError(f"expected (n, {self.dim}) batch, got {batch.shape}")
        if which == "ae1":
            return self.ae1.forward(batch, mode, rng)
        if which == "ae2":
            return self.ae2.forward(batch, mode, rng)
        raise ValueError(f"which must be 'ae1' or 'ae2', got {which!r}")

    def ae_params(self) -> list[Param]:
        return self.ae1.params() + self.ae2.params()

    def disc_params(self) -> list[Param]:
        return self.disc.params()

    def _all_layers(self):
        yield from self.ae1.layers()
        yield from self.ae2.layers()
        yield from self.disc.layers

    def state_dict(self) -> dict[str, np.ndarray]:
        arrays: dict[str, np.ndarray] = {}
        for layer in self._all_layers():
            for p in layer.params():
                arrays[p.name] = p.value.copy()
            if isinstance(layer, BatchNorm):
                arrays[f"{layer.name}.running_mean"] = layer.running_mean.copy()
                arrays[f"{layer.name}.running_var"] = layer.running_var.copy()
        return arrays

    def load_state_dict(self, arrays: dict[str, np.ndarray]) -> None:
        live: dict[str, np.ndarray] = {}
        for layer in self._all_layers():
            for p in layer.params():
                live[p.name] = p.value
            if isinstance(layer, BatchNorm):
                live[f"{layer.name}.running_mean"] = layer.running_mean
                live[f"{layer.name}.running_var"] = layer.running_var
        if set(live) != set(arrays):
            raise ValueError("state dict does not match this model's layout")
        for name, target in live.items():
            target[...] = arrays[name]


def per_record_errors(x_batch, xhat_batch) -> np.ndarray:
    """Squared L2 distance between each record and its reconstruction."""
    x = np.asarray(x_batch, dtype=np.float64)
    xh = np.asarray(xhat_batch, dtype=np.float64)
    if x.shape != xh.shape:
        raise ShapeError(f"batch {x.shape} vs reconstruction {xh.shape}")
    return ((x - xh) ** 2).sum(axis=1)


def reconstruction_loss(x_batch, xhat_batch) -> float:
    """Mean over records of the squared L2 reconstruction distance."""
    return float(per_record_errors(x_batch, xhat_batch).mean())


def combined_reconstruction(model: DualAdversarialAutoencoder, batch,
                            mode="eval", rng=None) -> np.ndarray:
    """Per-record weighted reconstruction error: alpha from the attention
    path, (1 - alpha) from the plain path. alpha=1 reduces to the first
    path's error, alpha=0 to the second's."""
    batch = np.asarray(batch, dtype=np.float64)
    a = model.hyper.alpha
    r1 = per_record_errors(batch, model.ae1.forward(batch, mode, rng))
    r2 = per_record_errors(batch, model.ae2.forward(batch, mode, rng))
    return a * r1 + (1.0 - a) * r2


def _safe_log(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """log of probabilities clamped to [1e-7, 1 - 1e-7]; second value is the
    derivative d log(clamped p) / dp, zero where the clamp is active."""
    clipped = np.clip(p, _CLAMP, 1.0 - _CLAMP)
    gate = ((p > _CLAMP) & (p < 1.0 - _CLAMP)).astype(np.float64)
    return np.log(clipped), gate / clipped


def discriminator_loss(model: DualAdversarialAutoencoder, real_batch,
                       recon1, recon2, backprop=False, mode="train") -> float:
    """Mean-form cross-entropy across the real stream and both
    reconstruction streams. With backprop=True, accumulates gradients into
    the discriminator parameters only (reconstructions are fixed fakes)."""
    n = real_batch.shape[0]
    p = model.disc.forward(real_batch, mode)
    logp, dlogp = _safe_log(p)
    loss = -float(logp.mean())
    if backprop:
        model.disc.backward(-dlogp / n)
    for fake in (recon1, recon2):
        p = model.disc.forward(fake, mode)
        logq, dlogq = _safe_log(1.0 - p)
        loss += -float(logq.mean())
        if backprop:
            model.disc.backward(dlogq / n)
    return loss


def _adversarial_with_grads(model, recon1, recon2, mode):
    """Non-saturating generator loss and its gradients with respect to the
    two reconstruction batches. Discriminator parameters stay frozen."""
    n = recon1.shape[0]
    loss = 0.0
    input_grads = []
    for fake in (recon1, recon2):
        p = model.disc.forward(fake, mode)
        logp, dlogp = _safe_log(p)
        loss += -float(logp.mean())
        input_grads.append(model.disc.backward(-dlogp / n, param_grads=False))
    return loss, input_grads


def adversarial_loss(model: DualAdversarialAutoencoder, recon1, recon2,
                     mode="train") -> float:
    """Generator-side adversarial loss: -E[log D(recon1) + log D(recon2)]."""
    loss, _ = _adversarial_with_grads(model, recon1, recon2, mode)
    return loss


def total_loss(model: DualAdversarialAutoencoder, batch, mode="train",
               rng=None, backprop=False) -> float:
    """Combined objective for the autoencoder update: weighted dual
    reconstruction error plus adv_weight times the adversarial term.

    With backprop=True, gradients accumulate into both autoencoders
    (including the attention gate); the discriminator receives none.
    """
    batch = np.asarray(batch, dtype=np.float64)
    n = batch.shape[0]
    a, lam = model.hyper.alpha, model.hyper.adv_weight
    xh1 = model.ae1.forward(batch, mode, rng)
    xh2 = model.ae2.forward(batch, mode, rng)
    rec = a * reconstruction_loss(batch, xh1) + (1.0 - a) * reconstruction_loss(batch, xh2)
    adv, input_grads = _adversarial_with_grads(model, xh1, xh2, mode)
    if backprop:
        model.ae1.backward(a * 2.0 * (xh1 - batch) / n + lam * input_grads[0])
        model.ae2.backward((1.0 - a) * 2.0 * (xh2 - batch) / n + lam * input_grads[1])
    return rec + lam * adv


def _batch_slices(n: int, batch_size: int) -> list[slice]:
    """Contiguous batches; a trailing singleton is folded into the previous
    batch so batch normalization always sees at least two rows."""
    slices = [slice(s, min(s + batch_size, n)) for s in range(0, n, batch_size)]
    if len(slices) > 1 and slices[-1].stop - slices[-1].start == 1:
        last = slices.pop()
        slices[-1] = slice(slices[-1].start, last.stop)
    return slices


def fit(model: DualAdversarialAutoencoder, train_rows: np.ndarray,
        val_rows: np.ndarray, rng, max_epochs: int | None = None) -> list[dict]:
    """Alternating adversarial training with early stopping.

    Each batch takes one discriminator step and one joint autoencoder step.
    Epochs end with the combined validation reconstruction loss (eval mode);
    the best-validation parameters are kept and restored, and training stops
    after `patience` consecutive non-improving epochs or at the epoch cap.
    An empty validation set disables early stopping.
    """
    train_rows = np.asarray(train_rows, dtype=np.float64)
    val_rows = np.asarray(val_rows, dtype=np.float64)
    if train_rows.shape[0] == 0:
        raise ValueError("training set is empty")
    hyper = model.hyper
    cap = hyper.max_epochs if max_epochs is None else max_epochs
    opt_ae = Adam(model.ae_params(), hyper.learning_rate)
    opt_d = Adam(model.disc_params(), hyper.learning_rate)
    best_val = math.inf
    best_state = None
    patience_left = hyper.patience
    log: list[dict] = []
    n = train_rows.shape[0]
    for epoch in range(1, cap + 1):
        order = rng.permutation(n)
        d_sum = t_sum = 0.0
        slices = _batch_slices(n, hyper.batch_size)
        for sl in slices:
            x = train_rows[order[sl]]
            xh1 = model.ae1.forward(x, "train", rng)
            xh2 = model.ae2.forward(x, "train", rng)
            opt_d.zero_grad()
            d_sum += discriminator_loss(model, x, xh1, xh2, backprop=True)
            opt_d.step()
            opt_ae.zero_grad()
            t_sum += total_loss(model, x, mode="train", rng=rng, backprop=True)
            opt_ae.step()
        entry = {"epoch": epoch,
                 "disc_loss": d_sum / len(slices),
                 "train_loss": t_sum / len(slices)}
        check_finite(np.array([entry["disc_loss"], entry["train_loss"]]),
                     f"epoch {epoch} losses")
        if val_rows.shape[0]:
            val = float(combined_reconstruction(model, val_rows, mode="eval").mean())
            entry["val_loss"] = val
            log.append(entry)
            model.training_log.append(entry)
            if val < best_val:
                best_val = val
                best_state = model.state_dict()
                patience_left = hyper.patience
            else:
                patience_left -= 1
                if patience_left == 0:
                    break
        else:
            log.append(entry)
            model.training_log.append(entry)
    if best_state is not None:
        model.load_state_dict(best_state)
    return log


def anomaly_scores(model: DualAdversarialAutoencoder, rows,
                   chunk: int = 2048) -> np.ndarray:
    """Eval-mode combined reconstruction error per record. Deterministic and
    independent of batch composition."""
    rows = np.asarray(rows, dtype=np.float64)
    parts = [combined_reconstruction(model, rows[s:s + chunk], mode="eval")
             for s in range(0, rows.shape[0], chunk)]
    return check_finite(np.concatenate(parts) if parts else np.zeros(0),
                        "anomaly scores")


def anomaly_score(model: DualAdversarialAutoencoder, record) -> float:
    record = np.asarray(record, dtype=np.float64).reshape(1, -1)
    return float(anomaly_scores(model, record)[0])


def classify(score: float, tau: float) -> int:
    """1 iff the score strictly exceeds the threshold."""
    if not math.isfinite(tau):
        raise ValueError(f"threshold must be finite, got {tau}")
    return 1 if score > tau else 0


def score_dataset(model: DualAdversarialAutoencoder, ids,
                  dataset: BooleanDataset) -> metrics.RankedList:
    """Rank the given records by descending anomaly score (ties by id)."""
    ordered = sorted(ids)
    scores = anomaly_scores(model, dataset.rows_for(ordered))
    return metrics.rank_by_score(dict(zip(ordered, scores)))


def save_checkpoint(model: DualAdversarialAutoencoder, path) -> None:
    """Versioned JSON checkpoint: hyperparameters, seed, and every tensor
    including batchnorm running statistics. Byte-stable for identical runs."""
    arrays = {name: {"shape": list(arr.shape), "data": arr.reshape(-1).tolist()}
              for name, arr in model.state_dict().items()}
    payload = {
        "schema_version": CHECKPOINT_SCHEMA,
        "kind": "dual-adversarial-autoencoder",
        "dim": model.dim,
        "seed": model.seed,
        "hyperparams": model.hyper.to_json(),
        "arrays": arrays,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(payload, sort_keys=True))
        fh.write("\n")


def load_checkpoint(path) -> DualAdversarialAutoencoder:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("schema_version") != CHECKPOINT_SCHEMA:
        raise ValueError(f"unsupported checkpoint schema: {payload.get('schema_version')}")
    model = DualAdversarialAutoencoder(
        payload["dim"], Hyperparams.from_json(payload["hyperparams"]), payload["seed"])
    arrays = {name: np.asarray(spec["data"], dtype=np.float64).reshape(spec["shape"])
              for name, spec in payload["arrays"].items()}
    model.load_state_dict(arrays)
    return model
