"""Ranking-oriented anomaly detection for boolean process traces.

A dual adversarial autoencoder with a latent attention gate scores records
by reconstruction error; an active-learning loop queries an oracle about the
records nearest the percentile threshold, densifies the confirmed-normal
pool with GAN-generated rows, and tracks ranking quality by nDCG.
"""

from .active import (ALConfig, ActiveLearningState, GroundTruthOracle,
                     IterationRecord, OracleLabel, OracleQuery, OracleSuspended,
                     compute_threshold, gaussian_smooth, resume_active_learning,
                     run_active_learning, select_uncertain)
from .augment import (GanConfig, GanModel, discriminator_step_loss,
                      generator_step_loss, sample_synthetic, train_gan)
from .data import (BooleanDataset, DataFormatError, DataIntegrityError,
                   GroundTruth, Splits, SynthConfig, generate_synthetic,
                   load_csv, load_ground_truth, make_splits, write_csv,
                   write_ground_truth)
from .metrics import (MetricsReport, RankedList, avf_scores, dcg, ndcg,
                      rank_by_score, relative_improvement)
from .model import (DualAdversarialAutoencoder, Hyperparams, LatentAttention,
                    adversarial_loss, anomaly_score, anomaly_scores,
                    attention_apply, classify, combined_reconstruction,
                    discriminator_loss, fit, load_checkpoint, reconstruction_loss,
                    save_checkpoint, score_dataset, total_loss)
from .service import HumanOracle, RunBoard, make_server, serve_in_thread

__version__ = "0.1.0"
