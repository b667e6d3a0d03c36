"""End-to-end training of the weight predictor.

One step runs the differentiable path (cost volume -> predictor ->
weight maps -> filtered volume -> cross-entropy loss), backpropagates
through the recurrent filter and the conv stack, and applies an ADAM
update.  The cost volume itself has no trainable parameters; the blend
coefficient and the weight-mapping scale stay fixed.
"""

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from .costvol import build_cost_volume
from .dtgrad import (energy_to_weights_backward, filter_volume_backward,
                     record_filter_volume)
from .dtfilter import energy_to_weights
from .imgio import DisparityMap, StereoPair, load_disparity_kitti
from .matcher import PipelineConfig, softmax_xent_loss
from .predictor import (PredictorParams, init_params, predictor_backward,
                        predictor_forward, save_checkpoint)


@dataclass
class AdamState:
    m: list
    v: list
    step: int = 0
    lr: float = 2.5e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def init(cls, params: PredictorParams, lr=2.5e-5, beta1=0.9, beta2=0.999, eps=1e-8):
        tensors = params.tensors()
        return cls(m=[np.zeros_like(t) for t in tensors],
                   v=[np.zeros_like(t) for t in tensors],
                   lr=lr, beta1=beta1, beta2=beta2, eps=eps)


@dataclass
class TrainConfig:
    iterations: int
    lr: float = 2.5e-5
    seed: int = 0
    checkpoint_every: int = 100
    data_dir: str | None = None
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")


def adam_step(params: PredictorParams, grads, state: AdamState):
    """Standard bias-corrected ADAM update, applied in place."""
    ptensors = params.tensors()
    gtensors = grads.tensors()
    if len(ptensors) != len(gtensors) or len(ptensors) != len(state.m):
        raise ValueError("parameter/gradient/state tensor count mismatch")
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for p, g, m, v in zip(ptensors, gtensors, state.m, state.v):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


def train_step(pair: StereoPair, gt: DisparityMap, params: PredictorParams,
               state: AdamState, cfg: PipelineConfig):
    """One forward/backward/update cycle; returns the step's loss."""
    vol = build_cost_volume(pair, cfg.cost, dtype=np.float64)
    e_hor, e_vert, ptape = predictor_forward(pair.left, params)
    maps = energy_to_weights(e_hor, e_vert, cfg.dt.sigma)
    filtered, ftape = record_filter_volume(vol, maps)
    report = softmax_xent_loss(filtered, gt, scale=cfg.loss_scale)
    _, dw_hor, dw_vert = filter_volume_backward(ftape, report.grad)
    de_hor = energy_to_weights_backward(e_hor, cfg.dt.sigma, dw_hor)
    de_vert = energy_to_weights_backward(e_vert, cfg.dt.sigma, dw_vert)
    grads = predictor_backward(ptape, de_hor, de_vert)
    adam_step(params, grads, state)
    return report.loss


def load_dataset(data_dir):
    """Load samples from the left/NNN.png, right/NNN.png, disp/NNN.png layout."""
    left_dir = os.path.join(data_dir, "left")
    names = sorted(f for f in os.listdir(left_dir) if f.endswith(".png"))
    if not names:
        raise ValueError(f"no samples under {data_dir}")
    samples = []
    for name in names:
        pair = StereoPair.load(os.path.join(data_dir, "left", name),
                               os.path.join(data_dir, "right", name))
        gt = load_disparity_kitti(os.path.join(data_dir, "disp", name))
        samples.append((pair, gt))
    return samples


def write_loss_curve(curve, path):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "loss"])
        for step, loss in curve:
            writer.writerow([step, repr(loss)])


def train(dataset, cfg: TrainConfig, ckpt_path=None, curve_path=None):
    """Seeded training loop over (pair, gt) samples.

    Samples are shuffled once per epoch from a generator seeded by
    cfg.seed, so runs are bit-reproducible.  Checkpoints are written
    every cfg.checkpoint_every steps (and at the end) when ckpt_path
    is given.  Returns (params, state, curve).
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    rng = np.random.default_rng(cfg.seed)
    params = init_params(cfg.seed)
    state = AdamState.init(params, lr=cfg.lr)
    curve = []
    step = 0
    while step < cfg.iterations:
        for idx in rng.permutation(len(dataset)):
            step += 1
            pair, gt = dataset[idx]
            loss = train_step(pair, gt, params, state, cfg.pipeline)
            curve.append((step, loss))
            if ckpt_path and cfg.checkpoint_every and step % cfg.checkpoint_every == 0:
                save_checkpoint(params, ckpt_path)
            if step >= cfg.iterations:
                break
    if ckpt_path:
        save_checkpoint(params, ckpt_path)
    if curve_path:
        write_loss_curve(curve, curve_path)
    return params, state, curve
