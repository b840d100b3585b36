"""Stochastic subgradient descent for regularized empirical risk.

The objective is the empirical mean of a convex loss plus a strongly
convex regularizer.  Training starts at w = 0, samples one example index
uniformly (with replacement) per step, and returns the last iterate; a
"pass" is n steps, not an epoch shuffle.

For the Frobenius regularizer with step sizes satisfying eta_t * sigma <= 1
the iterates provably stay inside the ball ||w_t||_F <= L * kappa / sigma,
where L is the loss's certified max-norm Lipschitz constant and kappa the
largest input norm.  That bound is enforced as a runtime certificate on
every training run, not just under test.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core import LabeledExample, frobenius_norm
from .losses import LossSpec
from .regularizers import RegularizerSpec

_INDEX_CHUNK = 1 << 20
_CERT_TOL = 1e-9


class CertificateError(RuntimeError):
    """An optimizer invariant failed during a run."""


@dataclass(frozen=True)
class StepSchedule:
    """Step-size schedule eta_t for 1-based step counter t.

    ``theorem`` is eta_t = 1 / (t * sigma), the schedule the regret
    analysis assumes.  ``experiment`` is eta_t = 1 / (lam * t + 1), the
    gentler schedule used for learning-curve runs.
    """

    kind: str
    param: float

    def __post_init__(self):
        if self.kind not in ("theorem", "experiment"):
            raise ValueError(f"unknown schedule {self.kind!r}")
        if not self.param > 0.0:
            raise ValueError(f"schedule parameter must be positive, got {self.param}")

    @staticmethod
    def theorem(sigma: float) -> "StepSchedule":
        return StepSchedule("theorem", sigma)

    @staticmethod
    def experiment(lam: float) -> "StepSchedule":
        return StepSchedule("experiment", lam)

    def eta(self, t: int) -> float:
        if t < 1:
            raise ValueError(f"step counter is 1-based, got {t}")
        if self.kind == "theorem":
            return 1.0 / (t * self.param)
        return 1.0 / (self.param * t + 1.0)


@dataclass(frozen=True)
class TrainConfig:
    """Everything a training run depends on, seed included.

    ``record_every`` of None records only the final step.  ``eval_holdout``
    adds the objective on held-out data to every record.
    """

    loss: LossSpec
    reg: RegularizerSpec
    schedule: StepSchedule
    total_steps: int
    seed: int
    record_every: int | None = None
    eval_holdout: object = None

    def __post_init__(self):
        if self.total_steps < 1:
            raise ValueError(f"total_steps must be positive, got {self.total_steps}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        if self.record_every is not None and self.record_every < 1:
            raise ValueError(f"record_every must be positive, got {self.record_every}")


@dataclass
class RunRecord:
    """Snapshot of a run at one step.

    ``elapsed`` is wall-clock seconds since the run started; it is
    excluded from equality so record streams compare deterministically.
    """

    step: int
    empirical_objective: float
    holdout_objective: float | None
    iterate_frobenius_norm: float
    elapsed: float = field(default=0.0, compare=False)


def _examples_of(data) -> list[LabeledExample]:
    examples = list(data.examples) if hasattr(data, "examples") else list(data)
    if not examples:
        raise ValueError("training data must be nonempty")
    return examples


def _step(
    w: np.ndarray,
    z: LabeledExample,
    loss: LossSpec,
    reg: RegularizerSpec,
    eta: float,
) -> tuple[np.ndarray, np.ndarray]:
    """One update w - eta * (loss_subgrad + reg_grad); returns (w_next, grad)."""
    grad = reg.grad(w)
    coef = loss.coef(w, z)
    if z.x.nnz:
        grad[z.x.indices, :] += z.x.values[:, None] * coef[None, :]
    return w - eta * grad, grad


def sgd_step(
    w: np.ndarray,
    z: LabeledExample,
    loss: LossSpec,
    reg: RegularizerSpec,
    eta: float,
) -> np.ndarray:
    """Single subgradient step from w; the input array is not modified."""
    w = np.asarray(w, dtype=np.float64)
    w_next, _ = _step(w, z, loss, reg, eta)
    return w_next


def evaluate_objective(
    w: np.ndarray,
    data,
    loss: LossSpec,
    reg: RegularizerSpec,
) -> float:
    """Mean loss over the data plus the regularizer, in a fixed order."""
    examples = _examples_of(data)
    values = np.array([loss.value(w, z) for z in examples])
    return float(np.sum(values) / values.size + reg.value(w))


def evaluate_mean_loss(w: np.ndarray, data, loss: LossSpec) -> float:
    """Mean loss over the data without the regularization term."""
    examples = _examples_of(data)
    values = np.array([loss.value(w, z) for z in examples])
    return float(np.sum(values) / values.size)


def train(data, config: TrainConfig) -> tuple[np.ndarray, list[RunRecord]]:
    """Run SGD from w = 0 and return the last iterate with its records.

    Indices are drawn i.i.d. uniform from a seeded PCG64 generator, so a
    fixed config reproduces the run bit for bit.  Records are emitted
    every ``record_every`` steps and at the final step.
    """
    examples = _examples_of(data)
    n = len(examples)
    if hasattr(data, "d") and hasattr(data, "c"):
        d, c = data.d, data.c
    else:
        dims = {z.x.dim for z in examples}
        if len(dims) != 1:
            raise ValueError(f"examples disagree on input dimension: {sorted(dims)}")
        d = dims.pop()
        if config.loss.is_multilabel:
            c = max(z.label.size for z in examples if z.is_multilabel)
        else:
            c = max(2, max(int(z.label) for z in examples) + 1)

    loss, reg, schedule = config.loss, config.reg, config.schedule
    kappa = max(z.x.norm() for z in examples)
    record_every = config.record_every or config.total_steps

    # Iterate-norm certificate: valid whenever the Frobenius regularizer is
    # used with eta_1 * sigma <= 1 (both schedules qualify at their usual
    # parameters), since then ||w_{t+1}|| <= max(||w_t||, L*kappa/sigma).
    certify = reg.kind == "frobenius" and schedule.eta(1) * reg.sigma <= 1.0 + 1e-12
    norm_bound = loss.lipschitz_inf * kappa / reg.sigma + _CERT_TOL

    rng = np.random.Generator(np.random.PCG64(config.seed))
    w = np.zeros((d, c))
    records: list[RunRecord] = []
    started = time.perf_counter()

    t = 0
    remaining = config.total_steps
    while remaining > 0:
        block = min(remaining, _INDEX_CHUNK)
        indices = rng.integers(0, n, size=block)
        for i in indices:
            t += 1
            eta = schedule.eta(t)
            z = examples[int(i)]
            recording = t % record_every == 0 or t == config.total_steps
            w_next, grad = _step(w, z, loss, reg, eta)
            if recording and reg.kind == "frobenius":
                # Single-step contract from the subgradient norm bounds.
                step_norm = eta * frobenius_norm(grad)
                allowed = eta * (loss.lipschitz_inf * kappa + reg.sigma * frobenius_norm(w))
                if step_norm > allowed + _CERT_TOL:
                    raise CertificateError(
                        f"step {t} moved {step_norm:.6g}, above the bound {allowed:.6g}"
                    )
            w = w_next
            iterate_norm = frobenius_norm(w)
            if certify and iterate_norm > norm_bound:
                raise CertificateError(
                    f"iterate norm {iterate_norm:.6g} exceeded the certified bound "
                    f"{norm_bound:.6g} at step {t} (loss {loss.name}, sigma {reg.sigma})"
                )
            if recording:
                holdout = None
                if config.eval_holdout is not None:
                    holdout = evaluate_objective(w, config.eval_holdout, loss, reg)
                records.append(
                    RunRecord(
                        step=t,
                        empirical_objective=evaluate_objective(w, examples, loss, reg),
                        holdout_objective=holdout,
                        iterate_frobenius_norm=iterate_norm,
                        elapsed=time.perf_counter() - started,
                    )
                )
        remaining -= block
    return w, records
