"""
First-order driver shared by every solver.

Wraps torch.optim.Adam with a monotone acceptance rule: a step that raises the
objective is undone (parameters, gradients and Adam moments) and the step size
is multiplied by `backoff`; accepted steps let it grow back. Learning rates
follow a cosine decay when enabled.
"""
import copy
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import torch

from graspalign.core.logging import logger


@dataclass
class ParamGroup:
    params: List[torch.Tensor]
    lr: float
    name: str = ""


@dataclass
class OptimResult:
    loss: float
    iterations: int
    converged: bool
    accepted: int = 0
    rejected: int = 0
    history: List[float] = field(default_factory=list)


def run_adam(
    groups: Sequence[ParamGroup],
    objective: Callable[[], torch.Tensor],
    max_iters: int,
    backoff: float = 0.5,
    growth: float = 1.1,
    min_step: float = 1e-9,
    cosine_decay: bool = True,
    converge_tol: float = 1e-9,
    patience: int = 50,
    post_step: Optional[Callable[[], None]] = None,
    log_every: int = 100,
    label: str = "adam",
) -> OptimResult:
    """
    Minimize `objective` over the tensors in `groups` in place.

    Args:
        groups: Parameter groups with their base learning rates
        objective: Closure returning a scalar loss tensor
        max_iters: Iteration budget (0 returns the initial point)
        backoff: Step-size factor applied after a rejected step
        growth: Step-size factor applied after an accepted step (capped at 1)
        min_step: Stop once the step-size scale drops below this
        cosine_decay: Anneal learning rates to zero over max_iters
        converge_tol: Stop when the loss is below this, or when the relative
            improvement over `patience` iterations is below it
        patience: Window for the plateau test
        post_step: Called after every optimizer step (re-projection hooks)
        log_every: Debug log period
        label: Name used in log lines

    Returns:
        OptimResult; the parameters hold the final (and best) iterate
    """
    params = [p for g in groups for p in g.params]
    optimizer = torch.optim.Adam(
        [{"params": g.params, "lr": g.lr} for g in groups]
    )
    base_lrs = [g.lr for g in groups]

    optimizer.zero_grad()
    loss = objective()
    if not torch.isfinite(loss):
        logger.warning(f"{label}: non-finite loss at the initial point")
        return OptimResult(loss=float("inf"), iterations=0, converged=False)
    loss.backward()
    current = float(loss)
    history = [current]
    scale = 1.0
    accepted = rejected = 0
    converged = False
    it = 0

    for it in range(1, max_iters + 1):
        if current <= converge_tol:
            converged = True
            break
        decay = 0.5 * (1.0 + math.cos(math.pi * (it - 1) / max_iters)) if cosine_decay else 1.0
        for group, base in zip(optimizer.param_groups, base_lrs):
            group["lr"] = base * scale * max(decay, 1e-3)

        saved_params = [p.detach().clone() for p in params]
        saved_grads = [None if p.grad is None else p.grad.detach().clone() for p in params]
        saved_state = copy.deepcopy(optimizer.state_dict())

        optimizer.step()
        if post_step is not None:
            with torch.no_grad():
                post_step()

        optimizer.zero_grad()
        trial = objective()
        trial_value = float(trial)
        if not math.isfinite(trial_value) or trial_value > current:
            with torch.no_grad():
                for p, saved, grad in zip(params, saved_params, saved_grads):
                    p.copy_(saved)
                    p.grad = grad
            optimizer.load_state_dict(saved_state)
            scale *= backoff
            rejected += 1
            if scale < min_step:
                logger.debug(f"{label}: step scale {scale:.3g} below {min_step:g}; stopping at iteration {it}")
                converged = True
                break
            continue

        trial.backward()
        current = trial_value
        accepted += 1
        scale = min(1.0, scale * growth)
        history.append(current)
        if it % log_every == 0:
            logger.debug(f"{label}: iteration {it} loss {current:.6g} scale {scale:.3g}")
        if len(history) > patience:
            old = history[-patience - 1]
            if old - current <= converge_tol * max(abs(old), 1e-12):
                converged = True
                break

    if rejected > max(10, accepted):
        logger.warning(f"{label}: {rejected} rejected steps against {accepted} accepted")
    optimizer.zero_grad()
    return OptimResult(
        loss=current,
        iterations=it,
        converged=converged,
        accepted=accepted,
        rejected=rejected,
        history=history,
    )
