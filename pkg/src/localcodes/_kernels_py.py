"""Pure-NumPy training-step kernel.

Same contract as the compiled extension in ``_kernels.pyx``: one full
forward/backward pass over a batch plus an in-place parameter update.
Results agree with the compiled kernel to floating-point reassociation
error; they are not bit-identical across backends.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

NAME = "python"


def fused_train_step(X, T, W1, b1, W2, b2,
                     mW1, vW1, mb1, vb1, mW2, vW2, mb2, vb2,
                     mask, act_relu, loss_mse, use_adam,
                     lr, beta1, beta2, eps, bc1, bc2):
    """Forward, loss, backward, update. Returns the batch loss as a float.

    mask is a pre-scaled dropout mask over hidden units (or None); bc1/bc2
    are the Adam bias corrections 1-beta1^t and 1-beta2^t for the current
    step.
    """
    n = X.shape[0]
    inv_n_out = 1.0 / (n * T.shape[1])

    z1 = X @ W1
    z1 += b1
    a1 = np.maximum(z1, 0) if act_relu else expit(z1)
    h = a1 * mask if mask is not None else a1
    z2 = h @ W2
    z2 += b2
    y = expit(z2)

    if loss_mse:
        diff = y - T
        loss = float(np.mean(np.square(diff), dtype=np.float64))
        dz2 = (2.0 * inv_n_out) * diff * y * (1.0 - y)
    else:
        # cross-entropy evaluated from logits: softplus(z) - t*z
        loss = float(np.mean(np.logaddexp(0.0, z2) - T * z2, dtype=np.float64))
        dz2 = inv_n_out * (y - T)

    gW2 = h.T @ dz2
    gb2 = dz2.sum(axis=0)
    dh = dz2 @ W2.T
    if mask is not None:
        dh *= mask
    dz1 = dh * (z1 > 0) if act_relu else dh * (a1 * (1.0 - a1))
    gW1 = X.T @ dz1
    gb1 = dz1.sum(axis=0)

    params = ((W1, gW1, mW1, vW1), (b1, gb1, mb1, vb1),
              (W2, gW2, mW2, vW2), (b2, gb2, mb2, vb2))
    if use_adam:
        for p, g, m, v in params:
            m *= beta1
            m += (1.0 - beta1) * g
            v *= beta2
            v += (1.0 - beta2) * g * g
            p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
    else:
        for p, g, _m, _v in params:
            p -= lr * g
    return loss
