"""A walk through the reverse-mode autodiff engine.

Builds a tiny computation on the tape, runs the reverse sweep, and checks
the result against central finite differences — the same oracle the test
suite uses for every primitive.
"""

import numpy as np

from revdict import autodiff as ad
from revdict.autodiff import Tape, Tensor

rng = np.random.default_rng(0)

# --- a two-layer scalar-output network, recorded on the tape ---------------

W1 = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
W2 = Tensor(rng.normal(size=(4, 1)), requires_grad=True)
x = Tensor(rng.normal(size=(1, 3)))

def forward():
    h = ad.tanh(ad.matmul(x, W1))
    return ad.sum_reduce(ad.matmul(h, W2))

with Tape() as tape:
    loss = forward()
    grads = ad.backward(tape, loss, {"W1": W1, "W2": W2})

print(f"loss = {loss.item():.6f}")
print(f"grad shapes: W1 {grads['W1'].shape}, W2 {grads['W2'].shape}")

# --- verify one entry against finite differences ---------------------------

eps = 1e-6
orig = W1.data[1, 2]
W1.data[1, 2] = orig + eps
up = forward().item()
W1.data[1, 2] = orig - eps
down = forward().item()
W1.data[1, 2] = orig

numeric = (up - down) / (2 * eps)
print(f"tape grad W1[1,2]    = {grads['W1'][1, 2]:+.8f}")
print(f"numeric grad W1[1,2] = {numeric:+.8f}")
assert abs(grads["W1"][1, 2] - numeric) < 1e-6

# --- a few optimizer steps shrink the loss ---------------------------------

params = {"W1": W1, "W2": W2}
opt = ad.Optimizer(params, kind="adam", lr=0.05)
history = []
for _ in range(20):
    with Tape() as tape:
        loss = ad.hadamard(forward(), forward())  # loss^2 >= 0
        grads = ad.backward(tape, loss, params)
    opt.step(grads)
    history.append(loss.item())

print(f"squared loss: {history[0]:.4f} -> {history[-1]:.4f}")
assert history[-1] < history[0]
print("ok")
