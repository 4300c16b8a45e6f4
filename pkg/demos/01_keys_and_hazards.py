# %% [markdown]
# # Keys and hazards
#
# A key of length k spreads a stream over k consecutive destination ports.
# Here we build one, push a short stream through each hazard model and look
# at what the receiver gets to see: destination ports only.

# %%
import numpy as np

from kudp import HazardConfig, PortKey, apply_hazard, schedule_stream
from kudp.channel import make_rng, swap_marks, swap_order

key = PortKey.parse("59000:5")
stream = schedule_stream(key, [f"msg{i}".encode() for i in range(20)])
print("ports:", [p.dest_port for p in stream])

# %% [markdown]
# Loss drops each packet with the configured probability. The port sequence
# shows a gap wherever a packet vanished.

# %%
lossy = apply_hazard(stream, HazardConfig(loss_ratio=0.2, seed=3))
print("survivors:", lossy.ground_truth())
print("offsets:  ", [e.dest_port - key.base_port for e in lossy])

# %% [markdown]
# Swap marks packets and exchanges each mark with its successor; a mark
# right after another mark cancels it.

# %%
marks = swap_marks(20, 0.35, make_rng(3))
print("marks:", np.flatnonzero(marks).tolist())
print("order:", swap_order(marks))

# %% [markdown]
# Over many seeds the observed loss fraction clusters around the threshold.

# %%
fractions = np.array(
    [1 - len(apply_hazard(schedule_stream(key, [b""] * 800), HazardConfig(0.25, seed=s))) / 800 for s in range(200)]
)
print(f"mean {fractions.mean():.4f}, std {fractions.std():.4f}, "
      f"share within 3 points {np.mean(np.abs(fractions - 0.25) <= 0.03):.2f}")
