# %% [markdown]
# # A real transfer over loopback
#
# The receiver binds every port of the key; the sender uses one source
# port. Test mode prefixes each datagram with its index so the receiver can
# score itself. The shim drops every datagram bound for port offset 2.

# %%
import threading

from kudp import PortKey
from kudp.transport import HazardShim, Receiver, TransferConfig, send_stream

key = PortKey(47200, 5)
cfg = TransferConfig("127.0.0.1", key, idle_timeout=0.5, test_mode=True,
                     listen_host="127.0.0.1", expected_count=20)
payloads = [f"frame {i:02d}".encode() for i in range(20)]

# %%
result = {}
with Receiver(cfg) as rx:
    worker = threading.Thread(target=lambda: result.setdefault("r", rx.run()))
    worker.start()
    report = send_stream(cfg, payloads, HazardShim(drop_offsets=frozenset({2})))
    worker.join()

r = result["r"]
print(f"sent {report.count}, shim dropped {report.dropped_by_shim}")
print("Missing at", r.stream.missing_positions)
print("efficiency", r.metrics.efficiency)
