# %% [markdown]
# # Watching the reconstruction
#
# The trace hook prints one line per election: the position, how many
# retained candidate lists covered it, the tallies, and the winner.
# Packets are named by arrival id (``#2`` is the third datagram received),
# since that is all the receiver knows.

# %%
from kudp import ArrivalSequence, PortKey, reconstruct, schedule_stream

key = PortKey(59000, 5)
packets = schedule_stream(key, [bytes([i]) for i in range(10)])


def show(order):
    arrivals = ArrivalSequence.from_packets([packets[i] for i in order])
    out = reconstruct(key, arrivals, trace=print)
    print("->", out.ground_truth(), "\n")


# %% [markdown]
# An adjacent swap: packet 3 overtakes packet 2. Position 2 is closed as
# Missing first; packet 2 then arrives right behind its successor, is held as
# a hidden candidate and lands in its slot when the stream is drained.

# %%
show([0, 1, 3, 2, 4, 5, 6, 7, 8, 9])

# %% [markdown]
# A single loss leaves an empty slot in every candidate list.

# %%
show([0, 1, 3, 4, 5, 6, 7, 8, 9])

# %% [markdown]
# Losing k packets in a row leaves the port pattern unchanged, so the later
# cycle slides back into the gap. No port-only receiver can see this.

# %%
show([0, 1, 2, 3, 4])
show([5, 6, 7, 8, 9])
