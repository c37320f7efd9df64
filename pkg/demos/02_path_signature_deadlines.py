#!/usr/bin/env python3
# Why vote deadlines scale with the forwarding path.  A single fixed
# deadline per party per asset is inconsistent: whichever escrow a party
# votes at last, the forward to the other escrow may land after its fixed
# deadline.  Scaling the deadline by the number of signatures on the vote
# (its path) makes the forwarding arithmetic close.

from dealsim.crypto import SignatureScheme, Vote, direct_vote, extend_path, verify_path
from dealsim.timelock import vote_deadline

scheme = SignatureScheme("demo")
plist = ("alice", "bob", "carol")
T0, DELTA = 100, 10

# Bob votes; the vote is one signature long.
vote = Vote("demo-deal", "bob", "nonce-0")
path1 = direct_vote(scheme, scheme.keypair("bob"), vote)
print("direct vote signers:", path1.signers(), "path length", path1.path_len)

# Carol observed it on the chain paying her and relays it to the chain
# paying Bob, signing over the whole prior chain.
path2 = extend_path(scheme, scheme.keypair("carol"), path1)
print("forwarded once:     ", path2.signers(), "path length", path2.path_len)

path3 = extend_path(scheme, scheme.keypair("alice"), path2)
print("forwarded twice:    ", path3.signers(), "path length", path3.path_len)

for path in (path1, path2, path3):
    deadline = vote_deadline(T0, DELTA, path.path_len, len(plist), naive=False)
    print(
        f"  |p|={path.path_len}: accepted strictly before tick {deadline}"
        f"  (t0 + {path.path_len} * delta)"
    )

# The acceptance window grows exactly as fast as worst-case observation
# latency can delay a relay: a vote accepted at tick tau < t0 + k*delta is
# observable by tick tau + delta and re-submittable with k+1 signatures,
# still inside t0 + (k+1)*delta.
tau = T0 + 2 * DELTA - 1
print(f"vote accepted at {tau} < {T0 + 2 * DELTA};", end=" ")
print(f"relay lands by {tau + DELTA} < {T0 + 3 * DELTA}")

# Tampering never helps: reordering or swapping any link breaks the chain.
print("valid chain verifies:", verify_path(scheme, path3, plist))
swapped = type(path3)(path3.vote, (path3.links[1], path3.links[0], path3.links[2]))
print("reordered links verify:", verify_path(scheme, swapped, plist))
