"""Signing, verification, and vote path signatures.

The default scheme is a deterministic keyed hash: a signature is
sha256(private key || message).  Verification recomputes it through a
registry that holds every party's private key, so this is a trusted
verifier MAC, not real asymmetric cryptography; it is reproducible and
fast, which is what a protocol simulation needs.  Any scheme exposing
keypair/sign/verify can be slotted in behind the same interface.

Message encoding is canonical and bit-exact: a message is a tag followed
by length-prefixed UTF-8 fields in declaration order (4-byte big-endian
lengths), so independent implementations can interoperate on traces.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple


class CryptoError(ValueError):
    pass


def _field(part: str) -> bytes:
    data = part.encode("utf-8")
    return len(data).to_bytes(4, "big") + data


def encode_message(tag: str, *parts: str) -> bytes:
    return tag.encode("ascii") + b"".join(_field(p) for p in parts)


def digest_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass(frozen=True)
class KeyPair:
    """A party's signing handle; the private half stays with its owner."""

    party: str
    public: str
    private: str


class SignatureScheme:
    """Keyed-hash signatures with a global public-key registry."""

    def __init__(self, seed: str = "keys"):
        self._seed = seed
        self._private: dict[str, str] = {}
        self._public: dict[str, str] = {}

    def keypair(self, party: str) -> KeyPair:
        if party not in self._private:
            priv = digest_hex(encode_message("PRIV", self._seed, party))
            self._private[party] = priv
            self._public[party] = digest_hex(encode_message("PUB", priv))
        return KeyPair(party, self._public[party], self._private[party])

    def public_key(self, party: str) -> str:
        return self.keypair(party).public

    def sign(self, keypair: KeyPair, message: bytes) -> str:
        return digest_hex(bytes.fromhex(keypair.private) + message)

    def verify(self, party: str, message: bytes, signature: str) -> bool:
        # Key derivation is deterministic, so verification can materialize
        # the registry entry on demand (public keys are known to all).
        priv = self.keypair(party).private
        return digest_hex(bytes.fromhex(priv) + message) == signature


@dataclass(frozen=True)
class Vote:
    """A commit vote: deal, voter, and a single-use nonce against replay."""

    deal: str
    voter: str
    nonce: str


@dataclass(frozen=True)
class PathSignature:
    """A vote wrapped in an ordered chain of signatures.

    links[0] is the voter's own signature over the vote; each later link
    signs the vote plus every link before it.
    """

    vote: Vote
    links: Tuple[Tuple[str, str], ...]  # (signer, signature)

    @property
    def path_len(self) -> int:
        return len(self.links)

    def signers(self) -> Tuple[str, ...]:
        return tuple(s for s, _ in self.links)

    def to_json(self) -> dict:
        return {
            "vote": {"deal": self.vote.deal, "voter": self.vote.voter, "nonce": self.vote.nonce},
            "links": [[s, sig] for s, sig in self.links],
        }

    @classmethod
    def from_json(cls, data: dict) -> "PathSignature":
        v = data["vote"]
        return cls(
            Vote(v["deal"], v["voter"], v["nonce"]),
            tuple((s, sig) for s, sig in data["links"]),
        )


def vote_message(vote: Vote) -> bytes:
    return encode_message("VOTE", vote.deal, vote.voter, vote.nonce)


def link_message(vote: Vote, prior_links: Sequence[Tuple[str, str]]) -> bytes:
    """What the next signer attests to: the vote plus the existing chain."""
    msg = vote_message(vote)
    for signer, sig in prior_links:
        msg += _field(signer) + _field(sig)
    return msg


def direct_vote(scheme: SignatureScheme, keypair: KeyPair, vote: Vote) -> PathSignature:
    if keypair.party != vote.voter:
        raise CryptoError("a direct vote must be signed by its voter")
    sig = scheme.sign(keypair, link_message(vote, ()))
    return PathSignature(vote, ((keypair.party, sig),))


def extend_path(scheme: SignatureScheme, keypair: KeyPair, path: PathSignature) -> PathSignature:
    if keypair.party in path.signers():
        raise CryptoError(f"{keypair.party} already signed this path")
    sig = scheme.sign(keypair, link_message(path.vote, path.links))
    return PathSignature(path.vote, path.links + ((keypair.party, sig),))


def verify_path(scheme: SignatureScheme, path: PathSignature, plist: Iterable[str]) -> bool:
    """Check structure and every signature; False on any defect."""
    members = set(plist)
    signers = path.signers()
    if not signers:
        return False
    if signers[0] != path.vote.voter:
        return False
    if len(set(signers)) != len(signers):
        return False
    if not set(signers) <= members or path.vote.voter not in members:
        return False
    for i, (signer, sig) in enumerate(path.links):
        if not scheme.verify(signer, link_message(path.vote, path.links[:i]), sig):
            return False
    return True


def certificate_message(deal: str, start_ref: str, status: str, epoch: int) -> bytes:
    return encode_message("CERT", deal, start_ref, status, str(epoch))


def validator_set_message(epoch: int, members: Sequence[str]) -> bytes:
    return encode_message("VSET", str(epoch), *sorted(members))
