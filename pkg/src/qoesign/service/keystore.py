"""Encrypted-at-rest storage for the user's key share.

One file per user under the service data directory. The share is the
user node's guarded secret: losing the file or the passphrase means the
distributed key must be regenerated. Backup and recovery are
deliberately out of scope here.
"""

from __future__ import annotations

import base64
import json
import os
import re
from pathlib import Path

from cryptography.fernet import Fernet, InvalidToken
from cryptography.hazmat.primitives.kdf.scrypt import Scrypt

from qoesign.errors import KeystoreError
from qoesign.protocol.keys import Holder, KeyShare

MAGIC = b"QOESIGN-KEYSTORE/v1\n"
SALT_BYTES = 16
# key files are named after the user id, so the id must be path-safe
_USER_ID = re.compile(r"^[a-zA-Z0-9._-]{1,64}$")


def _file_key(passphrase: str, salt: bytes) -> bytes:
    kdf = Scrypt(salt=salt, length=32, n=2**14, r=8, p=1)
    return base64.urlsafe_b64encode(kdf.derive(passphrase.encode()))


class Keystore:
    def __init__(self, data_dir: str | Path):
        self.root = Path(data_dir)

    def path_for(self, user_id: str) -> Path:
        if not _USER_ID.match(user_id):
            raise KeystoreError(f"user id {user_id!r} is not usable as a file name")
        return self.root / f"{user_id}.keyshare"

    def has_share(self, user_id: str) -> bool:
        return self.path_for(user_id).exists()

    def save_user_share(
        self, user_id: str, suite_id: str, share: KeyShare, passphrase: str
    ) -> Path:
        payload = json.dumps(
            {
                "suite_id": suite_id,
                "kind": share.holder.kind,
                "index": share.holder.index,
                "epoch": share.epoch,
                "secret": format(share.secret, "x"),
            }
        ).encode()
        salt = os.urandom(SALT_BYTES)
        token = Fernet(_file_key(passphrase, salt)).encrypt(payload)
        path = self.path_for(user_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(MAGIC + salt + token)
        return path

    def load_user_share(self, user_id: str, passphrase: str) -> tuple[str, KeyShare]:
        """Returns (suite_id the share was generated for, the share)."""
        path = self.path_for(user_id)
        try:
            blob = path.read_bytes()
        except OSError:
            raise KeystoreError(f"no stored share for user {user_id!r}") from None
        if not blob.startswith(MAGIC) or len(blob) <= len(MAGIC) + SALT_BYTES:
            raise KeystoreError(f"{path} is not a keystore file")
        salt = blob[len(MAGIC) : len(MAGIC) + SALT_BYTES]
        token = blob[len(MAGIC) + SALT_BYTES :]
        try:
            payload = Fernet(_file_key(passphrase, salt)).decrypt(token)
        except InvalidToken:
            raise KeystoreError("wrong passphrase or corrupted keystore file") from None
        try:
            doc = json.loads(payload)
            holder = Holder(kind=doc["kind"], index=doc["index"])
            share = KeyShare(
                holder=holder, secret=int(doc["secret"], 16), epoch=doc["epoch"]
            )
            return doc["suite_id"], share
        except (KeyError, ValueError, TypeError) as exc:
            raise KeystoreError(f"keystore payload is malformed: {exc}") from None
