"""Non-speculative load/store queue: memory instructions issue strictly in lsid order."""

from __future__ import annotations

from typing import Optional

from .errors import LSQOrderViolation


class LoadStoreQueue:
    def __init__(self):
        self.reset({})

    def reset(self, lsids: dict[int, int]) -> None:
        """Start a block execution; ``lsids`` maps iid -> lsid."""
        self.lsid_of = dict(lsids)
        self.iid_of = {l: i for i, l in self.lsid_of.items()}
        self.next_lsid = 0
        self.parked: set[int] = set()
        self.released: set[int] = set()
        self.trace: list[tuple[int, int, str, int]] = []   # (lsid, iid, "LD"/"ST", addr)

    @property
    def head(self) -> Optional[int]:
        return self.iid_of.get(self.next_lsid)

    def issuable(self, iid: int) -> bool:
        return self.lsid_of.get(iid) == self.next_lsid

    def note_ready(self, iid: int) -> None:
        """A memory instruction has all its inputs (incremental scheduler path)."""
        self.parked.add(iid)

    def release(self) -> Optional[int]:
        """The head instruction, once ready and not yet handed out."""
        iid = self.head
        if iid is not None and iid in self.parked and iid not in self.released:
            self.released.add(iid)
            return iid
        return None

    def issued(self, iid: int) -> None:
        if not self.issuable(iid):
            raise LSQOrderViolation(
                f"memory iid {iid} (lsid {self.lsid_of.get(iid)}) issued while lsid {self.next_lsid} is next")
        self.next_lsid += 1

    def access(self, iid: int, kind: str, addr: int) -> None:
        lsid = self.lsid_of[iid]
        if self.trace and self.trace[-1][0] >= lsid:
            raise LSQOrderViolation(f"lsid {lsid} accessed memory after lsid {self.trace[-1][0]}")
        self.trace.append((lsid, iid, kind, addr))

    @property
    def awaiting_release(self) -> bool:
        """The head is ready but still parked (released on the next clock edge)."""
        iid = self.head
        return iid is not None and iid in self.parked and iid not in self.released
