from __future__ import annotations

import hashlib
import logging
import os
import tempfile
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from depthlab.core import DEFAULT_CEILINGS, Ceilings
from depthlab.errors import ParseError, ValidationError
from depthlab.fst import TransducerSpec, enumerate_ilfsts, enumeration_validator, parse_fst, serialize_fst

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
CACHE_ENV_VAR = "DEPTHLAB_CACHE_DIR"
DEFAULT_CACHE_DIR = ".depthlab-cache"


@dataclass(frozen=True)
class CacheKey:
    k: int
    l_max: int
    version: int = FORMAT_VERSION

    @property
    def filename(self) -> str:
        return f"ilfst-k{self.k}-l{self.l_max}-v{self.version}.cache"


def _checksum(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


@dataclass(frozen=True)
class CacheEntry:
    """
    The enumerated IL transducers for one (k, l_max)

    Args:
        key (CacheKey): (k, l_max, format version)
        payload (bytes): Canonical serializations of the machines in enumeration order, blank-line separated
        checksum (str): sha256 of the payload
    """

    key: CacheKey
    payload: bytes
    checksum: str

    @classmethod
    def from_machines(cls, key: CacheKey, machines: Sequence[TransducerSpec]) -> CacheEntry:
        payload = b"\n".join(serialize_fst(m) for m in machines)
        return cls(key, payload, _checksum(payload))

    def verify(self) -> bool:
        return _checksum(self.payload) == self.checksum

    @cached_property
    def _parsed(self) -> Tuple[TransducerSpec, ...]:
        text = self.payload.decode("utf-8")
        return tuple(parse_fst(block) for block in text.split("\n\n") if block.strip())

    def machines(self) -> List[TransducerSpec]:
        """The machines in enumeration order, parsed once per entry"""
        return list(self._parsed)


class CacheSystem(ABC):
    def __init__(self):
        self.name = type(self).__name__

    @abstractmethod
    def lookup(self, key: CacheKey) -> Optional[CacheEntry]:
        """
        Returns the verified entry stored under key, or None on a miss

        A stored entry whose checksum does not verify counts as a miss.
        """

    @abstractmethod
    def store(self, entry: CacheEntry):
        ...


class Memory(CacheSystem):
    """Keeps entries for the life of the process"""

    def __init__(self):
        super().__init__()
        self.entries: Dict[CacheKey, CacheEntry] = {}

    def lookup(self, key: CacheKey) -> Optional[CacheEntry]:
        entry = self.entries.get(key)
        if entry is not None and not entry.verify():
            logger.warning("cache entry %s fails its checksum, regenerating", key.filename)
            return None
        return entry

    def store(self, entry: CacheEntry):
        self.entries[entry.key] = entry


class File(CacheSystem):
    """
    One file per key in a directory

    Each file opens with `# key: value` lines (format, states, maxout, checksum) followed by the payload.
    Stores go through a temporary file in the same directory and a rename, so readers see either
    the old file or the complete new one.

    Args:
        directory (Path): The cache directory, created if missing
    """

    def __init__(self, directory: Union[Path, str]):
        super().__init__()
        if not isinstance(directory, (Path, str)):
            raise ValueError("The cache directory must be a string or pathlib Path")
        self.directory = Path(directory).resolve()
        self.directory.mkdir(parents=True, exist_ok=True)

    def path(self, key: CacheKey) -> Path:
        return self.directory / key.filename

    def asset_exists(self, key: CacheKey) -> bool:
        return self.path(key).exists()

    def lookup(self, key: CacheKey) -> Optional[CacheEntry]:
        path = self.path(key)
        if not path.exists():
            logger.info("cache miss for %s", key.filename)
            return None
        entry = self._parse(key, path.read_bytes())
        if entry is None:
            logger.warning("cache entry %s is corrupt, regenerating", path)
            return None
        logger.info("cache hit for %s", key.filename)
        return entry

    @staticmethod
    def _parse(key: CacheKey, data: bytes) -> Optional[CacheEntry]:
        header: Dict[str, str] = {}
        rest = data
        while rest.startswith(b"#"):
            line, _, rest = rest.partition(b"\n")
            name, _, value = line[1:].decode("utf-8", "replace").partition(":")
            header[name.strip()] = value.strip()
        expected = {
            "format": str(key.version),
            "states": str(key.k),
            "maxout": str(key.l_max),
        }
        if any(header.get(name) != value for name, value in expected.items()):
            return None
        entry = CacheEntry(key, rest, header.get("checksum", ""))
        if not entry.verify():
            return None
        try:
            entry.machines()
        except (ParseError, ValidationError, UnicodeDecodeError):
            return None
        return entry

    def store(self, entry: CacheEntry):
        leading_comments = [
            f"format: {entry.key.version}",
            f"states: {entry.key.k}",
            f"maxout: {entry.key.l_max}",
            f"checksum: {entry.checksum}",
        ]
        content = "".join(f"# {comment}\n" for comment in leading_comments).encode("utf-8")
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".tmp-", suffix=".cache")
        try:
            with os.fdopen(fd, "wb") as f:
                f.write(content + entry.payload)
            os.replace(tmp, self.path(entry.key))
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        logger.info("cached %s", self.path(entry.key))


def cache_directory(environ: Mapping[str, str], explicit: Optional[str] = None) -> Path:
    """--cache wins over DEPTHLAB_CACHE_DIR, which wins over ./.depthlab-cache"""
    if explicit:
        return Path(explicit)
    return Path(environ.get(CACHE_ENV_VAR) or DEFAULT_CACHE_DIR)


def ilfst_list(
    k: int,
    l_max: int,
    cache: Optional[CacheSystem] = None,
    ceilings: Ceilings = DEFAULT_CEILINGS,
) -> List[TransducerSpec]:
    """enumerate_ilfsts(k, l_max) as a list, read from or written to the cache when one is given"""
    enumeration_validator(k, l_max, ceilings)
    if cache is None:
        return list(enumerate_ilfsts(k, l_max, ceilings))
    key = CacheKey(k, l_max)
    entry = cache.lookup(key)
    if entry is not None:
        return entry.machines()
    machines = list(enumerate_ilfsts(k, l_max, ceilings))
    logger.info("enumerated %d IL transducers for k=%d l_max=%d", len(machines), k, l_max)
    cache.store(CacheEntry.from_machines(key, machines))
    return machines
