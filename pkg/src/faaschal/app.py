"""APP scheduling policies: model, synthesis from localities, text format.

An APP script maps each tag (here: a function name) to an ordered list of
blocks.  A block names the worker group the function may run on (or ``*``
for any worker) and an affinity list: ``b`` requires a running ``b`` on
the worker, ``!c`` forbids one.  The scheduler tries blocks in order.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

from .deployment import Constraints, Topology
from .locality import LocalitySet


class AppError(ValueError):
    def __init__(self, message: str, line: int | None = None) -> None:
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.message = message
        self.line = line


class UnreachableService(Exception):
    def __init__(self, fn: str, missing: list[tuple[str, str]]) -> None:
        pairs = ", ".join(f"({s}, {g})" for s, g in missing)
        super().__init__(f"no worker group reaches every data store of {fn!r}; missing {pairs or 'all groups'}")
        self.fn = fn
        self.missing = missing


class Polarity(str, enum.Enum):
    AFFINE = "Affine"
    ANTI_AFFINE = "AntiAffine"


class _Wildcard:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "WILDCARD"

    def __str__(self) -> str:
        return "*"

    def __reduce__(self):
        return (_Wildcard, ())


WILDCARD = _Wildcard()


@dataclass(frozen=True)
class Affinity:
    tag: str
    polarity: Polarity = Polarity.AFFINE

    def __str__(self) -> str:
        return self.tag if self.polarity is Polarity.AFFINE else f"!{self.tag}"


@dataclass(frozen=True)
class Block:
    workers: str | _Wildcard
    affinity: tuple[Affinity, ...] = ()

    @property
    def affine(self) -> list[str]:
        return [a.tag for a in self.affinity if a.polarity is Polarity.AFFINE]

    @property
    def anti_affine(self) -> list[str]:
        return [a.tag for a in self.affinity if a.polarity is Polarity.ANTI_AFFINE]


@dataclass(frozen=True)
class AppScript:
    entries: tuple[tuple[str, tuple[Block, ...]], ...] = ()

    def blocks(self, tag: str) -> tuple[Block, ...]:
        for t, blocks in self.entries:
            if t == tag:
                return blocks
        raise KeyError(tag)

    @property
    def tags(self) -> list[str]:
        return [t for t, _ in self.entries]


# -- synthesis ----------------------------------------------------------------


def candidate_groups(fn: str, loc: LocalitySet, topo: Topology) -> list[str | _Wildcard] | _Wildcard:
    """Groups ``fn`` may run on, best first.

    Groups must reach every service ``fn`` reads or writes; they are ranked
    by total speed to those services, then by total speed to the media of
    ``fn``'s call localities, then by name.  A function with no data
    locality gets ``WILDCARD`` when no group is better than another for its
    media, else the ranked groups followed by ``WILDCARD``.
    """
    services = loc.services_of(fn)
    media = loc.media_of(fn)
    groups = topo.groups

    def media_score(g: str) -> float:
        return sum(topo.speed(m, g) or 0 for m in media)

    if services:
        ok = [g for g in groups if all(topo.reaches(s, g) for s in services)]
        if not ok:
            missing = [(s, g) for g in groups for s in services if not topo.reaches(s, g)]
            raise UnreachableService(fn, missing)
        return sorted(
            ok, key=lambda g: (-sum(topo.speed(s, g) for s in services), -media_score(g), g)
        )
    if len({media_score(g) for g in groups}) <= 1:
        return WILDCARD
    return sorted(groups, key=lambda g: (-media_score(g), g)) + [WILDCARD]


def affinity_sets(fn: str, loc: LocalitySet, cons: Constraints) -> tuple[list[str], list[str]]:
    """Return ``(positives, negatives)`` for ``fn``.

    User anti-affinity constraints win over code locality.
    """
    negatives = cons.partners(fn)
    positives = []
    if loc.services_of(fn) and not cons.contains(fn, fn):
        positives.append(fn)
    positives += [p for p in loc.code_partners(fn) if not cons.contains(fn, p)]
    return positives, negatives


def synthesize(loc: LocalitySet, topo: Topology, cons: Constraints, fn_order) -> AppScript:
    entries = []
    for fn in fn_order:
        groups = candidate_groups(fn, loc, topo)
        if groups is WILDCARD:
            groups = [WILDCARD]
        positives, negatives = affinity_sets(fn, loc, cons)
        anti = tuple(Affinity(n, Polarity.ANTI_AFFINE) for n in negatives)
        blocks = []
        if positives:
            pos = tuple(Affinity(p) for p in positives)
            blocks += [Block(g, pos + anti) for g in groups]
        blocks += [Block(g, anti) for g in groups]
        entries.append((fn, tuple(blocks)))
    return AppScript(tuple(entries))


# -- text format ----------------------------------------------------------------

_TAG = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*:$")
_ITEM = re.compile(r"^-\s+([A-Za-z_-]+)\s*:\s*(.*)$")
_KEY = re.compile(r"^([A-Za-z_-]+)\s*:\s*(.*)$")
_AFF = re.compile(r"^(!?)([A-Za-z_][A-Za-z0-9_]*)$")
_LABEL = re.compile(r"^[A-Za-z_][A-Za-z0-9_.-]*$")


def emit_app(script: AppScript) -> str:
    lines = []
    for tag, blocks in script.entries:
        lines.append(f"{tag}:")
        for block in blocks:
            lines.append(f"  - workers: {block.workers}")
            if block.affinity:
                lines.append(f"    affinity: {', '.join(str(a) for a in block.affinity)}")
    return "".join(line + "\n" for line in lines)


def _parse_affinity(value: str, lineno: int) -> tuple[Affinity, ...]:
    if not value.strip():
        return ()
    out = []
    seen = set()
    for token in value.split(","):
        m = _AFF.match(token.strip())
        if not m:
            raise AppError(f"malformed affinity token {token.strip()!r}", lineno)
        tag = m.group(2)
        if tag in seen:
            raise AppError(f"{tag!r} appears twice in one affinity list", lineno)
        seen.add(tag)
        out.append(Affinity(tag, Polarity.ANTI_AFFINE if m.group(1) else Polarity.AFFINE))
    return tuple(out)


def parse_app(text: str) -> AppScript:
    entries: list[tuple[str, list[dict]]] = []
    tags = set()
    current: dict | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.strip()
        if not line[0].isspace():
            m = _TAG.match(stripped)
            if not m:
                raise AppError(f"expected '<tag>:', got {stripped!r}", lineno)
            tag = m.group(1)
            if tag in tags:
                raise AppError(f"duplicate tag {tag!r}", lineno)
            tags.add(tag)
            entries.append((tag, []))
            current = None
            continue
        if not entries:
            raise AppError("block before any tag", lineno)
        m = _ITEM.match(stripped)
        if m:
            current = {"_line": lineno}
            entries[-1][1].append(current)
            key, value = m.groups()
        else:
            m = _KEY.match(stripped)
            if not m or current is None:
                raise AppError(f"malformed line {stripped!r}", lineno)
            key, value = m.groups()
        if key in current:
            raise AppError(f"duplicate key {key!r} in block", lineno)
        if key == "workers":
            value = value.strip()
            if value != "*" and not _LABEL.match(value):
                raise AppError(f"malformed workers label {value!r}", lineno)
            current[key] = WILDCARD if value == "*" else value
        elif key == "affinity":
            current[key] = _parse_affinity(value, lineno)
        else:
            raise AppError(f"unsupported key {key!r}", lineno)

    out = []
    for tag, blocks in entries:
        if not blocks:
            raise AppError(f"tag {tag!r} has no blocks")
        parsed = []
        for b in blocks:
            if "workers" not in b:
                raise AppError("block is missing 'workers'", b["_line"])
            parsed.append(Block(b["workers"], b.get("affinity", ())))
        out.append((tag, tuple(parsed)))
    return AppScript(tuple(out))
