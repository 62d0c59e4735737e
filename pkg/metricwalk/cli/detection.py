"""
metricwalk Task Format Detection

Zero-config detection of evaluation task files: Google analogy lists,
SAT question blocks, or the tab-separated series/classification format.
"""

import re
from dataclasses import dataclass
from pathlib import Path

from metricwalk.core.schemas import FormatError

_SAT_ANSWER = re.compile(r"^ans\s+\d+\s*$")
_PEEK_LINES = 200


@dataclass
class TaskFileInfo:
    """Auto-detected task file layout."""
    format: str
    lines_checked: int


def detect_task_format(path: Path) -> TaskFileInfo:
    """
    Inspect the head of a task file and name its reader.

    Tab-separated lines starting with seq/cls win first, then a SAT
    'ans k' line, then Google section headers or four-word lines.
    """
    head = []
    opener = Path(path)
    if opener.suffix == ".gz":
        import gzip
        handle = gzip.open(opener, "rt", encoding="utf-8")
    else:
        handle = open(opener, encoding="utf-8")
    with handle as f:
        for raw in f:
            line = raw.strip()
            if line:
                head.append(line)
            if len(head) >= _PEEK_LINES:
                break

    if not head:
        raise FormatError(f"{path}: empty task file")

    # 1. TSV series / classification
    if any(line.split("\t", 1)[0] in ("seq", "cls") and "\t" in line for line in head):
        return TaskFileInfo(format="tsv", lines_checked=len(head))

    # 2. SAT blocks
    if any(_SAT_ANSWER.match(line) for line in head):
        return TaskFileInfo(format="sat", lines_checked=len(head))

    # 3. Google analogies
    if any(line.startswith(":") for line in head) or all(len(line.split()) == 4 for line in head):
        return TaskFileInfo(format="google", lines_checked=len(head))

    raise FormatError(f"{path}: cannot detect task format; pass --format google|sat|tsv")
