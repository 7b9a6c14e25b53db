"""Append-only event journal.

Every row is a flat dict: simulation time in microseconds, originating
node (or -1 for run-level rows), an event kind, and kind-specific
fields.  Rows are kept in emission order, which the deterministic
scheduler makes reproducible, so a dump is byte-stable across runs with
the same seed.  Metrics can be recomputed offline from a dump alone.
"""

import json
from typing import Iterator, Optional

RUN_LEVEL = -1


class Trace:
    def __init__(self):
        self.rows = []

    def emit(self, t_us: float, node: int, kind: str, detail: Optional[dict] = None):
        row = {"t_us": float(t_us), "node": int(node), "kind": kind}
        if detail:
            row.update(detail)
        self.rows.append(row)

    def of_kind(self, kind: str, node: Optional[int] = None) -> Iterator[dict]:
        for row in self.rows:
            if row["kind"] == kind and (node is None or row["node"] == node):
                yield row

    def write_jsonl(self, path):
        with open(path, "w") as fh:
            for row in self.rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")

    @staticmethod
    def read_jsonl(path) -> "Trace":
        trace = Trace()
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    trace.rows.append(json.loads(line))
        return trace

    def __len__(self):
        return len(self.rows)
