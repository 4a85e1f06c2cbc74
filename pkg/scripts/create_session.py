#!/usr/bin/env python3
"""Operator tool: create an annotation session from a run's records file.

Draws a seeded sample (default 50 items) from the parsed records and
POSTs it to a running annotation service. Print the session URL for the
annotator.

Usage:
  python scripts/create_session.py --records runs/demo/records.jsonl \
      --annotator alice --task formality --model student-tb \
      [--size 50] [--seed 0] [--url http://127.0.0.1:8000]
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--records", required=True, help="records.jsonl from a pipeline run")
    parser.add_argument("--annotator", required=True)
    parser.add_argument("--task", required=True, help="task label, e.g. formality")
    parser.add_argument("--model", required=True, help="model label, e.g. student-tb")
    parser.add_argument("--size", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--url", default="http://127.0.0.1:8000")
    args = parser.parse_args()

    items = []
    for i, line in enumerate(Path(args.records).read_text(encoding="utf-8").splitlines()):
        if not line.strip():
            continue
        record = json.loads(line)
        if not record.get("cot") or not record.get("transferred"):
            continue
        items.append(
            {
                "item_id": f"{record.get('request_digest', i)[:12]}-{record.get('sample_index', 0)}",
                "source": record["source"],
                "rationale": record["cot"],
                "transferred": record["transferred"],
                "task_label": args.task,
                "model_label": args.model,
            }
        )
    if not items:
        print("no rateable records (need cot and transferred)", file=sys.stderr)
        return 1

    body = {
        "items": items,
        "annotator_id": args.annotator,
        "size": min(args.size, len(items)),
        "seed": args.seed,
    }
    response = httpx.post(f"{args.url}/sessions", json=body, timeout=30)
    response.raise_for_status()
    payload = response.json()
    print(f"session {payload['session_id']} created ({payload['total']} items)")
    print(f"open {args.url}/?session={payload['session_id']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
