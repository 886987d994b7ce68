"""Rewrite fixtures/golden/*.json from the current CLI. Review the diff before committing."""

import io
import json
import os
import sys
from pathlib import Path

from bayesdec.cli import run

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def main() -> int:
    manifest = json.loads((FIXTURES / "manifest.json").read_text())
    os.chdir(FIXTURES)
    for case in manifest["cases"]:
        out, err = io.StringIO(), io.StringIO()
        code = run(manifest["flags"] + case["args"], out, err)
        if code != 0:
            print(f"{case['name']}: exit {code}: {err.getvalue()}", file=sys.stderr)
            return 1
        (FIXTURES / "golden" / f"{case['name']}.json").write_text(out.getvalue(), encoding="utf-8")
        print(f"wrote {case['name']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
