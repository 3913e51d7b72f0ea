"""Collects the PASS/FAIL lines printed at the end of a test run."""

LINES = []


def record(number: int, ok: bool, detail: str) -> str:
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    LINES.append(line)
    print(line)
    return line
