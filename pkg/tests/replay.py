"""Replays CR counterexamples through the command line entry point."""

import contextlib
import io
import os
import tempfile

from graphagg import cli
from graphagg.fileio import write_profile_file
from graphagg.graphs import GraphProperty


def run_cli(argv):
    """(exit code, stdout, stderr) of an in-process CLI call."""
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = cli.main([str(a) for a in argv])
    return code, out.getvalue(), err.getvalue()


def replay_cr(rule, verdict, constraint, atoms=None) -> bool:
    """True iff ``aggregate`` on the saved witness reports the violation (exit 1)."""
    if verdict.witness is None:
        return False
    level = verdict.info["level"]
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "witness.txt")
        write_profile_file(path, verdict.witness.profiles[0])
        argv = ["aggregate", "--rule", str(rule), "--profile", path]
        if level == "property":
            name = constraint.name if isinstance(constraint, GraphProperty) else constraint
            argv += ["--property", name]
        else:
            argv += ["--formula", str(constraint)]
            if atoms:
                argv += ["--atoms", ",".join(atoms)]
            if level != "frame":
                vals = verdict.witness.extra["valuation"]
                argv += ["--check", "global" if level == "model" else "world:" + verdict.witness.extra["world"]]
                for a, vs in vals.items():
                    argv += ["--val", f"{a}={','.join(vs)}"]
        code, _, _ = run_cli(argv)
    return code == cli.EXIT_FAIL
