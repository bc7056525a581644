"""Persistent Python session driven over JSON lines.

Requests arrive on stdin as {"id", "code"}; one response per request is
written to the original stdout as {"id", "status", "stdout", "stderr",
"truncated"}. While a cell runs, fd 1 and fd 2 point at temp files so output
from subprocesses is captured too.
"""

import ast
import json
import os
import sys
import tempfile
import traceback

CAP = 1 << 20


def _read_capped(f):
    f.flush()
    f.seek(0)
    data = f.read(CAP + 1)
    return data[:CAP].decode("utf-8", "replace"), len(data) > CAP


def _format_error(exc):
    if isinstance(exc, SyntaxError):
        return "".join(traceback.format_exception_only(type(exc), exc))
    tb = exc.__traceback__
    while tb is not None and tb.tb_frame.f_code.co_filename != "<cell>":
        tb = tb.tb_next
    return "".join(traceback.format_exception(type(exc), exc, tb))


def _run(source, ns):
    tree = ast.parse(source, "<cell>", "exec")
    last = None
    if tree.body and isinstance(tree.body[-1], ast.Expr):
        last = ast.Expression(tree.body.pop().value)
    exec(compile(tree, "<cell>", "exec"), ns)
    if last is not None:
        value = eval(compile(last, "<cell>", "eval"), ns)
        if value is not None:
            ns["_"] = value
            print(repr(value))


def _execute(source, ns):
    with tempfile.TemporaryFile() as out, tempfile.TemporaryFile() as err:
        sys.stdout.flush()
        sys.stderr.flush()
        saved = os.dup(1), os.dup(2)
        os.dup2(out.fileno(), 1)
        os.dup2(err.fileno(), 2)
        status = "ok"
        try:
            _run(source, ns)
        except KeyboardInterrupt as exc:
            status = "interrupted"
            sys.stderr.write(_format_error(exc))
        except BaseException as exc:
            status = "error"
            sys.stderr.write(_format_error(exc))
        finally:
            sys.stdout.flush()
            sys.stderr.flush()
            os.dup2(saved[0], 1)
            os.dup2(saved[1], 2)
            os.close(saved[0])
            os.close(saved[1])
        stdout, t1 = _read_capped(out)
        stderr, t2 = _read_capped(err)
    return {"status": status, "stdout": stdout, "stderr": stderr, "truncated": t1 or t2}


def main():
    ctl_in = os.fdopen(os.dup(0), "r", encoding="utf-8")
    ctl_out = os.fdopen(os.dup(1), "w", encoding="utf-8")
    null = os.open(os.devnull, os.O_RDWR)
    os.dup2(null, 0)
    os.dup2(null, 1)
    sys.stdin = open(os.devnull)
    ns = {"__name__": "__main__", "__builtins__": __builtins__}
    while True:
        try:
            line = ctl_in.readline()
        except KeyboardInterrupt:
            continue
        if not line:
            return
        req = json.loads(line)
        resp = _execute(req["code"], ns)
        resp["id"] = req["id"]
        ctl_out.write(json.dumps(resp) + "\n")
        ctl_out.flush()


if __name__ == "__main__":
    main()
