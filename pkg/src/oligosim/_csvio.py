"""Shared CSV output helper: every writer accepts a path or an open text stream."""
import contextlib
import csv


@contextlib.contextmanager
def csv_writer(target):
    if hasattr(target, "write"):
        yield csv.writer(target, lineterminator="\n")
        return
    with open(target, "w", newline="") as fh:
        yield csv.writer(fh, lineterminator="\n")
