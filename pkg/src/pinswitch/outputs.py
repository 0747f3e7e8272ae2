"""Atomic file output, sectioned summaries and gnuplot scripts."""

import configparser
import io
import os
import tempfile
from pathlib import Path


def atomic_write(path, text):
    """Write ``text`` to ``path`` via a temp file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.12g}"
    if isinstance(v, (list, tuple)):
        return ", ".join(_fmt(x) for x in v)
    if v is None:
        return "none"
    if hasattr(v, "tolist"):
        return _fmt(v.tolist())
    return str(v)


def summary_text(sections):
    """Render ``{section: {key: value}}`` as INI-style text."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    for name, items in sections.items():
        cp[name] = {k: _fmt(v) for k, v in items.items()}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def read_summary(path):
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp.read(path)
    return {s: dict(cp[s]) for s in cp.sections()}


def gnuplot_script(csv_name, title, ylabel="varsigma(t)", logscale=True):
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set title '{title}'",
        "set xlabel 't'",
        f"set ylabel '{ylabel}'",
    ]
    if logscale:
        lines.append("set logscale y")
    lines.append(f"plot '{csv_name}' using 1:3 with lines")
    return "\n".join(lines) + "\n"
