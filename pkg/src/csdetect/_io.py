import os
import tempfile
from pathlib import Path


def read_text(stream):
    """Return the full text of ``stream``.

    Accepts ``str``, ``bytes``, a text or binary file object, or a path.
    """
    if isinstance(stream, str):
        return stream
    if isinstance(stream, (bytes, bytearray)):
        return bytes(stream).decode("utf-8")
    if isinstance(stream, Path):
        return stream.read_text(encoding="utf-8")
    data = stream.read()
    if isinstance(data, bytes):
        return data.decode("utf-8")
    return data


def source_name(stream, default=None):
    if isinstance(stream, Path):
        return str(stream)
    if hasattr(stream, "read"):
        name = getattr(stream, "name", None)
        return name if isinstance(name, str) else default
    return default


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a temp file in the same directory + rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
