import os
import tempfile
from pathlib import Path
from typing import Union

from Scripts.errors import IoFailure


def atomic_write(path: Union[str, Path], data: Union[bytes, str], module: str) -> Path:
    """
    Write data to path through a temp file in the same directory and os.replace,
    so readers never see a half-written file. OS errors become IoFailure.
    """
    path = Path(path)
    payload = data.encode("utf-8") if isinstance(data, str) else data
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
            os.replace(tmp_name, path)
        except BaseException:
            if os.path.exists(tmp_name):
                os.remove(tmp_name)
            raise
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}", module=module) from exc
    return path
