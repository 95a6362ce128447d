"""Matrix Market export and import of assembled operators"""

from pathlib import Path
from typing import Dict, Union

import scipy.io
import scipy.sparse
import structlog

logger = structlog.get_logger()

OPERATOR_NAMES = ("A", "B", "Mp", "Mu")


def write_operators(operators: Dict[str, scipy.sparse.spmatrix], directory: Union[str, Path]) -> Dict[str, Path]:
    """
    Write each operator to ``<directory>/<name>.mtx``

    Returns:
        Mapping from operator name to written path
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = {}
    for name, matrix in sorted(operators.items()):
        path = directory / f"{name}.mtx"
        scipy.io.mmwrite(str(path), scipy.sparse.coo_matrix(matrix), precision=17)
        written[name] = path
    logger.info("operators_exported", directory=str(directory), names=sorted(written))
    return written


def read_operators(directory: Union[str, Path]) -> Dict[str, scipy.sparse.csr_matrix]:
    directory = Path(directory)
    out = {}
    for name in OPERATOR_NAMES:
        path = directory / f"{name}.mtx"
        if path.exists():
            out[name] = scipy.sparse.csr_matrix(scipy.io.mmread(str(path)))
    return out
