"""Plain-text tensor files and JSON witness files.

A distribution file looks like

    # any comment
    dims: 2 2
    names: X Y
    0.375 0.125
    0.125 0.375

`dims:` lists the alphabet sizes, the optional `names:` line labels the
variables, `#` starts a comment line, and the remaining tokens are exactly
prod(dims) probabilities in row-major order (last index fastest). Writes
use 17 significant digits, so write -> parse reproduces a float64 tensor
bit-exactly.

A witness file is a JSON object {"w_prior": [...], "channels": [[[...]]]}
describing a product auxiliary model; json serializes floats through repr,
which also round-trips exactly.
"""
from __future__ import annotations

import json
import math

import numpy as np

from .dist import JointPMF
from .errors import CommonInfoError, ParseError
from .models import AuxModel


def parse_distfile(text: str) -> JointPMF:
    """Parse distribution-file text; raises ParseError with a line number."""
    dims = None
    names = None
    vals = []
    last = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        last = lineno
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("dims:"):
            if dims is not None:
                raise ParseError(lineno, "duplicate dims header")
            if vals:
                raise ParseError(lineno, "dims header after probabilities")
            toks = line[5:].split()
            if not toks:
                raise ParseError(lineno, "empty dims header")
            try:
                dims = tuple(int(t) for t in toks)
            except ValueError:
                raise ParseError(lineno, f"bad dimension among {toks}")
            if any(s < 1 for s in dims):
                raise ParseError(lineno, f"sizes must be >= 1, got {dims}")
            continue
        if line.startswith("names:"):
            if names is not None:
                raise ParseError(lineno, "duplicate names header")
            if dims is None:
                raise ParseError(lineno, "names header before dims")
            names = tuple(line[6:].split())
            if len(names) != len(dims):
                raise ParseError(
                    lineno, f"expected {len(dims)} names, got {len(names)}")
            continue
        if dims is None:
            raise ParseError(lineno, "expected a dims header first")
        for tok in line.split():
            try:
                vals.append(float(tok))
            except ValueError:
                raise ParseError(lineno, f"bad probability token {tok!r}")
        if len(vals) > math.prod(dims):
            raise ParseError(
                lineno, f"more than {math.prod(dims)} probabilities")
    if dims is None:
        raise ParseError(last, "missing dims header")
    want = math.prod(dims)
    if len(vals) != want:
        raise ParseError(
            last, f"expected {want} probabilities, found {len(vals)}")
    try:
        return JointPMF.from_tensor(
            np.asarray(vals, dtype=np.float64).reshape(dims), names)
    except CommonInfoError as exc:
        # normalization/negativity failures are file problems too
        raise ParseError(last, str(exc)) from exc


def format_distfile(pmf: JointPMF, comment=None) -> str:
    lines = []
    if comment:
        lines.extend("# " + c for c in str(comment).splitlines())
    lines.append("dims: " + " ".join(str(s) for s in pmf.sizes))
    if pmf.spec.names:
        lines.append("names: " + " ".join(pmf.spec.names))
    width = pmf.sizes[-1]
    flat = pmf.probs
    for start in range(0, flat.shape[0], width):
        lines.append(" ".join("%.17g" % v for v in flat[start:start + width]))
    return "\n".join(lines) + "\n"


def read_distfile(path) -> JointPMF:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_distfile(fh.read())


def write_distfile(path, pmf: JointPMF, comment=None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_distfile(pmf, comment))


def aux_to_jsonable(aux: AuxModel) -> dict:
    return {
        "w_prior": aux.w_prior.tolist(),
        "channels": [c.tolist() for c in aux.channels],
    }


def aux_from_jsonable(obj) -> AuxModel:
    try:
        prior = obj["w_prior"]
        channels = obj["channels"]
    except (TypeError, KeyError) as exc:
        raise ParseError(0, "witness needs w_prior and channels") from exc
    try:
        return AuxModel(
            np.asarray(prior, dtype=np.float64),
            tuple(np.asarray(c, dtype=np.float64) for c in channels))
    except (CommonInfoError, ValueError) as exc:
        raise ParseError(0, str(exc)) from exc


def read_witness(path) -> AuxModel:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.lineno, exc.msg) from exc
    return aux_from_jsonable(obj)


def write_witness(path, aux: AuxModel):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(aux_to_jsonable(aux), fh, indent=1)
        fh.write("\n")
