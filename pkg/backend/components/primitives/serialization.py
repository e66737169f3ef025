"""
Text formats for classes and samples: one 0/1 hypothesis per line, samples as ``point,label`` CSV.
"""

import io
from pathlib import Path
from typing import Union

import pandas as pd

from backend.components.primitives.domain import Domain, HypothesisClass, LabeledSample
from backend.core.errors import StabilityLabError


def dump_class(hclass: HypothesisClass) -> str:
    return "\n".join(hclass.to_lines()) + "\n"


def load_class(text: str, name: str = "text") -> HypothesisClass:
    return HypothesisClass.from_lines(text.splitlines(), name=name)


def dump_sample(sample: LabeledSample) -> str:
    frame = pd.DataFrame(list(sample.pairs), columns=["point", "label"])
    return frame.to_csv(index=False, lineterminator="\n")


def load_sample(source: Union[str, Path], domain: Domain) -> LabeledSample:
    """Read ``point,label`` rows from a CSV path or CSV text."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and Path(source).exists()):
        frame = pd.read_csv(source)
    else:
        frame = pd.read_csv(io.StringIO(source))
    if list(frame.columns) != ["point", "label"]:
        raise StabilityLabError(f"sample CSV needs columns point,label; got {list(frame.columns)}")
    pairs = tuple((int(x), int(y)) for x, y in frame.itertuples(index=False))
    return LabeledSample(domain, pairs)
