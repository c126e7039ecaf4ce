import pytest

from labelvote import LabelSchema, Sample


@pytest.fixture
def sentiment():
    return LabelSchema("sentiment", ("positive", "negative", "neutral"))


@pytest.fixture
def toxicity():
    return LabelSchema("toxicity", ("toxic", "non-toxic"))


def make_samples(n: int, n_labels: int = 3, prefix: str = "text") -> list[Sample]:
    return [Sample(str(i), f"{prefix} {i}", gold_label=i % n_labels) for i in range(n)]
