import pytest

from drawauction import config
from drawauction.model import BimodalSpec, SpecificationError

TEXT = """
# prior
a = 0.2
b = 0.6
eps = 0
p1 = 0.9
p2 = 0.1
n = 5
low = 0,0.2
high = 0.6,1
seed = 7
iters = 1000
mode = robustness
"""


def test_parse():
    v = config.parse(TEXT)
    assert v["a"] == 0.2 and v["n"] == 5 and v["low"] == (0.0, 0.2) and v["mode"] == "robustness"
    assert config.spec_from(v) == BimodalSpec(0.2, 0.6, 0.0, 0.9, 0.1)
    s = config.sampler_from(v)
    assert (s.n, s.p, s.high, s.seed) == (5, 0.1, (0.6, 1.0), 7)


def test_roundtrip(tmp_path):
    spec = BimodalSpec(0.2, 0.6, 0.0, 0.9, 0.1)
    sampler = spec.sampler(4, seed=3)
    path = tmp_path / "c.cfg"
    path.write_text(config.dumps(spec, sampler, iters=10))
    v = config.load(path)
    assert config.spec_from(v) == spec
    assert config.sampler_from(v) == sampler


def test_errors():
    with pytest.raises(SpecificationError):
        config.parse("colour = red")
    with pytest.raises(SpecificationError):
        config.parse("a = x")
    with pytest.raises(SpecificationError):
        config.parse("low = 1")
    with pytest.raises(SpecificationError):
        config.spec_from({"a": 0.2})
