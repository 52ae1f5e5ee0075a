import json

import pytest

from conftest import gen
from moldsched.alloc_special import recognize_sp
from moldsched.core import ValidationError, validate_monotonicity
from moldsched.instances import (
    ConfigError,
    GeneratorConfig,
    InstanceParseError,
    LowerBoundBundle,
    check_bundle,
    dumps,
    generate,
    load,
    load_bundle,
    loads,
    lower_bound_bundle,
    save,
)

KINDS = ["random-dag", "sp", "tree", "independent"]


def test_independent_has_no_edges():
    assert gen("independent", 4, 2, 0).edges == ()


@pytest.mark.parametrize("kind", KINDS)
def test_same_seed_same_bytes(kind):
    a = dumps(gen(kind, 7, 3, 99))
    assert a == dumps(gen(kind, 7, 3, 99))
    assert a != dumps(gen(kind, 7, 3, 100))


@pytest.mark.parametrize("seed", range(100))
def test_round_trip(tmp_path, seed):
    inst = gen(KINDS[seed % 4], 1 + seed % 8, 1 + seed % 4, seed)
    path = tmp_path / "x.json"
    save(inst, path)
    assert load(path) == inst
    assert path.read_text() == dumps(inst)


@pytest.mark.parametrize("seed", range(30))
def test_profiles_monotone_and_sp_kinds_recognised(seed):
    for kind in KINDS:
        inst = gen(kind, 8, 1 + seed % 5, seed)
        assert all(validate_monotonicity(j.profile) == [] for j in inst.jobs)
        assert all(t.denominator <= 1000 for j in inst.jobs for _, t in j.profile.alternatives)
        if kind != "random-dag":
            recognize_sp(inst)


def test_config_errors():
    with pytest.raises(ConfigError):
        generate(GeneratorConfig("lowerbound", d=2, M=10))
    with pytest.raises(ConfigError):
        generate(GeneratorConfig("sp", n=1))
    with pytest.raises(ConfigError):
        generate(GeneratorConfig("grid"))
    with pytest.raises(ConfigError):
        generate(GeneratorConfig("tree", cap_min=5, cap_max=4))


@pytest.mark.parametrize("d,M", [(1, 3), (1, 9), (2, 9), (2, 12), (3, 30), (4, 6)])
def test_lower_bound_contract(d, M):
    b = lower_bound_bundle(d, M)
    inst = b.instance
    assert inst.n == 2 * M * d and inst.resources.capacities == (2,) * d
    assert all(len(j.profile) == 1 and sum(j.profile.allocs()[0]) == 1 for j in inst.jobs)
    assert all(len(p) <= 1 for p in inst.preds)
    assert check_bundle(b) == (M + d - 1, M * d + M // 3)


def test_bundle_round_trip(tmp_path):
    b = generate(GeneratorConfig("lowerbound", d=2, M=9))
    assert isinstance(b, LowerBoundBundle)
    save(b, tmp_path / "lb.json")
    b2 = load_bundle(tmp_path / "lb.json")
    assert b2.instance == b.instance and b2.optimal_priority == b.optimal_priority
    assert check_bundle(b2)[1] == 21


def _base():
    return json.loads(dumps(gen("random-dag", 3, 2, 1)))


def test_parse_errors_name_the_field():
    data = _base()
    data["capacities"][1] = 2.5
    with pytest.raises(InstanceParseError, match=r"capacities\[1\]"):
        loads(json.dumps(data))
    data = _base()
    data["jobs"][2]["alternatives"][0]["time"] = 3
    with pytest.raises(InstanceParseError, match=r"jobs\[2\]\.alternatives\[0\]\.time"):
        loads(json.dumps(data))
    with pytest.raises(InstanceParseError, match="line 1"):
        loads("{oops")
    data = _base()
    del data["edges"]
    with pytest.raises(InstanceParseError, match="edges"):
        loads(json.dumps(data))


def test_invariant_failures_are_validation_errors():
    data = _base()
    data["edges"] = [["j0", "j1"], ["j1", "j2"], ["j2", "j0"]]
    with pytest.raises(ValidationError, match="cycle: j0 -> j1 -> j2 -> j0"):
        loads(json.dumps(data))
    data = _base()
    data["jobs"][0]["alternatives"] = [{"alloc": [1, 0], "time": "10/1"}, {"alloc": [2, 0], "time": "1/1"}]
    with pytest.raises(ValidationError, match="superlinear"):
        loads(json.dumps(data))
