import random

import pytest

from sivor.gauge import named_gauge
from sivor.io import (ModelFormatError, diagram_from_state, diagram_state, load_model,
                      model_bytes, model_from_bytes, save_model)
from sivor.mixture import preset_mixtures, sample_instance
from sivor.operator import run
from sivor.trainer import train
from sivor.voronoi import combinatorial_equal


def test_round_trip_is_byte_identical(small_model, tmp_path):
    _, model = small_model
    path = tmp_path / "m.sivor"
    save_model(model, path)
    back = load_model(path)
    assert model_bytes(back) == path.read_bytes()


def test_loaded_model_runs_the_same(small_model):
    mx, model = small_model
    back = model_from_bytes(model_bytes(model))
    I = sample_instance(mx, random.Random(4))
    a, sa = run(model, I, random.Random(1))
    b, sb = run(back, I, random.Random(1))
    assert combinatorial_equal(a, b)
    assert sa.depths == sb.depths and sa.R_size == sb.R_size


def test_same_seed_same_bytes():
    mx = preset_mixtures("low_entropy", 9, 2, seed=6)
    a = train(mx, 9, 2, 0.5, named_gauge("triangle"), seed=6)
    b = train(mx, 9, 2, 0.5, named_gauge("triangle"), seed=6)
    assert model_bytes(a) == model_bytes(b)


def test_diagram_state_round_trip(small_model):
    _, model = small_model
    d = diagram_from_state(diagram_state(model.vorS), model.gauge, model.frame)
    assert combinatorial_equal(d, model.vorS)


@pytest.mark.parametrize("damage", ["magic", "truncate", "flip", "trail"])
def test_damaged_files_are_rejected(small_model, damage):
    _, model = small_model
    data = bytearray(model_bytes(model))
    if damage == "magic":
        data[0] ^= 0xFF
    elif damage == "truncate":
        data = data[:-10]
    elif damage == "flip":
        data[-5] ^= 0x01
    else:
        data += b"x"
    with pytest.raises(ModelFormatError):
        model_from_bytes(bytes(data))
