import json

import pytest

from tmsl.machine import (
    ACCEPT, DETECT_A0, DETECT_A1, DETECT_A_INPUTS, LEFT, REJECT, RIGHT, STAY, MachineSpec, SpecError,
    TapeWindow, UtmState, WindowOverflowError, descr_head_position, description_tape, machine_from_rows,
    tm_run, tm_trace, utm_run_cycles, utm_step, UtmConfiguration,
)

DETECT_OUTPUTS = {"A": ACCEPT, "B": REJECT, "AB": ACCEPT, "BA": ACCEPT, "AA": ACCEPT, "BB": REJECT}


@pytest.mark.parametrize("spec", [DETECT_A0, DETECT_A1])
def test_detect_machines_compute_detect_a(spec):
    for x in DETECT_A_INPUTS:
        assert tm_run(x, spec, 2) == DETECT_OUTPUTS[x]
        assert utm_run_cycles(x, spec, 2) == DETECT_OUTPUTS[x]


def test_zero_steps_returns_initial_state():
    assert tm_run("BA", DETECT_A0, 0) == DETECT_A0.init_state
    assert utm_run_cycles("BA", DETECT_A0, 0) == DETECT_A0.init_state


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        tm_run("A", DETECT_A0, -1)


def test_sizes():
    assert (DETECT_A0.n, DETECT_A0.m, DETECT_A0.N, DETECT_A0.period) == (3, 2, 6, 66)
    assert len(description_tape(DETECT_A0)) == 5 * 6 + 2


def test_description_order_keys():
    assert [DETECT_A0.key(a) for a in range(6)] == [(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)]
    assert DETECT_A0.index(2, 0) == 4


def test_trace_moves_head():
    trace = tm_trace("BA", DETECT_A0, 2)
    tape, state = trace[1]
    assert state == REJECT and tape.read() == 1


def test_window_overflow():
    w = TapeWindow.from_input((1,), 1)
    w = w.move(RIGHT)
    with pytest.raises(WindowOverflowError):
        w.move(RIGHT)


def test_window_reads_blank_outside():
    w = TapeWindow.from_input((1, 2), 2)
    assert w.read(-1) == 0 and w.read(1) == 2 and w.read(99) == 0


def test_descr_head_walk():
    N = 6
    assert descr_head_position(0, N) == 1
    assert descr_head_position(5 * N, N) == 5 * N + 1
    assert descr_head_position(10 * N + 5, N) == 0


def test_one_cycle_ends_in_comp_symbol():
    cfg = UtmConfiguration.initial("A", DETECT_A0, 1)
    for _ in range(DETECT_A0.period):
        cfg = utm_step(cfg, DETECT_A0)
    assert cfg.utm_state == UtmState.COMP_SYMBOL
    assert cfg.staging == (None, None, None)
    assert cfg.state == ACCEPT


def test_json_round_trip(tmp_path):
    path = tmp_path / "m.json"
    DETECT_A1.dump(path)
    assert MachineSpec.load(path) == DETECT_A1


def test_malformed_json_reports_location(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"alphabet": [')
    with pytest.raises(SpecError, match="line 1"):
        MachineSpec.load(path)


def test_missing_and_duplicate_rows():
    doc = DETECT_A0.to_dict()
    doc["transitions"] = doc["transitions"][:-1]
    with pytest.raises(SpecError, match="missing"):
        MachineSpec.from_dict(doc)
    doc = DETECT_A0.to_dict()
    doc["transitions"].append(doc["transitions"][0])
    with pytest.raises(SpecError, match="duplicate"):
        MachineSpec.from_dict(doc)


def test_bad_values_rejected():
    with pytest.raises(SpecError):
        machine_from_rows(["_"], ["reject", "accept"], [(0, 0, 5), (0, 0, STAY)])
    with pytest.raises(SpecError):
        machine_from_rows(["_"], ["reject"], [(0, 0, STAY)])
    doc = DETECT_A0.to_dict()
    doc["transitions"][0]["move"] = "U"
    with pytest.raises(SpecError):
        MachineSpec.from_dict(doc)


def test_encode_input():
    assert DETECT_A0.encode_input("BA") == (2, 1)
    assert DETECT_A0.encode_input(["A", 2]) == (1, 2)
    with pytest.raises(SpecError):
        DETECT_A0.encode_input("C")


def test_staging_reset_between_cycles():
    # a left move leaves the staging tape empty for the next scan
    spec = machine_from_rows(["_", "A"], ["reject", "accept"],
                             [(1, ACCEPT, LEFT), (0, REJECT, STAY), (0, ACCEPT, RIGHT), (1, REJECT, STAY)])
    for x in ("", "A", "AA"):
        for t in range(4):
            assert utm_run_cycles(x, spec, t) == tm_run(x, spec, t)
